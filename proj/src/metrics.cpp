// Copyright 2026 The ctguard Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctguard/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "ctguard/text.hpp"

namespace ctguard::eval {

namespace {

[[noreturn]] void bad_report(const std::string& msg) { throw Error(ErrorCode::InvalidReport, msg); }

}  // namespace

std::int64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const noexcept {
  std::int64_t t = 0;
  for (int c = 0; c < k(); ++c) t += at(c, c);
  return t;
}

std::int64_t ConfusionMatrix::fp(int c) const {
  std::int64_t s = 0;
  for (int r = 0; r < k(); ++r) {
    if (r != c) s += at(r, c);
  }
  return s;
}

std::int64_t ConfusionMatrix::fn(int c) const {
  std::int64_t s = 0;
  for (int p = 0; p < k(); ++p) {
    if (p != c) s += at(c, p);
  }
  return s;
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::vector<std::string> class_names) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::DimensionMismatch, "y_true has " + std::to_string(y_true.size()) +
                                                  " labels, y_pred " + std::to_string(y_pred.size()));
  }
  ConfusionMatrix cm;
  cm.class_names = std::move(class_names);
  const int k = cm.k();
  cm.counts.assign(static_cast<std::size_t>(k * k), 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    for (int label : {y_true[i], y_pred[i]}) {
      if (label < 0 || label >= k) {
        throw Error(ErrorCode::LabelOutsideClassSet,
                    "label " + std::to_string(label) + " at index " + std::to_string(i));
      }
    }
    ++cm.counts[static_cast<std::size_t>(y_true[i] * k + y_pred[i])];
  }
  return cm;
}

PrecisionRecall precision_recall(const ConfusionMatrix& cm, int cls) {
  if (cls < 0 || cls >= cm.k()) throw Error(ErrorCode::LabelOutsideClassSet, "class " + std::to_string(cls));
  PrecisionRecall out;
  const auto tp = cm.tp(cls);
  const auto pred_pos = tp + cm.fp(cls);
  const auto true_pos = tp + cm.fn(cls);
  if (pred_pos == 0) {
    out.precision_undefined = true;
  } else {
    out.precision = static_cast<double>(tp) / static_cast<double>(pred_pos);
  }
  if (true_pos == 0) {
    out.recall_undefined = true;
  } else {
    out.recall = static_cast<double>(tp) / static_cast<double>(true_pos);
  }
  return out;
}

RocCurve roc(std::span<const int> y_true, std::span<const double> scores, int positive_class) {
  if (y_true.size() != scores.size()) {
    throw Error(ErrorCode::DimensionMismatch, "labels and scores differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorCode::FormatError, "NaN score");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::int64_t P = 0;
  for (int y : y_true) P += (y == positive_class);
  const std::int64_t N = static_cast<std::int64_t>(y_true.size()) - P;
  if (P == 0 || N == 0) {
    throw Error(ErrorCode::SingleClassEval, "class " + std::to_string(positive_class) + " has " +
                                                std::to_string(P) + " positives and " + std::to_string(N) +
                                                " negatives");
  }

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::int64_t tp = 0, fp = 0;
  // Twice the area in units of one positive-negative pair, kept exact.
  std::int64_t area2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::int64_t dtp = 0, dfp = 0;
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (y_true[order[i]] == positive_class) {
        ++dtp;
      } else {
        ++dfp;
      }
    }
    area2 += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(N),
                            static_cast<double>(tp) / static_cast<double>(P), s});
  }
  curve.auc = static_cast<double>(area2) / (2.0 * static_cast<double>(P) * static_cast<double>(N));
  return curve;
}

double trapezoid_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
  }
  return area;
}

void validate_roc(const RocCurve& curve) {
  const auto& p = curve.points;
  if (p.size() < 2) bad_report("ROC curve needs at least two points");
  if (p.front().fpr != 0.0 || p.front().tpr != 0.0) bad_report("ROC curve must start at (0,0)");
  if (p.back().fpr != 1.0 || p.back().tpr != 1.0) bad_report("ROC curve must end at (1,1)");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i].fpr >= 0.0 && p[i].fpr <= 1.0 && p[i].tpr >= 0.0 && p[i].tpr <= 1.0)) {
      bad_report("ROC point out of the unit square");
    }
    if (i > 0 && (p[i].fpr < p[i - 1].fpr || p[i].tpr < p[i - 1].tpr)) bad_report("ROC curve is not monotone");
  }
  if (std::abs(trapezoid_auc(p) - curve.auc) > 1e-9) bad_report("stored AUC disagrees with its points");
}

MetricsReport build_report(std::span<const int> y_true, const learn::DecisionScores& scores,
                           std::vector<std::string> class_names) {
  const int k = static_cast<int>(class_names.size());
  if (scores.rows() != static_cast<Eigen::Index>(y_true.size()) || scores.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "score matrix does not match labels and classes");
  }
  const auto y_pred = learn::argmax_rows(scores);

  MetricsReport report;
  report.confusion = confusion(y_true, y_pred, class_names);
  report.accuracy = report.confusion.accuracy();
  auto warnings = nlohmann::ordered_json::array();
  for (int c = 0; c < k; ++c) {
    const auto pr = precision_recall(report.confusion, c);
    if (pr.precision_undefined) warnings.push_back("precision of " + class_names[c] + " is 0/0, reported as 1");
    if (pr.recall_undefined) warnings.push_back("recall of " + class_names[c] + " is 0/0, reported as 1");
    report.per_class.push_back({class_names[static_cast<std::size_t>(c)], pr});
  }

  // Binary runs get the positive-class curve only; the negative one mirrors it.
  std::vector<int> roc_classes;
  if (k == 2) {
    roc_classes = {1};
  } else {
    for (int c = 0; c < k; ++c) roc_classes.push_back(c);
  }
  std::vector<std::optional<RocCurve>> curves(roc_classes.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < roc_classes.size(); ++i) {
      const int c = roc_classes[i];
      const bool has_pos = std::find(y_true.begin(), y_true.end(), c) != y_true.end();
      const bool has_neg = std::any_of(y_true.begin(), y_true.end(), [c](int y) { return y != c; });
      if (!has_pos || !has_neg) {
        warnings.push_back("no ROC for " + class_names[static_cast<std::size_t>(c)] +
                           ": test set lacks positives or negatives");
        continue;
      }
      workers.emplace_back([&, i, c] {
        std::vector<double> col(scores.rows());
        for (Eigen::Index r = 0; r < scores.rows(); ++r) col[static_cast<std::size_t>(r)] = scores(r, c);
        curves[i] = roc(y_true, col, c);
      });
    }
  }
  for (std::size_t i = 0; i < roc_classes.size(); ++i) {
    if (curves[i]) report.roc.emplace_back(class_names[static_cast<std::size_t>(roc_classes[i])], *curves[i]);
  }
  report.run_metadata["roc_method"] = k == 2 ? "positive_class" : "one_vs_rest";
  report.run_metadata["warnings"] = std::move(warnings);
  return report;
}

MetricsReport evaluate(const learn::Model& model, const FeatureMatrix& X, std::span<const int> y_true,
                       std::vector<std::string> class_names) {
  if (learn::n_classes(model) != static_cast<int>(class_names.size())) {
    throw Error(ErrorCode::DimensionMismatch, "model class count differs from class names");
  }
  auto report = build_report(y_true, learn::scores(model, X), std::move(class_names));
  report.run_metadata["score_kind"] = learn::score_kind(model);
  return report;
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["timestamp"] = report.timestamp;
  j["config"] = report.config;
  j["run_metadata"] = report.run_metadata;
  j["accuracy"] = report.accuracy;
  auto per_class = nlohmann::ordered_json::object();
  for (const auto& m : report.per_class) {
    per_class[m.name] = {{"precision", m.pr.precision},
                         {"recall", m.pr.recall},
                         {"precision_undefined", m.pr.precision_undefined},
                         {"recall_undefined", m.pr.recall_undefined}};
  }
  j["per_class"] = std::move(per_class);
  auto rows = nlohmann::ordered_json::array();
  const auto& cm = report.confusion;
  for (int r = 0; r < cm.k(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (int c = 0; c < cm.k(); ++c) row.push_back(cm.at(r, c));
    rows.push_back(std::move(row));
  }
  j["confusion"] = {{"class_names", cm.class_names}, {"counts", std::move(rows)}};
  auto roc_j = nlohmann::ordered_json::object();
  for (const auto& [name, curve] : report.roc) {
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : curve.points) {
      nlohmann::ordered_json thr = std::isinf(p.threshold) ? nlohmann::ordered_json(nullptr)
                                                            : nlohmann::ordered_json(p.threshold);
      pts.push_back({p.fpr, p.tpr, thr});
    }
    roc_j[name] = {{"auc", curve.auc}, {"points", std::move(pts)}};
  }
  j["roc"] = std::move(roc_j);
  return j;
}

MetricsReport report_from_json(const nlohmann::ordered_json& j) {
  MetricsReport r;
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) bad_report("unsupported schema_version");
    r.timestamp = j.at("timestamp").get<std::string>();
    r.config = j.at("config");
    r.run_metadata = j.at("run_metadata");
    r.accuracy = j.at("accuracy").get<double>();
    const auto& cmj = j.at("confusion");
    r.confusion.class_names = cmj.at("class_names").get<std::vector<std::string>>();
    const auto k = r.confusion.class_names.size();
    const auto& rows = cmj.at("counts");
    if (rows.size() != k) bad_report("confusion matrix is not k x k");
    for (const auto& row : rows) {
      if (row.size() != k) bad_report("confusion matrix is not k x k");
      for (const auto& v : row) {
        const auto count = v.get<std::int64_t>();
        if (count < 0) bad_report("negative confusion count");
        r.confusion.counts.push_back(count);
      }
    }
    if (r.accuracy != r.confusion.accuracy()) bad_report("accuracy does not equal trace/total");
    const auto& pcj = j.at("per_class");
    if (pcj.size() != k) bad_report("per_class does not cover every class");
    for (std::size_t c = 0; c < k; ++c) {
      const auto& name = r.confusion.class_names[c];
      const auto& e = pcj.at(name);
      ClassMetrics m{name, {}};
      m.pr.precision = e.at("precision").get<double>();
      m.pr.recall = e.at("recall").get<double>();
      m.pr.precision_undefined = e.at("precision_undefined").get<bool>();
      m.pr.recall_undefined = e.at("recall_undefined").get<bool>();
      const auto expect = precision_recall(r.confusion, static_cast<int>(c));
      if (m.pr.precision != expect.precision || m.pr.recall != expect.recall ||
          m.pr.precision_undefined != expect.precision_undefined || m.pr.recall_undefined != expect.recall_undefined) {
        bad_report("precision/recall of " + name + " disagree with the confusion matrix");
      }
      r.per_class.push_back(std::move(m));
    }
    for (const auto& [name, cj] : j.at("roc").items()) {
      if (std::find(r.confusion.class_names.begin(), r.confusion.class_names.end(), name) ==
          r.confusion.class_names.end()) {
        bad_report("ROC for unknown class " + name);
      }
      RocCurve curve;
      curve.auc = cj.at("auc").get<double>();
      for (const auto& p : cj.at("points")) {
        if (p.size() != 3) bad_report("ROC point must be [fpr, tpr, threshold]");
        curve.points.push_back({p[0].get<double>(), p[1].get<double>(),
                                p[2].is_null() ? std::numeric_limits<double>::infinity() : p[2].get<double>()});
      }
      validate_roc(curve);
      r.roc.emplace_back(name, std::move(curve));
    }
  } catch (const nlohmann::json::exception& e) {
    bad_report(e.what());
  }
  return r;
}

MetricsReport load_report(const std::filesystem::path& path) {
  const auto text = read_text(path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad_report(path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    out += shortest(p.threshold) + "," + shortest(p.fpr) + "," + shortest(p.tpr) + "\n";
  }
  return out;
}

std::string roc_svg(const RocCurve& curve, const std::string& title) {
  constexpr double size = 320.0, margin = 48.0;
  const auto px = [&](double v) { return margin + v * size; };
  const auto py = [&](double v) { return margin + (1.0 - v) * size; };
  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin << "\" height=\""
    << size + 2 * margin << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
    << "\" stroke=\"#aaa\" stroke-dasharray=\"4 4\"/>\n";
  s << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
  for (const auto& p : curve.points) s << px(p.fpr) << "," << py(p.tpr) << " ";
  s << "\"/>\n";
  s << "<text x=\"" << margin << "\" y=\"" << margin - 16 << "\">" << title << " (AUC " << curve.auc << ")</text>\n";
  s << "<text x=\"" << px(0.5) << "\" y=\"" << py(0) + 32 << "\" text-anchor=\"middle\">false positive rate</text>\n";
  s << "<text x=\"" << margin - 28 << "\" y=\"" << py(0.5) << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
    << margin - 28 << " " << py(0.5) << ")\">true positive rate</text>\n";
  s << "</svg>\n";
  return s.str();
}

void write_report(const MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "report.json", to_json(report).dump(2) + "\n");
  for (const auto& [name, curve] : report.roc) {
    write_text_atomic(dir / ("roc_" + name + ".csv"), roc_csv(curve));
    write_text_atomic(dir / ("roc_" + name + ".svg"), roc_svg(curve, "ROC " + name));
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace ctguard::eval
