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

#include "ctguard/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>

#include "ctguard/phantom.hpp"
#include "ctguard/rng.hpp"

namespace ctguard::experiment {

namespace {

using cohort::Label;

[[noreturn]] void bad_config(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

template <class T>
T number(std::string_view key, std::string_view s) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    bad_config("bad value '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

bool boolean(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_config("bad boolean '" + std::string(s) + "' for " + std::string(key));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void note(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fixed(double v, int digits = 1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Cohort identity for cache keys: manifest, annotations and the size and
/// mtime of every file under each patient directory.
std::string manifest_identity(const std::filesystem::path& manifest_path) {
  namespace fs = std::filesystem;
  std::string id = read_text(manifest_path);
  const auto manifest = cohort::load_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  id += "\n" + read_text(base / manifest.annotations);
  for (const auto& p : manifest.patients) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(base / p.directory)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      id += "\n" + f.filename().string() + " " + std::to_string(fs::file_size(f)) + " " +
            std::to_string(fs::last_write_time(f).time_since_epoch().count());
    }
  }
  return id;
}

struct RowRef {
  std::size_t sample = 0;
  std::size_t member = 0;
};

/// Keeps `target` of `rows` chosen uniformly with `seed`, preserving order.
std::vector<RowRef> subsample(std::vector<RowRef> rows, std::size_t target, std::uint64_t seed) {
  if (rows.size() <= target) return rows;
  std::vector<std::size_t> idx(rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span(idx));
  idx.resize(target);
  std::sort(idx.begin(), idx.end());
  std::vector<RowRef> out;
  out.reserve(target);
  for (auto i : idx) out.push_back(rows[i]);
  return out;
}

/// Rows for one side of the split. Binary studies use every augmentation
/// member of every sample. Multiclass augments the tampered classes only,
/// trims each to the untampered count and then balances as `balance` does.
std::vector<RowRef> plan_rows(const std::vector<cohort::Sample>& samples, std::size_t members, bool multiclass,
                              std::uint64_t seed) {
  std::vector<RowRef> rows;
  if (!multiclass) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t m = 0; m < members; ++m) rows.push_back({i, m});
    }
    return rows;
  }
  std::map<Label, std::vector<RowRef>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto label = samples[i].label;
    const std::size_t n = label == Label::Untampered ? 1 : members;
    for (std::size_t m = 0; m < n; ++m) by_class[label].push_back({i, m});
  }
  const std::size_t n_untampered = by_class[Label::Untampered].size();
  std::size_t smallest_tampered = 0;
  bool any_tampered = false;
  for (auto label : {Label::FB, Label::FM}) {
    auto& r = by_class[label];
    if (r.empty()) continue;
    r = subsample(std::move(r), n_untampered, seed ^ static_cast<std::uint64_t>(label));
    smallest_tampered = any_tampered ? std::min(smallest_tampered, r.size()) : r.size();
    any_tampered = true;
  }
  if (any_tampered) {
    by_class[Label::Untampered] = subsample(std::move(by_class[Label::Untampered]), smallest_tampered, seed);
  }
  for (auto& [label, r] : by_class) rows.insert(rows.end(), r.begin(), r.end());
  std::sort(rows.begin(), rows.end(), [](const RowRef& a, const RowRef& b) {
    return a.sample != b.sample ? a.sample < b.sample : a.member < b.member;
  });
  return rows;
}

struct Design {
  FeatureMatrix X;
  std::vector<int> y;
};

Design materialize(const std::vector<cohort::Sample>& samples, const std::vector<RowRef>& rows,
                   const std::optional<augment::AugmentSpec>& aug, const std::map<Label, int>& class_index) {
  Design d;
  if (samples.empty() || rows.empty()) return d;
  const Eigen::Index features = samples.front().image.size();
  d.X.resize(static_cast<Eigen::Index>(rows.size()), features);
  d.y.reserve(rows.size());
  std::size_t r = 0;
  while (r < rows.size()) {
    const auto s = rows[r].sample;
    const auto& sample = samples[s];
    std::vector<ImageF> members;
    const bool need_aug = std::any_of(rows.begin() + static_cast<std::ptrdiff_t>(r), rows.end(),
                                      [&](const RowRef& x) { return x.sample == s && x.member > 0; });
    if (need_aug) members = augment::augment_image(sample.image, *aug);
    for (; r < rows.size() && rows[r].sample == s; ++r) {
      const auto& img = rows[r].member == 0 ? sample.image : members[rows[r].member];
      d.X.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXf>(img.data(), features);
      d.y.push_back(class_index.at(sample.label));
    }
  }
  return d;
}

nlohmann::ordered_json counts_json(const std::vector<int>& y, const std::vector<std::string>& names) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < names.size(); ++c) {
    j[names[c]] = std::count(y.begin(), y.end(), static_cast<int>(c));
  }
  return j;
}

nlohmann::ordered_json counts_json(const cohort::ClassCounts& c) {
  return {{"untampered", c.untampered}, {"FB", c.fb}, {"FM", c.fm}, {"total", c.total}};
}

}  // namespace

std::string_view to_string(Study study) noexcept {
  switch (study) {
    case Study::RawBinary: return "RAW_BINARY";
    case Study::Localized: return "LOCALIZED";
    case Study::LocalizedAug: return "LOCALIZED_AUG";
    case Study::NegSpace: return "NEGSPACE";
    case Study::NegSpaceAug: return "NEGSPACE_AUG";
    case Study::Multiclass: return "MULTICLASS";
  }
  return "?";
}

Study study_from_string(std::string_view s) {
  for (auto study : {Study::RawBinary, Study::Localized, Study::LocalizedAug, Study::NegSpace, Study::NegSpaceAug,
                     Study::Multiclass}) {
    if (s == to_string(study)) return study;
  }
  bad_config("unknown study '" + std::string(s) + "'");
}

std::string_view to_string(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::Tree: return "tree";
    case LearnerKind::Forest: return "forest";
    case LearnerKind::Svm: return "svm";
  }
  return "?";
}

LearnerKind learner_from_string(std::string_view s) {
  if (s == "tree") return LearnerKind::Tree;
  if (s == "forest") return LearnerKind::Forest;
  if (s == "svm") return LearnerKind::Svm;
  bad_config("unknown learner '" + std::string(s) + "'");
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  if (key == "study") {
    study = study_from_string(value);
  } else if (key == "manifest") {
    manifest = value;
  } else if (key == "phantom") {
    phantom = value;
  } else if (key == "window_low") {
    window_low = number<double>(key, value);
  } else if (key == "window_high") {
    window_high = number<double>(key, value);
  } else if (key == "crop_size") {
    crop_size = number<int>(key, value);
  } else if (key == "canvas_rows") {
    canvas_rows = number<int>(key, value);
  } else if (key == "canvas_cols") {
    canvas_cols = number<int>(key, value);
  } else if (key == "body_threshold") {
    body_threshold = number<double>(key, value);
  } else if (key == "learner") {
    learner = learner_from_string(value);
  } else if (key == "n_trees") {
    forest.n_trees = number<int>(key, value);
  } else if (key == "features_per_split") {
    forest.features_per_split = number<int>(key, value);
  } else if (key == "bootstrap") {
    forest.bootstrap = boolean(key, value);
  } else if (key == "max_depth") {
    tree.max_depth = forest.tree.max_depth = number<int>(key, value);
  } else if (key == "min_samples_leaf") {
    tree.min_samples_leaf = forest.tree.min_samples_leaf = number<int>(key, value);
  } else if (key == "kernel") {
    svm.kernel = learn::kernel_kind_from_string(value);
  } else if (key == "gamma") {
    svm.gamma = number<double>(key, value);
  } else if (key == "C") {
    svm.C = number<double>(key, value);
  } else if (key == "tol") {
    svm.tol = number<double>(key, value);
  } else if (key == "max_iter") {
    svm.max_iter = number<std::int64_t>(key, value);
  } else if (key == "seed") {
    seed = number<std::uint64_t>(key, value);
  } else if (key == "augment_test") {
    augment_test = boolean(key, value);
  } else if (key == "split") {
    split = cohort::split_policy_from_string(value);
  } else if (key == "output_root") {
    output_root = value;
  } else {
    bad_config("unknown key '" + std::string(key) + "'");
  }
}

void ExperimentConfig::validate() const {
  if (manifest.empty() == phantom.empty()) bad_config("exactly one of manifest and phantom must be set");
  if (!phantom.empty()) phantom::PhantomSpec::parse(phantom);
  regime().validate();
  if (forest.n_trees < 1) bad_config("n_trees must be >= 1");
  if (forest.features_per_split < 0) bad_config("features_per_split must be >= 0");
  if (tree.max_depth < 0) bad_config("max_depth must be >= 0");
  if (tree.min_samples_leaf < 1) bad_config("min_samples_leaf must be >= 1");
  if (!(svm.C > 0.0) || !(svm.tol > 0.0) || svm.max_iter < 1 || !std::isfinite(svm.gamma)) {
    bad_config("SVM needs C > 0, tol > 0, max_iter >= 1 and a finite gamma");
  }
  if (output_root.empty()) bad_config("output_root is empty");
}

preprocess::PreprocessRegime ExperimentConfig::regime() const {
  preprocess::PreprocessRegime r;
  switch (study) {
    case Study::RawBinary:
      r = preprocess::PreprocessRegime::raw();
      break;
    case Study::Localized:
    case Study::LocalizedAug:
      r = preprocess::PreprocessRegime::localized();
      break;
    case Study::NegSpace:
    case Study::NegSpaceAug:
    case Study::Multiclass:
      r = preprocess::PreprocessRegime::negspace();
      break;
  }
  if (window_low) r.window_low = *window_low;
  if (window_high) r.window_high = *window_high;
  if (crop_size) r.crop_size = *crop_size;
  if (canvas_rows) r.canvas_rows = *canvas_rows;
  if (canvas_cols) r.canvas_cols = *canvas_cols;
  if (body_threshold) r.body_threshold = *body_threshold;
  return r;
}

std::optional<augment::AugmentSpec> ExperimentConfig::augmentation() const {
  switch (study) {
    case Study::LocalizedAug: return augment::AugmentSpec::full();
    case Study::NegSpaceAug:
    case Study::Multiclass: return augment::AugmentSpec::flips_and_shifts();
    default: return std::nullopt;
  }
}

bool ExperimentConfig::augments_test() const {
  if (!augmentation()) return false;
  return augment_test.value_or(true);
}

std::vector<Label> ExperimentConfig::classes() const {
  switch (study) {
    case Study::RawBinary:
    case Study::Localized:
    case Study::LocalizedAug: return {Label::Untampered, Label::FM};
    case Study::NegSpace:
    case Study::NegSpaceAug: return {Label::Untampered, Label::FB};
    case Study::Multiclass: return {Label::Untampered, Label::FB, Label::FM};
  }
  return {};
}

std::vector<std::string> ExperimentConfig::class_names() const {
  std::vector<std::string> names;
  for (auto label : classes()) names.emplace_back(label == Label::Untampered ? "untampered" : cohort::to_string(label));
  return names;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["study"] = to_string(study);
  if (!manifest.empty()) j["manifest"] = manifest;
  if (!phantom.empty()) j["phantom"] = phantom::PhantomSpec::parse(phantom).describe();
  const auto r = regime();
  j["window_low"] = r.window_low;
  j["window_high"] = r.window_high;
  if (r.kind == preprocess::RegimeKind::Localized) j["crop_size"] = r.crop_size;
  if (r.kind == preprocess::RegimeKind::NegSpace) {
    j["canvas_rows"] = r.canvas_rows;
    j["canvas_cols"] = r.canvas_cols;
    j["body_threshold"] = r.body_threshold;
  }
  j["learner"] = to_string(learner);
  switch (learner) {
    case LearnerKind::Tree:
      j["max_depth"] = tree.max_depth;
      j["min_samples_leaf"] = tree.min_samples_leaf;
      break;
    case LearnerKind::Forest:
      j["n_trees"] = forest.n_trees;
      j["features_per_split"] = forest.features_per_split;
      j["bootstrap"] = forest.bootstrap;
      j["max_depth"] = forest.tree.max_depth;
      j["min_samples_leaf"] = forest.tree.min_samples_leaf;
      break;
    case LearnerKind::Svm:
      j["kernel"] = learn::to_string(svm.kernel);
      j["gamma"] = svm.gamma;
      j["C"] = svm.C;
      j["tol"] = svm.tol;
      j["max_iter"] = svm.max_iter;
      break;
  }
  j["seed"] = seed;
  j["augment_test"] = augments_test();
  j["split"] = cohort::to_string(split);
  j["output_root"] = output_root;
  return j;
}

std::uint64_t ExperimentConfig::hash() const {
  auto j = to_json();
  j.erase("output_root");
  return fnv1a(j.dump());
}

std::filesystem::path ExperimentConfig::output_dir() const {
  return std::filesystem::path(output_root) / hex64(hash());
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#' || line.front() == ';' || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) bad_config("line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    try {
      base.set(key, value);
    } catch (const Error& e) {
      bad_config("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_config(read_text(path), std::move(base));
}

ExperimentConfig config_from_json(const nlohmann::ordered_json& j) {
  ExperimentConfig c;
  if (!j.is_object()) bad_config("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    c.set(key, value.is_string() ? value.get<std::string>() : value.dump());
  }
  return c;
}

std::vector<cohort::Sample> load_samples_for(const ExperimentConfig& config, std::vector<std::string>* warnings,
                                             const Logger& log) {
  namespace fs = std::filesystem;
  const auto regime = config.regime();
  std::string identity;
  std::optional<phantom::PhantomSpec> spec;
  if (!config.phantom.empty()) {
    spec = phantom::PhantomSpec::parse(config.phantom);
    identity = "phantom:" + spec->describe();
  }

  std::optional<fs::path> cache_file;
  if (const char* root = std::getenv(std::string(kCacheEnv).c_str()); root != nullptr && *root != '\0') {
    if (!spec) identity = "manifest:" + manifest_identity(config.manifest);
    cache_file = fs::path(root) / ("samples-" + hex64(fnv1a(regime.describe() + "\n" + identity)) + ".ctgt");
  }

  const auto warnings_file = [](const fs::path& p) { return fs::path(p.string() + ".warnings.json"); };
  if (cache_file && fs::exists(*cache_file)) {
    try {
      auto file = cohort::load_samples(*cache_file);
      if (file.regime_fingerprint == regime.fingerprint()) {
        if (warnings && fs::exists(warnings_file(*cache_file))) {
          for (const auto& w : nlohmann::json::parse(read_text(warnings_file(*cache_file)))) {
            warnings->push_back(w.get<std::string>());
          }
        }
        note(log, "sample cache hit: " + cache_file->string());
        return std::move(file.samples);
      }
      note(log, "sample cache fingerprint mismatch, rebuilding: " + cache_file->string());
    } catch (const std::exception& e) {
      note(log, std::string("ignoring unreadable cache entry: ") + e.what());
    }
  }

  std::vector<std::string> local_warnings;
  std::vector<cohort::Sample> samples;
  if (spec) {
    Stopwatch t;
    const auto cohort = phantom::generate(*spec);
    note(log, "generated phantom (" + std::to_string(cohort.volumes.size()) + " patients) in " +
                  fixed(t.seconds()) + " s");
    samples = cohort::assemble(cohort.volumes, cohort.annotations, cohort.manifest, regime, &local_warnings);
  } else {
    const auto loaded = cohort::load_cohort(config.manifest, &local_warnings);
    samples = cohort::assemble(loaded.volumes, loaded.annotations, loaded.manifest, regime, &local_warnings);
  }

  if (cache_file) {
    fs::create_directories(cache_file->parent_path());
    auto tmp = *cache_file;
    tmp += ".tmp";
    cohort::save_samples(tmp, samples, regime.fingerprint());
    write_text_atomic(warnings_file(*cache_file), nlohmann::json(local_warnings).dump() + "\n");
    fs::rename(tmp, *cache_file);
    note(log, "sample cache stored: " + cache_file->string());
  }
  if (warnings) warnings->insert(warnings->end(), local_warnings.begin(), local_warnings.end());
  return samples;
}

RunResult run(const ExperimentConfig& config, const Logger& log) {
  config.validate();
  Stopwatch total;
  const auto regime = config.regime();
  const auto aug = config.augmentation();
  const auto labels = config.classes();
  const auto names = config.class_names();
  const bool multiclass = labels.size() > 2;
  std::map<Label, int> class_index;
  for (std::size_t c = 0; c < labels.size(); ++c) class_index[labels[c]] = static_cast<int>(c);

  std::vector<std::string> warnings;
  auto samples = load_samples_for(config, &warnings, log);
  const auto assembled = cohort::count_classes(samples);
  std::erase_if(samples, [&](const cohort::Sample& s) { return !class_index.contains(s.label); });
  if (samples.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no samples of the study classes");
  note(log, "samples: " + std::to_string(samples.size()) + " (" + std::string(regime.describe()) + ")");

  const std::uint64_t seed = config.seed;
  const auto plan = cohort::split(samples, config.split, seed);
  std::vector<cohort::Sample> train, test;
  for (auto i : plan.train) train.push_back(std::move(samples[i]));
  for (auto i : plan.test) test.push_back(std::move(samples[i]));
  samples.clear();
  if (!multiclass) {
    train = cohort::balance(std::move(train), seed + 1);
    test = cohort::balance(std::move(test), seed + 2);
  }
  const auto train_counts = cohort::count_classes(train);
  const auto test_counts = cohort::count_classes(test);

  const std::size_t members = aug ? aug->member_count() : 1;
  const auto train_rows = plan_rows(train, members, multiclass, seed + 3);
  const auto test_rows = plan_rows(test, config.augments_test() ? members : 1, multiclass, seed + 4);

  Stopwatch t;
  auto design = materialize(train, train_rows, aug, class_index);
  train.clear();
  if (design.y.empty()) throw Error(ErrorCode::EmptyTrainingSet, "training split is empty");
  const auto train_row_counts = counts_json(design.y, names);
  note(log, "train design " + std::to_string(design.X.rows()) + " x " + std::to_string(design.X.cols()) + " in " +
                fixed(t.seconds()) + " s");

  t = Stopwatch();
  const int k = static_cast<int>(labels.size());
  learn::Model model;
  switch (config.learner) {
    case LearnerKind::Tree:
      model = learn::fit_tree(design.X, design.y, k, config.tree);
      break;
    case LearnerKind::Forest: {
      auto params = config.forest;
      params.seed = seed;
      model = learn::fit_forest(design.X, design.y, k, params);
      break;
    }
    case LearnerKind::Svm:
      model = learn::fit_svm(design.X, design.y, k, config.svm);
      break;
  }
  note(log, std::string(to_string(config.learner)) + " trained in " + fixed(t.seconds()) + " s");
  const auto n_features = design.X.cols();
  design = {};

  const auto test_design = materialize(test, test_rows, aug, class_index);
  if (test_design.y.empty()) throw Error(ErrorCode::SingleClassEval, "test split is empty");
  auto report = eval::evaluate(model, test_design.X, test_design.y, names);
  note(log, "test accuracy " + fixed(report.accuracy, 4) + " on " + std::to_string(test_design.y.size()) + " rows");

  report.timestamp = eval::utc_timestamp();
  report.config = config.to_json();
  auto meta = nlohmann::ordered_json::object();
  meta["config_hash"] = hex64(config.hash());
  meta["data"] = config.phantom.empty() ? config.manifest : phantom::PhantomSpec::parse(config.phantom).describe();
  meta["regime"] = regime.describe();
  meta["regime_fingerprint"] = hex64(regime.fingerprint());
  meta["classes"] = names;
  meta["learner"] = to_string(config.learner);
  meta["hyperparameters"] = learn::hyperparameters(model);
  meta["n_features"] = n_features;
  meta["seeds"] = {{"seed", seed},     {"split", seed},          {"train_balance", seed + 1},
                   {"test_balance", seed + 2}, {"train_rows", seed + 3}, {"test_rows", seed + 4},
                   {"learner", seed}};
  meta["split_policy"] = cohort::to_string(config.split);
  meta["augmentation"] = {{"members", members},
                          {"train", aug.has_value()},
                          {"test", config.augments_test()},
                          {"flips", aug && aug->flips},
                          {"shifts", aug && aug->shifts},
                          {"rotations", aug && aug->rotations}};
  meta["class_counts"] = {{"assembled", counts_json(assembled)},
                          {"train_samples", counts_json(train_counts)},
                          {"test_samples", counts_json(test_counts)},
                          {"train_rows", train_row_counts},
                          {"test_rows", counts_json(test_design.y, names)}};
  for (auto& [key, value] : report.run_metadata.items()) {
    if (key != "warnings") meta[key] = value;
  }
  auto all_warnings = nlohmann::ordered_json(warnings);
  for (const auto& w : report.run_metadata.value("warnings", nlohmann::ordered_json::array())) {
    all_warnings.push_back(w);
  }
  meta["warnings"] = std::move(all_warnings);
  report.run_metadata = std::move(meta);

  const auto dir = config.output_dir();
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "model.bin", learn::serialize(model));
  nlohmann::ordered_json sidecar;
  sidecar["kind"] = learn::to_string(learn::kind_of(model));
  sidecar["n_features"] = learn::n_features(model);
  sidecar["n_classes"] = learn::n_classes(model);
  sidecar["class_names"] = names;
  sidecar["score_kind"] = learn::score_kind(model);
  sidecar["hyperparameters"] = learn::hyperparameters(model);
  sidecar["regime"] = regime.describe();
  sidecar["config_hash"] = hex64(config.hash());
  write_text_atomic(dir / "model.json", sidecar.dump(2) + "\n");
  eval::write_report(report, dir);
  note(log, "wrote " + dir.string() + " (" + fixed(total.seconds()) + " s total)");
  return {std::move(report), std::move(model), dir};
}

}  // namespace ctguard::experiment
