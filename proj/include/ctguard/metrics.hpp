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

#pragma once

// Evaluation surface: confusion matrices, precision/recall, one-vs-rest ROC
// curves and the schema-versioned report written for every run.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ctguard/learners.hpp"

namespace ctguard::eval {

inline constexpr int kReportSchemaVersion = 1;

struct ConfusionMatrix {
  /// Row-major k x k; rows are true classes, columns predictions.
  std::vector<std::int64_t> counts;
  std::vector<std::string> class_names;

  int k() const noexcept { return static_cast<int>(class_names.size()); }
  std::int64_t at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth * k() + pred)]; }
  std::int64_t total() const noexcept;
  std::int64_t trace() const noexcept;
  std::int64_t tp(int c) const { return at(c, c); }
  std::int64_t fp(int c) const;
  std::int64_t fn(int c) const;
  std::int64_t tn(int c) const { return total() - tp(c) - fp(c) - fn(c); }
  double accuracy() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Labels are indices into `class_names`.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::vector<std::string> class_names);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_undefined = false;  ///< TP + FP == 0, reported as 1
  bool recall_undefined = false;     ///< TP + FN == 0, reported as 1
};

PrecisionRecall precision_recall(const ConfusionMatrix& cm, int cls);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  ///< predict positive when score >= threshold

  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;

  bool operator==(const RocCurve&) const = default;
};

/// One point per distinct score, swept from the highest down, preceded by
/// (0,0) at +inf. Throws SingleClassEval unless both sides are present.
RocCurve roc(std::span<const int> y_true, std::span<const double> scores, int positive_class);

double trapezoid_auc(std::span<const RocPoint> points);

/// Checks ordering, endpoints and the stored AUC; throws InvalidReport.
void validate_roc(const RocCurve& curve);

struct ClassMetrics {
  std::string name;
  PrecisionRecall pr;
};

struct MetricsReport {
  std::string timestamp;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json run_metadata = nlohmann::ordered_json::object();
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix confusion;
  /// One-vs-rest curves keyed by class name, in class order.
  std::vector<std::pair<std::string, RocCurve>> roc;
};

/// Builds the metric fields from predictions and per-class scores. Classes
/// with no positive or no negative test sample get no curve and a warning.
MetricsReport build_report(std::span<const int> y_true, const learn::DecisionScores& scores,
                           std::vector<std::string> class_names);

/// Scores `X` with `model` and builds the report; records the score kind.
MetricsReport evaluate(const learn::Model& model, const FeatureMatrix& X, std::span<const int> y_true,
                       std::vector<std::string> class_names);

nlohmann::ordered_json to_json(const MetricsReport& report);
/// Re-validates every invariant; throws InvalidReport.
MetricsReport report_from_json(const nlohmann::ordered_json& j);
MetricsReport load_report(const std::filesystem::path& path);

std::string roc_csv(const RocCurve& curve);
std::string roc_svg(const RocCurve& curve, const std::string& title);

/// report.json plus roc_<class>.csv and roc_<class>.svg.
void write_report(const MetricsReport& report, const std::filesystem::path& dir);

std::string utc_timestamp();

}  // namespace ctguard::eval
