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

// End-to-end study runner: data (cohort manifest or phantom) -> samples ->
// split and balance -> augmentation -> learner -> report artifacts.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctguard/augment.hpp"
#include "ctguard/cohort.hpp"
#include "ctguard/learners.hpp"
#include "ctguard/metrics.hpp"
#include "ctguard/preprocess.hpp"

namespace ctguard::experiment {

enum class Study { RawBinary, Localized, LocalizedAug, NegSpace, NegSpaceAug, Multiclass };
enum class LearnerKind { Tree, Forest, Svm };

std::string_view to_string(Study study) noexcept;
/// Throws InvalidConfig.
Study study_from_string(std::string_view s);
std::string_view to_string(LearnerKind kind) noexcept;
LearnerKind learner_from_string(std::string_view s);

inline constexpr std::string_view kCacheEnv = "CTGUARD_CACHE_DIR";

struct ExperimentConfig {
  Study study = Study::LocalizedAug;
  std::string manifest;  ///< cohort manifest path; exclusive with `phantom`
  std::string phantom;   ///< phantom spec text, e.g. "seed=1,strength=1"

  std::optional<double> window_low;
  std::optional<double> window_high;
  std::optional<int> crop_size;
  std::optional<int> canvas_rows;
  std::optional<int> canvas_cols;
  std::optional<double> body_threshold;

  LearnerKind learner = LearnerKind::Forest;
  learn::TreeParams tree;
  learn::ForestParams forest;
  learn::SvmParams svm;

  std::uint64_t seed = 0;
  std::optional<bool> augment_test;  ///< default: true for augmented studies
  cohort::SplitPolicy split = cohort::SplitPolicy::TrialBased;
  std::string output_root = "runs";

  /// Applies one `key=value` setting; throws InvalidConfig.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  preprocess::PreprocessRegime regime() const;
  std::optional<augment::AugmentSpec> augmentation() const;
  bool augments_test() const;
  /// Cohort labels taking part, in class-index order.
  std::vector<cohort::Label> classes() const;
  std::vector<std::string> class_names() const;

  /// Fully resolved settings; every key is accepted by `set`.
  nlohmann::ordered_json to_json() const;
  /// Hash of `to_json()` without `output_root`.
  std::uint64_t hash() const;
  std::filesystem::path output_dir() const;
};

/// Flat `key = value` lines; `#` and `;` start comments, `[section]` lines
/// are ignored. Throws InvalidConfig with the line number.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
ExperimentConfig config_from_json(const nlohmann::ordered_json& j);

using Logger = std::function<void(std::string_view)>;

struct RunResult {
  eval::MetricsReport report;
  learn::Model model;
  std::filesystem::path output_dir;
};

/// Runs the study and writes report.json, model.bin, model.json and the ROC
/// files under `config.output_dir()`.
RunResult run(const ExperimentConfig& config, const Logger& log = {});

/// Samples for the configured data source and regime, through the cache
/// named by CTGUARD_CACHE_DIR when set.
std::vector<cohort::Sample> load_samples_for(const ExperimentConfig& config, std::vector<std::string>* warnings,
                                             const Logger& log = {});

}  // namespace ctguard::experiment
