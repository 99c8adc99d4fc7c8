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

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ctguard/learners.hpp"
#include "ctguard/rng.hpp"

namespace ctguard::learn::detail {

struct SplitCandidate {
  double impurity = 0.0;
  int feature = 0;
  double threshold = 0.0;

  bool better_than(const SplitCandidate& o) const noexcept {
    if (impurity != o.impurity) return impurity < o.impurity;
    if (feature != o.feature) return feature < o.feature;
    return threshold < o.threshold;
  }
};

/// Feature-major copy of a design matrix: column f holds feature f of
/// every row contiguously.
using FeatureColumns = Eigen::MatrixXf;

/// Tiled transpose into feature-major order.
FeatureColumns to_columns(const FeatureMatrix& X);

/// Grows one tree over a multiset of row indices. With an Rng and
/// features_per_split > 0 the candidate features are drawn per node.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureColumns& X, std::span<const int> y, int n_classes, TreeParams params, Rng* rng);

  DecisionTree build(std::vector<std::size_t> rows);

 private:
  int grow(std::vector<std::size_t>& rows, int depth);
  std::optional<SplitCandidate> find_split(const std::vector<std::size_t>& rows,
                                           const std::vector<std::size_t>& counts);

  const FeatureColumns& X_;
  std::span<const int> y_;
  int n_classes_;
  TreeParams params_;
  Rng* rng_;
  std::vector<int> feature_order_;
  struct Keyed {
    std::uint32_t key;  ///< order-preserving image of the feature value
    std::int32_t label;
  };
  std::vector<Keyed> keyed_;
  std::vector<Keyed> scratch_;
  std::vector<TreeNode> nodes_;
};

}  // namespace ctguard::learn::detail
