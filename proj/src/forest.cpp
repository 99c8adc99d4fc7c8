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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "ctguard/learners.hpp"
#include "ctguard/rng.hpp"
#include "tree_builder.hpp"

namespace ctguard::learn {

RandomForest::RandomForest(ForestParams params, std::vector<DecisionTree> trees)
    : params_(params), trees_(std::move(trees)) {
  if (trees_.empty()) throw Error(ErrorCode::InvalidModel, "forest without trees");
  for (const auto& t : trees_) {
    if (t.n_features() != trees_.front().n_features() || t.n_classes() != trees_.front().n_classes()) {
      throw Error(ErrorCode::InvalidModel, "trees disagree on feature or class count");
    }
  }
}

RandomForest fit_forest(const FeatureMatrix& X, std::span<const int> y, int n_classes, const ForestParams& params) {
  if (X.rows() == 0) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  }
  if (params.n_trees < 1) throw Error(ErrorCode::InvalidConfig, "n_trees must be >= 1");
  for (int label : y) {
    if (label < 0 || label >= n_classes) throw Error(ErrorCode::LabelOutsideClassSet, std::to_string(label));
  }
  ForestParams resolved = params;
  if (resolved.features_per_split <= 0) {
    resolved.features_per_split =
        std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(X.cols())))));
  }
  resolved.features_per_split = std::min<int>(resolved.features_per_split, static_cast<int>(X.cols()));
  TreeParams tree_params = resolved.tree;
  tree_params.features_per_split = resolved.features_per_split;

  const auto n = static_cast<std::size_t>(X.rows());
  const auto columns = detail::to_columns(X);
  std::vector<DecisionTree> trees(static_cast<std::size_t>(resolved.n_trees));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (int t = next++; t < resolved.n_trees; t = next++) {
      try {
        Rng rng(resolved.seed ^ static_cast<std::uint64_t>(t));
        std::vector<std::size_t> rows(n);
        if (resolved.bootstrap) {
          for (auto& r : rows) r = static_cast<std::size_t>(rng.index(n));
          std::sort(rows.begin(), rows.end());
        } else {
          std::iota(rows.begin(), rows.end(), 0);
        }
        detail::TreeBuilder builder(columns, y, n_classes, tree_params, &rng);
        trees[static_cast<std::size_t>(t)] = builder.build(std::move(rows));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto n_threads = std::clamp<unsigned>(std::thread::hardware_concurrency(), 1u,
                                              static_cast<unsigned>(resolved.n_trees));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return RandomForest(resolved, std::move(trees));
}

}  // namespace ctguard::learn
