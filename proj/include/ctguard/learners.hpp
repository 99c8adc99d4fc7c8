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

// Classical classifiers over flattened images: CART decision tree, random
// forest (bagging + per-split feature subsampling) and a soft-margin SVM
// trained by SMO. Labels are class indices 0..n_classes-1; every model
// exposes per-class scores whose argmax (lowest index on ties) is the
// prediction.

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ctguard/bytes.hpp"
#include "ctguard/error.hpp"
#include "ctguard/image.hpp"

namespace ctguard::learn {

/// n x k per-class scores.
using DecisionScores = Eigen::MatrixXd;

/// Lowest index wins ties.
template <typename Derived>
int argmax(const Eigen::DenseBase<Derived>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row(k) > row(best)) best = k;
  }
  return static_cast<int>(best);
}

std::vector<int> argmax_rows(const DecisionScores& scores);

// ---------------------------------------------------------------------------
// CART

struct TreeParams {
  int max_depth = 0;           ///< 0 = unbounded
  int min_samples_leaf = 1;
  int features_per_split = 0;  ///< 0 = all features, scanned in index order

  bool operator==(const TreeParams&) const = default;
};

struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;  ///< go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int leaf_class = 0;
  std::vector<double> distribution;  ///< class frequencies at this node

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(int n_features, int n_classes, TreeParams params, std::vector<TreeNode> nodes);

  int n_features() const noexcept { return n_features_; }
  int n_classes() const noexcept { return n_classes_; }
  const TreeParams& params() const noexcept { return params_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  /// Index of the leaf reached by `x` (length n_features).
  int leaf_index(const float* x) const;
  const TreeNode& leaf(const float* x) const { return nodes_[static_cast<std::size_t>(leaf_index(x))]; }

  bool operator==(const DecisionTree&) const = default;

 private:
  int n_features_ = 0;
  int n_classes_ = 0;
  TreeParams params_;
  std::vector<TreeNode> nodes_;
};

/// Greedy Gini-minimizing partitioning. Candidate thresholds are midpoints
/// between consecutive distinct sorted values; ties between equally good
/// splits go to the lowest feature index, then the lowest threshold.
DecisionTree fit_tree(const FeatureMatrix& X, std::span<const int> y, int n_classes,
                      const TreeParams& params = {});

/// Weighted Gini impurity of a two-way partition, times the node size:
/// sum over children of (n_c - sum_k count_ck^2 / n_c).
double split_impurity(std::span<const std::size_t> left_counts, std::span<const std::size_t> right_counts);

// ---------------------------------------------------------------------------
// Random forest

struct ForestParams {
  int n_trees = 100;
  int features_per_split = 0;  ///< 0 = floor(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;
  TreeParams tree;  ///< features_per_split inside is ignored

  bool operator==(const ForestParams&) const = default;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(ForestParams params, std::vector<DecisionTree> trees);

  const ForestParams& params() const noexcept { return params_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  int n_features() const noexcept { return trees_.empty() ? 0 : trees_.front().n_features(); }
  int n_classes() const noexcept { return trees_.empty() ? 0 : trees_.front().n_classes(); }

  bool operator==(const RandomForest&) const = default;

 private:
  ForestParams params_;
  std::vector<DecisionTree> trees_;
};

/// Tree t is grown from its own generator seeded with seed ^ t, so results
/// do not depend on how trees are scheduled across threads.
RandomForest fit_forest(const FeatureMatrix& X, std::span<const int> y, int n_classes,
                        const ForestParams& params = {});

// ---------------------------------------------------------------------------
// SVM

enum class KernelKind : std::uint8_t { Linear = 0, Rbf = 1 };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind kernel_kind_from_string(std::string_view s);

struct SvmParams {
  KernelKind kernel = KernelKind::Rbf;
  double gamma = 0.0;  ///< <= 0: 1 / (d * var(X))
  double C = 1.0;
  double tol = 1e-3;   ///< maximal KKT violation at convergence
  std::int64_t max_iter = 10'000'000;

  bool operator==(const SvmParams&) const = default;
};

struct Kernel {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;

  double operator()(const float* a, const float* b, Eigen::Index d) const;
  bool operator==(const Kernel&) const = default;
};

/// One binary machine: f(x) = sum_i coef_i K(sv_i, x) + bias, with
/// coef_i = alpha_i * y_i and y = +1 for `positive_class`.
struct BinaryMachine {
  int positive_class = 1;
  FeatureMatrix support_vectors;
  Eigen::VectorXd dual_coefs;
  double bias = 0.0;
  // training diagnostics
  std::int64_t iterations = 0;
  double max_violation = 0.0;
  double objective = 0.0;

  bool operator==(const BinaryMachine& o) const {
    return positive_class == o.positive_class && support_vectors.rows() == o.support_vectors.rows() &&
           support_vectors.cols() == o.support_vectors.cols() && support_vectors == o.support_vectors &&
           dual_coefs.size() == o.dual_coefs.size() && dual_coefs == o.dual_coefs && bias == o.bias;
  }
};

class SvmModel {
 public:
  SvmModel() = default;
  SvmModel(SvmParams params, Kernel kernel, int n_features, int n_classes, std::vector<BinaryMachine> machines);

  const SvmParams& params() const noexcept { return params_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  int n_features() const noexcept { return n_features_; }
  int n_classes() const noexcept { return n_classes_; }
  const std::vector<BinaryMachine>& machines() const noexcept { return machines_; }

  double decision(std::size_t machine, const float* x) const;

  bool operator==(const SvmModel&) const = default;

 private:
  SvmParams params_;
  Kernel kernel_;
  int n_features_ = 0;
  int n_classes_ = 0;
  std::vector<BinaryMachine> machines_;
};

/// Result of the raw dual solve, exposed for verification.
struct DualSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  double objective = 0.0;  ///< 0.5 a'Qa - sum(a)
  double max_violation = 0.0;
  std::int64_t iterations = 0;
};

/// SMO on min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij,
/// picking the maximal-violating pair each step. `labels` are +1/-1.
/// The Gram matrix is held in full for n <= 8192 and row-cached beyond.
DualSolution solve_dual(const FeatureMatrix& X, std::span<const int> labels, const Kernel& kernel,
                        double C, double tol, std::int64_t max_iter);

/// Throws SingleClassInput; throws NonConvergence when max_iter is hit.
/// Two classes train one machine (class 1 positive); more train one
/// one-vs-rest machine per class.
SvmModel fit_svm(const FeatureMatrix& X, std::span<const int> y, int n_classes, const SvmParams& params = {});

double auto_gamma(const FeatureMatrix& X);

// ---------------------------------------------------------------------------
// Shared surface

enum class ModelKind : std::uint8_t { Tree = 1, Forest = 2, Svm = 3 };

using Model = std::variant<DecisionTree, RandomForest, SvmModel>;

ModelKind kind_of(const Model& model) noexcept;
std::string_view to_string(ModelKind kind) noexcept;
int n_features(const Model& model) noexcept;
int n_classes(const Model& model) noexcept;

/// Tree: leaf class distribution. Forest: fraction of trees voting each
/// class. SVM: signed margin (binary: [-f, f]; one-vs-rest: f_k).
/// Throws DimensionMismatch.
DecisionScores scores(const Model& model, const FeatureMatrix& X);
std::vector<int> predict(const Model& model, const FeatureMatrix& X);

/// What `scores` returns for this model, recorded in run metadata.
std::string_view score_kind(const Model& model) noexcept;
nlohmann::ordered_json hyperparameters(const Model& model);

/// Versioned little-endian container: "CTGM", u32 version, u8 endianness
/// tag, u8 model kind, hyperparameters, payload.
Bytes serialize(const Model& model);
Model deserialize(std::span<const std::uint8_t> bytes);

}  // namespace ctguard::learn
