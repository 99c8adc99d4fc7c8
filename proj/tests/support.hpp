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

#include <array>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ctguard/image.hpp"
#include "ctguard/learners.hpp"
#include "oracles.hpp"

namespace ctguard::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ctguard-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline FeatureMatrix random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, int levels = 0) {
  FeatureMatrix X(rows, cols);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::uniform_int_distribution<int> q(0, std::max(0, levels - 1));
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    X.data()[i] = levels > 0 ? static_cast<float>(q(gen)) / static_cast<float>(levels) : u(gen);
  }
  return X;
}

inline std::vector<int> random_labels(std::mt19937_64& gen, std::size_t n, int n_classes) {
  std::vector<int> y(n);
  std::uniform_int_distribution<int> d(0, n_classes - 1);
  for (auto& v : y) v = d(gen);
  for (int k = 0; k < n_classes && static_cast<std::size_t>(k) < n; ++k) y[static_cast<std::size_t>(k)] = k;
  return y;
}

struct Problem {
  FeatureMatrix X;
  std::vector<int> y;  // +-1
  learn::Kernel kernel;
  double C = 1.0;
};

inline Problem random_problem(std::mt19937_64& gen, int index) {
  Problem p;
  const int d = 2 + index % 4;
  std::normal_distribution<float> n01(0.0f, 1.0f);
  p.X.resize(30, d);
  for (Eigen::Index i = 0; i < p.X.size(); ++i) p.X.data()[i] = n01(gen);
  p.y.resize(30);
  for (int i = 0; i < 30; ++i) {
    const float margin = p.X(i, 0) + 0.5f * p.X(i, 1) * p.X(i, 1) - 0.5f + 0.7f * n01(gen);
    p.y[static_cast<std::size_t>(i)] = margin > 0 ? 1 : -1;
  }
  p.y[0] = 1;
  p.y[1] = -1;
  p.kernel = index % 2 == 0 ? learn::Kernel{learn::KernelKind::Rbf, 0.5}
                            : learn::Kernel{learn::KernelKind::Linear, 1.0};
  p.C = std::array{0.1, 1.0, 10.0}[static_cast<std::size_t>(index % 3)];
  return p;
}

// Rows of X reaching each node, by replaying the routing rule.
inline std::vector<std::vector<std::size_t>> node_rows(const learn::DecisionTree& tree, const FeatureMatrix& X) {
  std::vector<std::vector<std::size_t>> rows(tree.nodes().size());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    int i = 0;
    for (;;) {
      rows[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(r));
      const auto& n = tree.nodes()[static_cast<std::size_t>(i)];
      if (n.is_leaf()) break;
      i = X(r, n.feature) <= n.threshold ? n.left : n.right;
    }
  }
  return rows;
}

inline std::vector<int> node_depths(const learn::DecisionTree& tree) {
  std::vector<int> depth(tree.nodes().size(), 0);
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const auto& n = tree.nodes()[i];
    if (n.is_leaf()) continue;
    depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
  }
  return depth;
}

inline double node_impurity(const learn::DecisionTree& tree, const FeatureMatrix& X, std::span<const int> y, int node,
                     const std::vector<std::size_t>& rows) {
  const auto& n = tree.nodes()[static_cast<std::size_t>(node)];
  std::vector<int> left, right;
  for (auto r : rows) (X(static_cast<Eigen::Index>(r), n.feature) <= n.threshold ? left : right).push_back(y[r]);
  return oracle::weighted_gini(left, tree.n_classes()) + oracle::weighted_gini(right, tree.n_classes());
}

}  // namespace ctguard::testing
