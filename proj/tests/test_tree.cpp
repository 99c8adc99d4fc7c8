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


#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "ctguard/learners.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ctguard;
using namespace ctguard::learn;

using testing::node_depths;
using testing::node_impurity;
using testing::node_rows;

TEST_CASE("root threshold is the midpoint between clusters") {
  FeatureMatrix X(4, 1);
  X << 1, 2, 8, 9;
  const std::vector<int> y{0, 0, 1, 1};
  const auto tree = fit_tree(X, y, 2);
  REQUIRE(tree.nodes().size() == 3);
  CHECK(tree.nodes()[0].feature == 0);
  CHECK(tree.nodes()[0].threshold == 5.0);
  CHECK(tree.nodes()[static_cast<std::size_t>(tree.nodes()[0].left)].leaf_class == 0);
  CHECK(tree.nodes()[static_cast<std::size_t>(tree.nodes()[0].right)].leaf_class == 1);
  const auto best = oracle::best_split(X, y, 2, {0, 1, 2, 3});
  REQUIRE(best);
  CHECK(best->threshold == 5.0);
}

TEST_CASE("pure input gives a single leaf") {
  FeatureMatrix X(5, 2);
  X.setRandom();
  const std::vector<int> y(5, 2);
  const auto tree = fit_tree(X, y, 3);
  REQUIRE(tree.nodes().size() == 1);
  CHECK(tree.nodes()[0].leaf_class == 2);
  CHECK(tree.nodes()[0].distribution == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("every split is Gini-optimal among all candidates") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 200; ++t) {
    CAPTURE(t);
    const auto n = static_cast<Eigen::Index>(2 + gen() % 49);
    const auto d = static_cast<Eigen::Index>(1 + gen() % 5);
    const int k = 2 + static_cast<int>(gen() % 2);
    const auto X = testing::random_matrix(gen, n, d, t % 2 == 0 ? 4 : 0);
    const auto y = testing::random_labels(gen, static_cast<std::size_t>(n), k);
    TreeParams params;
    params.min_samples_leaf = 1 + static_cast<int>(gen() % 3);
    params.max_depth = static_cast<int>(gen() % 4);
    const auto tree = fit_tree(X, y, k, params);
    const auto rows = node_rows(tree, X);
    const auto depths = node_depths(tree);
    for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
      const auto& node = tree.nodes()[i];
      const auto best = oracle::best_split(X, y, k, rows[i], static_cast<std::size_t>(params.min_samples_leaf));
      if (node.is_leaf()) {
        // a leaf is impure only when it could not or may not be split
        std::set<int> classes;
        for (auto r : rows[i]) classes.insert(y[r]);
        if (classes.size() > 1 && !best) continue;
        if (classes.size() > 1) CHECK((params.max_depth > 0 && depths[i] >= params.max_depth));
        continue;
      }
      REQUIRE(best);
      CHECK(node_impurity(tree, X, y, static_cast<int>(i), rows[i]) <= best->impurity + 1e-9);
      double sum = 0.0;
      for (double p : node.distribution) sum += p;
      CHECK(sum == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("unbounded trees fit consistent data exactly") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 20; ++t) {
    const auto X = testing::random_matrix(gen, 80, 3);
    const auto y = testing::random_labels(gen, 80, 3);
    CHECK(predict(fit_tree(X, y, 3), X) == y);
  }
}

TEST_CASE("row order does not change predictions") {
  std::mt19937_64 gen(9);
  for (int t = 0; t < 20; ++t) {
    const auto X = testing::random_matrix(gen, 40, 3, 5);
    const auto y = testing::random_labels(gen, 40, 2);
    std::vector<Eigen::Index> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    FeatureMatrix Xp(40, 3);
    std::vector<int> yp(40);
    for (int i = 0; i < 40; ++i) {
      Xp.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
      yp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    const auto grid = testing::random_matrix(gen, 500, 3, 7);
    CHECK(predict(fit_tree(X, y, 2), grid) == predict(fit_tree(Xp, yp, 2), grid));
  }
}

TEST_CASE("depth and leaf size limits") {
  std::mt19937_64 gen(1);
  const auto X = testing::random_matrix(gen, 100, 4);
  const auto y = testing::random_labels(gen, 100, 2);
  TreeParams stump;
  stump.max_depth = 1;
  CHECK(fit_tree(X, y, 2, stump).nodes().size() == 3);

  TreeParams big_leaves;
  big_leaves.min_samples_leaf = 10;
  const auto tree = fit_tree(X, y, 2, big_leaves);
  const auto rows = node_rows(tree, X);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (tree.nodes()[i].is_leaf()) CHECK(rows[i].size() >= 10);
  }
}

TEST_CASE("negative zero and ties") {
  FeatureMatrix X(4, 1);
  X << -0.0f, 0.0f, 1.0f, 1.0f;
  const std::vector<int> y{0, 0, 1, 1};
  const auto tree = fit_tree(X, y, 2);
  REQUIRE(tree.nodes().size() == 3);
  CHECK(tree.nodes()[0].threshold == 0.5);
}

TEST_CASE("large nodes sort correctly") {
  // exercises the radix path (>= 64 rows) including negative values
  std::mt19937_64 gen(21);
  for (int t = 0; t < 10; ++t) {
    FeatureMatrix X(300, 2);
    std::normal_distribution<float> n(0.0f, 100.0f);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = n(gen);
    std::vector<int> y(300);
    for (int i = 0; i < 300; ++i) y[static_cast<std::size_t>(i)] = X(i, 1) > 13.0f ? 1 : 0;
    TreeParams stump;
    stump.max_depth = 1;
    const auto tree = fit_tree(X, y, 2, stump);
    std::vector<std::size_t> all(300);
    std::iota(all.begin(), all.end(), 0);
    const auto best = oracle::best_split(X, y, 2, all);
    CHECK(tree.nodes()[0].feature == 1);
    CHECK(best->impurity == 0.0);
    CHECK(node_impurity(tree, X, y, 0, all) == 0.0);
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(fit_tree(FeatureMatrix(0, 2), std::vector<int>{}, 2), Error);
  FeatureMatrix X(2, 1);
  X << 0, 1;
  try {
    fit_tree(X, std::vector<int>{0, 5}, 2);
    FAIL("expected LabelOutsideClassSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LabelOutsideClassSet);
  }
  try {
    fit_tree(X, std::vector<int>{0}, 2);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}
