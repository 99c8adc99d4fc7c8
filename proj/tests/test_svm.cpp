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

#include <random>

#include "ctguard/learners.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ctguard;
using namespace ctguard::learn;

using testing::random_problem;

TEST_CASE("dual solution matches a projected-gradient QP oracle") {
  std::mt19937_64 gen(20260101);
  for (int t = 0; t < 20; ++t) {
    CAPTURE(t);
    const auto p = random_problem(gen, t);
    const auto sol = solve_dual(p.X, p.y, p.kernel, p.C, 1e-3, 10'000'000);
    const auto K = oracle::kernel_matrix(p.X, p.kernel.kind == KernelKind::Rbf, p.kernel.gamma);
    const auto Q = oracle::dual_hessian(K, p.y);
    const auto ref = oracle::solve_qp(Q, p.y, p.C);

    CHECK(oracle::kkt_gap(Q, p.y, sol.alpha, p.C) <= 1e-3);
    CHECK(std::abs(oracle::dual_objective(Q, sol.alpha) - oracle::dual_objective(Q, ref)) <= 1e-4);
    CHECK(std::abs(sol.objective - oracle::dual_objective(Q, sol.alpha)) <= 1e-9);

    double balance = 0.0;
    for (int i = 0; i < 30; ++i) balance += sol.alpha(i) * p.y[static_cast<std::size_t>(i)];
    CHECK(std::abs(balance) <= 1e-9);
    CHECK(sol.alpha.minCoeff() >= 0.0);
    CHECK(sol.alpha.maxCoeff() <= p.C);
  }
}

TEST_CASE("per-point KKT conditions hold on the fitted machine") {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 6; ++t) {
    const auto p = random_problem(gen, t);
    std::vector<int> y01(p.y.size());
    for (std::size_t i = 0; i < y01.size(); ++i) y01[i] = p.y[i] > 0 ? 1 : 0;
    SvmParams params;
    params.kernel = p.kernel.kind;
    params.gamma = p.kernel.gamma;
    params.C = p.C;
    const auto model = fit_svm(p.X, y01, 2, params);
    const auto sol = solve_dual(p.X, p.y, p.kernel, p.C, 1e-3, 10'000'000);
    const double tol = 1e-3;
    for (Eigen::Index i = 0; i < p.X.rows(); ++i) {
      const double yf = p.y[static_cast<std::size_t>(i)] * model.decision(0, p.X.row(i).data());
      const double a = sol.alpha(i);
      if (a <= 0.0) CHECK(yf >= 1.0 - tol);
      else if (a >= p.C) CHECK(yf <= 1.0 + tol);
      else CHECK(std::abs(yf - 1.0) <= tol);
    }
    for (Eigen::Index k = 0; k < model.machines()[0].dual_coefs.size(); ++k) {
      CHECK(std::abs(model.machines()[0].dual_coefs(k)) <= p.C);
    }
  }
}

TEST_CASE("two points on a line split at the midpoint") {
  FeatureMatrix X(2, 1);
  X << 0.0f, 1.0f;
  const std::vector<int> y{0, 1};
  SvmParams params;
  params.kernel = KernelKind::Linear;
  params.C = 10.0;
  const auto model = fit_svm(X, y, 2, params);
  // w = 2, b = -1 for the symmetric pair
  const float mid = 0.5f;
  CHECK(std::abs(model.decision(0, &mid)) <= 1e-3);
  CHECK(predict(model, X) == y);
}

TEST_CASE("XOR is separable with an RBF kernel") {
  FeatureMatrix X(4, 2);
  X << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> y{0, 0, 1, 1};
  SvmParams params;
  params.gamma = 1.0;
  params.C = 10.0;
  const auto model = fit_svm(X, y, 2, params);
  CHECK(predict(model, X) == y);

  const std::vector<int> pm{-1, -1, 1, 1};
  const auto Q = oracle::dual_hessian(oracle::kernel_matrix(X, true, 1.0), pm);
  const auto ref = oracle::solve_qp(Q, pm, 10.0);
  const auto sol = solve_dual(X, pm, Kernel{KernelKind::Rbf, 1.0}, 10.0, 1e-3, 1000000);
  CHECK(std::abs(oracle::dual_objective(Q, ref) - sol.objective) <= 1e-4);
}

TEST_CASE("multiclass fits one machine per class") {
  std::mt19937_64 gen(3);
  FeatureMatrix X(60, 2);
  std::vector<int> y(60);
  std::normal_distribution<float> n01(0.0f, 0.2f);
  const float cx[3] = {0.0f, 2.0f, 0.0f};
  const float cy[3] = {0.0f, 0.0f, 2.0f};
  for (int i = 0; i < 60; ++i) {
    const int k = i % 3;
    y[static_cast<std::size_t>(i)] = k;
    X(i, 0) = cx[k] + n01(gen);
    X(i, 1) = cy[k] + n01(gen);
  }
  const auto model = fit_svm(X, y, 3);
  REQUIRE(model.machines().size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(model.machines()[static_cast<std::size_t>(k)].positive_class == k);
  CHECK(predict(model, X) == y);
}

TEST_CASE("errors") {
  FeatureMatrix X(3, 1);
  X << 0, 1, 2;
  const std::vector<int> same{1, 1, 1};
  CHECK_THROWS_AS(fit_svm(X, same, 2), Error);
  try {
    fit_svm(X, same, 2);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClassInput);
  }
  try {
    const std::vector<int> y{0, 1, 0};
    SvmParams p;
    p.max_iter = 0;
    p.C = 10.0;
    fit_svm(X, y, 2, p);
    FAIL("expected NonConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonConvergence);
  }
  CHECK_THROWS_AS(fit_svm(FeatureMatrix(0, 1), std::vector<int>{}, 2), Error);
}

TEST_CASE("auto gamma is 1 / (d * var)") {
  FeatureMatrix X(2, 2);
  X << 0, 0, 1, 1;
  // mean 0.5, variance 0.25
  CHECK(auto_gamma(X) == doctest::Approx(2.0));
  const std::vector<int> y{0, 1};
  CHECK(fit_svm(X, y, 2).kernel().gamma == doctest::Approx(2.0));
}
