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

#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "ctguard/learners.hpp"

namespace ctguard::learn {

namespace {

constexpr Eigen::Index kFullGramLimit = 8192;
constexpr std::size_t kRowCacheBytes = std::size_t{512} << 20;
constexpr double kTau = 1e-12;

/// Gram matrix access: dense when small, LRU over rows otherwise. Row
/// pointers stay valid until two further distinct rows have been fetched.
class GramCache {
 public:
  GramCache(const FeatureMatrix& X, const Kernel& kernel) : X_(X), kernel_(kernel), n_(X.rows()) {
    diag_.resize(n_);
    if (n_ <= kFullGramLimit) {
      const Eigen::MatrixXd Xd = X.cast<double>();
      full_.noalias() = Xd * Xd.transpose();
      if (kernel.kind == KernelKind::Rbf) {
        const Eigen::VectorXd sq = full_.diagonal();
        for (Eigen::Index j = 0; j < n_; ++j) {
          for (Eigen::Index i = 0; i < n_; ++i) {
            full_(i, j) = i == j ? 1.0
                                 : std::exp(-kernel.gamma * std::max(0.0, sq(i) + sq(j) - 2.0 * full_(i, j)));
          }
        }
      }
      diag_ = full_.diagonal();
    } else {
      capacity_ = std::max<std::size_t>(2, kRowCacheBytes / (static_cast<std::size_t>(n_) * sizeof(double)));
      for (Eigen::Index i = 0; i < n_; ++i) diag_(i) = kernel_(X_.row(i).data(), X_.row(i).data(), X_.cols());
    }
  }

  const double* row(Eigen::Index i) {
    if (full_.size() > 0) return full_.col(i).data();  // symmetric
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second.data();
    }
    Eigen::VectorXd values(n_);
    for (Eigen::Index j = 0; j < n_; ++j) values(j) = kernel_(X_.row(i).data(), X_.row(j).data(), X_.cols());
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    lru_.emplace_front(i, std::move(values));
    index_[i] = lru_.begin();
    return lru_.front().second.data();
  }

  double diag(Eigen::Index i) const { return diag_(i); }

 private:
  const FeatureMatrix& X_;
  Kernel kernel_;
  Eigen::Index n_;
  Eigen::MatrixXd full_;
  Eigen::VectorXd diag_;
  std::size_t capacity_ = 0;
  std::list<std::pair<Eigen::Index, Eigen::VectorXd>> lru_;
  std::unordered_map<Eigen::Index, decltype(lru_)::iterator> index_;
};

}  // namespace

std::string_view to_string(KernelKind kind) noexcept { return kind == KernelKind::Linear ? "linear" : "rbf"; }

KernelKind kernel_kind_from_string(std::string_view s) {
  if (s == "linear") return KernelKind::Linear;
  if (s == "rbf") return KernelKind::Rbf;
  throw Error(ErrorCode::InvalidConfig, "unknown kernel " + std::string(s));
}

double Kernel::operator()(const float* a, const float* b, Eigen::Index d) const {
  double acc = 0.0;
  if (kind == KernelKind::Linear) {
    for (Eigen::Index k = 0; k < d; ++k) acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
    return acc;
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += diff * diff;
  }
  return std::exp(-gamma * acc);
}

double auto_gamma(const FeatureMatrix& X) {
  const double n = static_cast<double>(X.size());
  if (n == 0) return 1.0;
  const double mean = X.cast<double>().sum() / n;
  const double var = (X.cast<double>().array() - mean).square().sum() / n;
  return var > 0.0 ? 1.0 / (static_cast<double>(X.cols()) * var) : 1.0;
}

DualSolution solve_dual(const FeatureMatrix& X, std::span<const int> labels, const Kernel& kernel, double C,
                        double tol, std::int64_t max_iter) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");
  if (!(C > 0.0)) throw Error(ErrorCode::InvalidConfig, "C must be positive");
  GramCache K(X, kernel);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
  const auto y = [&](Eigen::Index t) { return static_cast<double>(labels[static_cast<std::size_t>(t)]); };
  const auto in_up = [&](Eigen::Index t) { return y(t) > 0 ? alpha(t) < C : alpha(t) > 0.0; };
  const auto in_low = [&](Eigen::Index t) { return y(t) > 0 ? alpha(t) > 0.0 : alpha(t) < C; };

  DualSolution sol;
  std::int64_t iter = 0;
  for (;; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y(t) * G(t);
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    sol.max_violation = (i < 0 || j < 0) ? 0.0 : std::max(0.0, gmax - gmin);
    if (i < 0 || j < 0 || gmax - gmin < tol) break;
    if (iter >= max_iter) {
      throw Error(ErrorCode::NonConvergence, "SMO stopped after " + std::to_string(iter) +
                                                 " iterations with max KKT violation " +
                                                 std::to_string(gmax - gmin) + " (tol " + std::to_string(tol) + ")");
    }

    const double* Ki = K.row(i);
    const double* Kj = K.row(j);
    const double yi = y(i);
    const double yj = y(j);
    const double old_ai = alpha(i);
    const double old_aj = alpha(j);
    double& ai = alpha(i);
    double& aj = alpha(j);
    if (yi != yj) {
      double quad = K.diag(i) + K.diag(j) + 2.0 * yi * yj * Ki[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G(i) - G(j)) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > C) {
          ai = C;
          aj = C - diff;
        }
      } else if (aj > C) {
        aj = C;
        ai = C + diff;
      }
    } else {
      double quad = K.diag(i) + K.diag(j) - 2.0 * Ki[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (G(i) - G(j)) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > C) {
        if (ai > C) {
          ai = C;
          aj = sum - C;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > C) {
        if (aj > C) {
          aj = C;
          ai = sum - C;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    const double dai = (ai - old_ai) * yi;
    const double daj = (aj - old_aj) * yj;
    for (Eigen::Index t = 0; t < n; ++t) G(t) += y(t) * (Ki[t] * dai + Kj[t] * daj);
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  Eigen::Index n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * G(t);
    if (alpha(t) >= C) {
      if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0.0) {
      if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  double rho = 0.0;
  if (n_free > 0) {
    rho = free_sum / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else {
    rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  sol.bias = -rho;
  sol.objective = 0.5 * alpha.dot(G - Eigen::VectorXd::Ones(n));
  sol.alpha = std::move(alpha);
  sol.iterations = iter;
  return sol;
}

SvmModel::SvmModel(SvmParams params, Kernel kernel, int n_features, int n_classes,
                   std::vector<BinaryMachine> machines)
    : params_(params), kernel_(kernel), n_features_(n_features), n_classes_(n_classes),
      machines_(std::move(machines)) {
  const std::size_t expected = n_classes_ == 2 ? 1 : static_cast<std::size_t>(n_classes_);
  if (n_classes_ < 2 || machines_.size() != expected) throw Error(ErrorCode::InvalidModel, "machine count");
  for (const auto& m : machines_) {
    if (m.support_vectors.rows() != m.dual_coefs.size() ||
        (m.support_vectors.rows() > 0 && m.support_vectors.cols() != n_features_)) {
      throw Error(ErrorCode::InvalidModel, "support vector shape");
    }
  }
}

double SvmModel::decision(std::size_t machine, const float* x) const {
  const auto& m = machines_.at(machine);
  double f = m.bias;
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i) {
    f += m.dual_coefs(i) * kernel_(m.support_vectors.row(i).data(), x, n_features_);
  }
  return f;
}

SvmModel fit_svm(const FeatureMatrix& X, std::span<const int> y, int n_classes, const SvmParams& params) {
  if (X.rows() == 0) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  }
  if (n_classes < 2) throw Error(ErrorCode::SingleClassInput, "need at least two classes");
  Kernel kernel{params.kernel, params.gamma > 0.0 ? params.gamma : auto_gamma(X)};
  SvmParams resolved = params;
  resolved.gamma = kernel.gamma;

  std::vector<int> positives;
  if (n_classes == 2) {
    positives = {1};
  } else {
    for (int k = 0; k < n_classes; ++k) positives.push_back(k);
  }
  std::vector<BinaryMachine> machines;
  for (int positive : positives) {
    std::vector<int> labels(y.size());
    bool has_pos = false;
    bool has_neg = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] < 0 || y[i] >= n_classes) throw Error(ErrorCode::LabelOutsideClassSet, std::to_string(y[i]));
      labels[i] = y[i] == positive ? 1 : -1;
      (labels[i] > 0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) {
      throw Error(ErrorCode::SingleClassInput, "class " + std::to_string(positive) + " vs rest has one side empty");
    }
    const auto sol = solve_dual(X, labels, kernel, params.C, params.tol, params.max_iter);
    BinaryMachine m;
    m.positive_class = positive;
    m.bias = sol.bias;
    m.iterations = sol.iterations;
    m.max_violation = sol.max_violation;
    m.objective = sol.objective;
    const auto n_sv = (sol.alpha.array() > 0.0).count();
    m.support_vectors.resize(n_sv, X.cols());
    m.dual_coefs.resize(n_sv);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (sol.alpha(i) <= 0.0) continue;
      m.support_vectors.row(k) = X.row(i);
      m.dual_coefs(k) = sol.alpha(i) * labels[static_cast<std::size_t>(i)];
      ++k;
    }
    machines.push_back(std::move(m));
  }
  return SvmModel(resolved, kernel, static_cast<int>(X.cols()), n_classes, std::move(machines));
}

}  // namespace ctguard::learn
