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

#include "ctguard/learners.hpp"

namespace ctguard::learn {

namespace {

constexpr std::string_view kModelMagic = "CTGM";
constexpr std::uint32_t kModelVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_dims(const Model& model, const FeatureMatrix& X) {
  if (X.cols() != n_features(model)) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(n_features(model)) +
                                                  " features, got " + std::to_string(X.cols()));
  }
}

DecisionScores svm_scores(const SvmModel& model, const FeatureMatrix& X) {
  const Eigen::Index n = X.rows();
  DecisionScores out = DecisionScores::Zero(n, model.n_classes());
  const Eigen::MatrixXd Xd = X.cast<double>();
  const Eigen::VectorXd x_sq = Xd.rowwise().squaredNorm();
  for (std::size_t m = 0; m < model.machines().size(); ++m) {
    const auto& machine = model.machines()[m];
    Eigen::VectorXd f = Eigen::VectorXd::Constant(n, machine.bias);
    if (machine.support_vectors.rows() > 0) {
      const Eigen::MatrixXd sv = machine.support_vectors.cast<double>();
      Eigen::MatrixXd k = Xd * sv.transpose();  // n x n_sv
      if (model.kernel().kind == KernelKind::Rbf) {
        const Eigen::RowVectorXd sv_sq = sv.rowwise().squaredNorm().transpose();
        const double gamma = model.kernel().gamma;
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
          for (Eigen::Index i = 0; i < n; ++i) {
            k(i, j) = std::exp(-gamma * std::max(0.0, x_sq(i) + sv_sq(j) - 2.0 * k(i, j)));
          }
        }
      }
      f += k * machine.dual_coefs;
    }
    if (model.n_classes() == 2) {
      out.col(0) = -f;
      out.col(1) = f;
    } else {
      out.col(machine.positive_class) = f;
    }
  }
  return out;
}

void put_tree_params(ByteWriter& w, const TreeParams& p) {
  w.i32(p.max_depth);
  w.i32(p.min_samples_leaf);
  w.i32(p.features_per_split);
}

TreeParams get_tree_params(ByteReader& r) {
  TreeParams p;
  p.max_depth = r.i32();
  p.min_samples_leaf = r.i32();
  p.features_per_split = r.i32();
  return p;
}

void put_tree(ByteWriter& w, const DecisionTree& t) {
  w.i32(t.n_features());
  w.i32(t.n_classes());
  put_tree_params(w, t.params());
  w.u32(static_cast<std::uint32_t>(t.nodes().size()));
  for (const auto& node : t.nodes()) {
    w.i32(node.feature);
    w.f64(node.threshold);
    w.i32(node.left);
    w.i32(node.right);
    w.i32(node.leaf_class);
    for (double p : node.distribution) w.f64(p);
  }
}

DecisionTree get_tree(ByteReader& r) {
  const int n_features = r.i32();
  const int n_classes = r.i32();
  if (n_features < 0 || n_classes < 1 || n_classes > 1024) throw Error(ErrorCode::InvalidModel, "tree header");
  const auto params = get_tree_params(r);
  const auto n_nodes = r.u32();
  r.require(static_cast<std::size_t>(n_nodes) * (24 + 8 * static_cast<std::size_t>(n_classes)));
  std::vector<TreeNode> nodes(n_nodes);
  for (auto& node : nodes) {
    node.feature = r.i32();
    node.threshold = r.f64();
    node.left = r.i32();
    node.right = r.i32();
    node.leaf_class = r.i32();
    node.distribution.resize(static_cast<std::size_t>(n_classes));
    for (auto& p : node.distribution) p = r.f64();
  }
  return DecisionTree(n_features, n_classes, params, std::move(nodes));
}

}  // namespace

ModelKind kind_of(const Model& model) noexcept {
  return std::visit(Overloaded{[](const DecisionTree&) { return ModelKind::Tree; },
                               [](const RandomForest&) { return ModelKind::Forest; },
                               [](const SvmModel&) { return ModelKind::Svm; }},
                    model);
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Tree: return "tree";
    case ModelKind::Forest: return "forest";
    case ModelKind::Svm: return "svm";
  }
  return "?";
}

int n_features(const Model& model) noexcept {
  return std::visit([](const auto& m) { return m.n_features(); }, model);
}

int n_classes(const Model& model) noexcept {
  return std::visit([](const auto& m) { return m.n_classes(); }, model);
}

DecisionScores scores(const Model& model, const FeatureMatrix& X) {
  check_dims(model, X);
  return std::visit(
      Overloaded{
          [&](const DecisionTree& t) {
            DecisionScores out(X.rows(), t.n_classes());
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
              const auto& d = t.leaf(X.row(i).data()).distribution;
              for (int k = 0; k < t.n_classes(); ++k) out(i, k) = d[static_cast<std::size_t>(k)];
            }
            return out;
          },
          [&](const RandomForest& f) {
            DecisionScores out = DecisionScores::Zero(X.rows(), f.n_classes());
            for (const auto& t : f.trees()) {
              for (Eigen::Index i = 0; i < X.rows(); ++i) out(i, t.leaf(X.row(i).data()).leaf_class) += 1.0;
            }
            out /= static_cast<double>(f.trees().size());
            return out;
          },
          [&](const SvmModel& s) { return svm_scores(s, X); }},
      model);
}

std::vector<int> predict(const Model& model, const FeatureMatrix& X) { return argmax_rows(scores(model, X)); }

std::string_view score_kind(const Model& model) noexcept {
  switch (kind_of(model)) {
    case ModelKind::Tree: return "leaf_class_distribution";
    case ModelKind::Forest: return "tree_vote_fraction";
    case ModelKind::Svm: return "signed_margin";
  }
  return "?";
}

nlohmann::ordered_json hyperparameters(const Model& model) {
  const auto tree_json = [](const TreeParams& p) {
    return nlohmann::ordered_json{{"max_depth", p.max_depth},
                                  {"min_samples_leaf", p.min_samples_leaf},
                                  {"features_per_split", p.features_per_split}};
  };
  return std::visit(
      Overloaded{[&](const DecisionTree& t) { return tree_json(t.params()); },
                 [&](const RandomForest& f) {
                   return nlohmann::ordered_json{{"n_trees", f.params().n_trees},
                                                 {"features_per_split", f.params().features_per_split},
                                                 {"bootstrap", f.params().bootstrap},
                                                 {"seed", f.params().seed},
                                                 {"tree", tree_json(f.params().tree)}};
                 },
                 [&](const SvmModel& s) {
                   return nlohmann::ordered_json{{"kernel", to_string(s.params().kernel)},
                                                 {"gamma", s.kernel().gamma},
                                                 {"C", s.params().C},
                                                 {"tol", s.params().tol},
                                                 {"max_iter", s.params().max_iter},
                                                 {"multiclass", s.n_classes() > 2 ? "one_vs_rest" : "binary"}};
                 }},
      model);
}

Bytes serialize(const Model& model) {
  ByteWriter w;
  w.raw(kModelMagic);
  w.u32(kModelVersion);
  w.u8(1);  // little-endian
  w.u8(static_cast<std::uint8_t>(kind_of(model)));
  std::visit(Overloaded{[&](const DecisionTree& t) { put_tree(w, t); },
                        [&](const RandomForest& f) {
                          const auto& p = f.params();
                          w.i32(p.n_trees);
                          w.i32(p.features_per_split);
                          w.u8(p.bootstrap ? 1 : 0);
                          w.u64(p.seed);
                          put_tree_params(w, p.tree);
                          w.u32(static_cast<std::uint32_t>(f.trees().size()));
                          for (const auto& t : f.trees()) put_tree(w, t);
                        },
                        [&](const SvmModel& s) {
                          const auto& p = s.params();
                          w.u8(static_cast<std::uint8_t>(p.kernel));
                          w.f64(p.gamma);
                          w.f64(s.kernel().gamma);
                          w.f64(p.C);
                          w.f64(p.tol);
                          w.i64(p.max_iter);
                          w.i32(s.n_features());
                          w.i32(s.n_classes());
                          w.u32(static_cast<std::uint32_t>(s.machines().size()));
                          for (const auto& m : s.machines()) {
                            w.i32(m.positive_class);
                            w.f64(m.bias);
                            w.i64(m.iterations);
                            w.f64(m.max_violation);
                            w.f64(m.objective);
                            w.u32(static_cast<std::uint32_t>(m.dual_coefs.size()));
                            for (Eigen::Index i = 0; i < m.dual_coefs.size(); ++i) w.f64(m.dual_coefs(i));
                            for (Eigen::Index i = 0; i < m.support_vectors.size(); ++i) {
                              w.f32(m.support_vectors.data()[i]);
                            }
                          }
                        }},
             model);
  return std::move(w).take();
}

Model deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::InvalidModel);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kModelMagic.begin())) {
    throw Error(ErrorCode::InvalidModel, "not a model container");
  }
  if (r.u32() != kModelVersion) throw Error(ErrorCode::InvalidModel, "unsupported model version");
  if (r.u8() != 1) throw Error(ErrorCode::InvalidModel, "unsupported endianness tag");
  const auto kind = static_cast<ModelKind>(r.u8());
  Model out;
  switch (kind) {
    case ModelKind::Tree:
      out = get_tree(r);
      break;
    case ModelKind::Forest: {
      ForestParams p;
      p.n_trees = r.i32();
      p.features_per_split = r.i32();
      p.bootstrap = r.u8() != 0;
      p.seed = r.u64();
      p.tree = get_tree_params(r);
      const auto n = r.u32();
      std::vector<DecisionTree> trees;
      for (std::uint32_t t = 0; t < n; ++t) trees.push_back(get_tree(r));
      out = RandomForest(p, std::move(trees));
      break;
    }
    case ModelKind::Svm: {
      SvmParams p;
      const auto kernel_kind = r.u8();
      if (kernel_kind > 1) throw Error(ErrorCode::InvalidModel, "kernel kind");
      p.kernel = static_cast<KernelKind>(kernel_kind);
      p.gamma = r.f64();
      const double kernel_gamma = r.f64();
      p.C = r.f64();
      p.tol = r.f64();
      p.max_iter = r.i64();
      const int n_features = r.i32();
      const int n_classes = r.i32();
      if (n_features < 0) throw Error(ErrorCode::InvalidModel, "feature count");
      const auto n_machines = r.u32();
      std::vector<BinaryMachine> machines;
      for (std::uint32_t k = 0; k < n_machines; ++k) {
        BinaryMachine m;
        m.positive_class = r.i32();
        m.bias = r.f64();
        m.iterations = r.i64();
        m.max_violation = r.f64();
        m.objective = r.f64();
        const auto n_sv = r.u32();
        r.require(static_cast<std::size_t>(n_sv) * (8 + 4 * static_cast<std::size_t>(n_features)));
        m.dual_coefs.resize(n_sv);
        for (auto& c : m.dual_coefs) c = r.f64();
        m.support_vectors.resize(n_sv, n_features);
        for (Eigen::Index i = 0; i < m.support_vectors.size(); ++i) m.support_vectors.data()[i] = r.f32();
        machines.push_back(std::move(m));
      }
      out = SvmModel(p, Kernel{p.kernel, kernel_gamma}, n_features, n_classes, std::move(machines));
      break;
    }
    default:
      throw Error(ErrorCode::InvalidModel, "unknown model kind");
  }
  if (!r.at_end()) throw Error(ErrorCode::InvalidModel, "trailing bytes after model payload");
  return out;
}

}  // namespace ctguard::learn
