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
#include <array>
#include <bit>
#include <numeric>

#include "ctguard/learners.hpp"
#include "ctguard/rng.hpp"
#include "tree_builder.hpp"

namespace ctguard::learn {

std::vector<int> argmax_rows(const DecisionScores& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax(scores.row(i));
  return out;
}

double split_impurity(std::span<const std::size_t> left_counts, std::span<const std::size_t> right_counts) {
  const auto part = [](std::span<const std::size_t> counts) {
    std::size_t n = 0;
    std::size_t sq = 0;
    for (auto c : counts) {
      n += c;
      sq += c * c;
    }
    return n == 0 ? 0.0 : static_cast<double>(n) - static_cast<double>(sq) / static_cast<double>(n);
  };
  return part(left_counts) + part(right_counts);
}

DecisionTree::DecisionTree(int n_features, int n_classes, TreeParams params, std::vector<TreeNode> nodes)
    : n_features_(n_features), n_classes_(n_classes), params_(params), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorCode::InvalidModel, "tree without nodes");
  const auto n = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (static_cast<int>(node.distribution.size()) != n_classes_) {
      throw Error(ErrorCode::InvalidModel, "node distribution size mismatch");
    }
    if (!node.is_leaf() && (node.feature >= n_features_ || node.left <= 0 || node.right <= 0 ||
                            node.left >= n || node.right >= n)) {
      throw Error(ErrorCode::InvalidModel, "malformed internal node");
    }
  }
}

int DecisionTree::leaf_index(const float* x) const {
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    i = static_cast<double>(x[node.feature]) <= node.threshold ? node.left : node.right;
  }
  return i;
}

namespace detail {

namespace {

/// Monotone map from floats to unsigned keys; -0 and +0 share a key.
std::uint32_t float_key(float v) {
  const auto b = std::bit_cast<std::uint32_t>(v == 0.0f ? 0.0f : v);
  return (b & 0x80000000u) != 0 ? ~b : (b | 0x80000000u);
}

float key_value(std::uint32_t k) {
  return std::bit_cast<float>((k & 0x80000000u) != 0 ? (k & 0x7FFFFFFFu) : ~k);
}

/// Stable LSD radix sort by key, 11-bit digits; digits on which every key
/// agrees (`differing` has no bit set there) are skipped.
template <class T>
void sort_keys(std::vector<T>& items, std::vector<T>& scratch, std::uint32_t differing) {
  if (items.size() < 64) {
    std::stable_sort(items.begin(), items.end(), [](const T& a, const T& b) { return a.key < b.key; });
    return;
  }
  scratch.resize(items.size());
  for (int shift = 0; shift < 32; shift += 11) {
    if (((differing >> shift) & 0x7FFu) == 0) continue;
    std::array<std::size_t, 2049> offsets{};
    for (const auto& it : items) ++offsets[((it.key >> shift) & 0x7FFu) + 1];
    for (std::size_t b = 1; b < offsets.size(); ++b) offsets[b] += offsets[b - 1];
    for (const auto& it : items) scratch[offsets[(it.key >> shift) & 0x7FFu]++] = it;
    items.swap(scratch);
  }
}

}  // namespace

FeatureColumns to_columns(const FeatureMatrix& X) {
  constexpr Eigen::Index kTile = 64;
  FeatureColumns out(X.rows(), X.cols());
  for (Eigen::Index r0 = 0; r0 < X.rows(); r0 += kTile) {
    const Eigen::Index nr = std::min(kTile, X.rows() - r0);
    for (Eigen::Index c0 = 0; c0 < X.cols(); c0 += kTile) {
      const Eigen::Index nc = std::min(kTile, X.cols() - c0);
      out.block(r0, c0, nr, nc) = X.block(r0, c0, nr, nc);
    }
  }
  return out;
}

TreeBuilder::TreeBuilder(const FeatureColumns& X, std::span<const int> y, int n_classes, TreeParams params,
                         Rng* rng)
    : X_(X), y_(y), n_classes_(n_classes), params_(params), rng_(rng) {
  feature_order_.resize(static_cast<std::size_t>(X.cols()));
  std::iota(feature_order_.begin(), feature_order_.end(), 0);
  keyed_.reserve(static_cast<std::size_t>(X.rows()));
  scratch_.reserve(static_cast<std::size_t>(X.rows()));
}

DecisionTree TreeBuilder::build(std::vector<std::size_t> rows) {
  nodes_.clear();
  grow(rows, 0);
  return DecisionTree(static_cast<int>(X_.cols()), n_classes_, params_, std::move(nodes_));
}

int TreeBuilder::grow(std::vector<std::size_t>& rows, int depth) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes_), 0);
  for (auto r : rows) ++counts[static_cast<std::size_t>(y_[r])];
  {
    auto& node = nodes_.back();
    node.distribution.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
      node.distribution[k] = static_cast<double>(counts[k]) / static_cast<double>(rows.size());
    }
    node.leaf_class = argmax(Eigen::Map<const Eigen::VectorXd>(node.distribution.data(),
                                                              static_cast<Eigen::Index>(counts.size())));
  }
  const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
  const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
  if (pure || (params_.max_depth > 0 && depth >= params_.max_depth) || rows.size() < 2 * min_leaf) {
    return index;
  }
  const auto best = find_split(rows, counts);
  if (!best) return index;

  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  for (auto r : rows) {
    (static_cast<double>(X_(static_cast<Eigen::Index>(r), best->feature)) <= best->threshold ? left : right)
        .push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();
  const int l = grow(left, depth + 1);
  const int rgt = grow(right, depth + 1);
  auto& node = nodes_[static_cast<std::size_t>(index)];
  node.feature = best->feature;
  node.threshold = best->threshold;
  node.left = l;
  node.right = rgt;
  return index;
}

std::optional<SplitCandidate> TreeBuilder::find_split(const std::vector<std::size_t>& rows,
                                                      const std::vector<std::size_t>& counts) {
  const auto d = static_cast<std::size_t>(X_.cols());
  const bool subsample = rng_ != nullptr && params_.features_per_split > 0 &&
                         static_cast<std::size_t>(params_.features_per_split) < d;
  const std::size_t wanted = subsample ? static_cast<std::size_t>(params_.features_per_split) : d;
  const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));

  std::optional<SplitCandidate> best;
  std::vector<std::size_t> left(counts.size());
  std::vector<std::size_t> right(counts.size());
  std::size_t evaluated = 0;
  // Partial Fisher-Yates: position p holds the p-th drawn feature. Features
  // that are constant within the node do not count towards `wanted`, and the
  // scan continues until a valid split exists or every feature was seen.
  for (std::size_t p = 0; p < d; ++p) {
    if (evaluated >= wanted && best) break;
    if (subsample) {
      const auto j = p + static_cast<std::size_t>(rng_->index(d - p));
      std::swap(feature_order_[p], feature_order_[j]);
    }
    const int f = feature_order_[p];

    keyed_.clear();
    const float* column = X_.col(f).data();
    const auto first = float_key(column[rows.front()]);
    std::uint32_t differing = 0;
    for (auto r : rows) {
      const auto k = float_key(column[r]);
      differing |= k ^ first;
      keyed_.push_back({k, y_[r]});
    }
    if (differing == 0) continue;
    ++evaluated;
    sort_keys(keyed_, scratch_, differing);

    std::fill(left.begin(), left.end(), 0);
    right = counts;
    for (std::size_t i = 0; i + 1 < keyed_.size(); ++i) {
      const auto k = static_cast<std::size_t>(keyed_[i].label);
      ++left[k];
      --right[k];
      if (keyed_[i].key == keyed_[i + 1].key) continue;
      const std::size_t n_left = i + 1;
      if (n_left < min_leaf || keyed_.size() - n_left < min_leaf) continue;
      SplitCandidate c;
      c.impurity = split_impurity(left, right);
      c.feature = f;
      c.threshold = 0.5 * (static_cast<double>(key_value(keyed_[i].key)) +
                           static_cast<double>(key_value(keyed_[i + 1].key)));
      if (!best || c.better_than(*best)) best = c;
    }
  }
  return best;
}

}  // namespace detail

DecisionTree fit_tree(const FeatureMatrix& X, std::span<const int> y, int n_classes, const TreeParams& params) {
  if (X.rows() == 0) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  }
  for (int label : y) {
    if (label < 0 || label >= n_classes) throw Error(ErrorCode::LabelOutsideClassSet, std::to_string(label));
  }
  TreeParams p = params;
  p.features_per_split = 0;
  const auto columns = detail::to_columns(X);
  detail::TreeBuilder builder(columns, y, n_classes, p, nullptr);
  std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return builder.build(std::move(rows));
}

}  // namespace ctguard::learn
