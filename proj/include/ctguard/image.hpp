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

#include <Eigen/Dense>

namespace ctguard {

/// Dense 2-D raster, row-major so that `flatten` is a plain memory view.
template <typename Scalar>
using Image = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageF = Image<float>;
using ImageD = Image<double>;

/// One sample per row.
using FeatureMatrix = Image<float>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Row-major flattening, length rows * cols.
template <typename Derived>
RowVector<typename Derived::Scalar> flatten(const Eigen::MatrixBase<Derived>& img) {
  const Image<typename Derived::Scalar> tmp = img;
  return Eigen::Map<const RowVector<typename Derived::Scalar>>(tmp.data(), tmp.size());
}

template <typename Derived>
Image<typename Derived::Scalar> reshape(const Eigen::MatrixBase<Derived>& vec, Eigen::Index rows,
                                        Eigen::Index cols) {
  const RowVector<typename Derived::Scalar> tmp = vec;
  return Eigen::Map<const Image<typename Derived::Scalar>>(tmp.data(), rows, cols);
}

}  // namespace ctguard
