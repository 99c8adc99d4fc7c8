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

// Fixed, exhaustive augmentation family: axis flips, +/-k pixel shifts and
// rotations in whole-degree steps. All members are deterministic.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ctguard/error.hpp"
#include "ctguard/image.hpp"

namespace ctguard::augment {

struct AugmentSpec {
  bool flips = true;
  bool shifts = true;
  bool rotations = true;
  int shift_magnitude = 4;  ///< pixels
  int rotation_step = 6;    ///< degrees

  static AugmentSpec full() { return {}; }
  static AugmentSpec flips_and_shifts() {
    AugmentSpec s;
    s.rotations = false;
    return s;
  }

  /// Throws InvalidAugmentSpec.
  void validate() const;
  /// Outputs per input, including the original.
  std::size_t member_count() const;
};

/// Mirror across the horizontal axis (row order reversed).
template <typename Derived>
Image<typename Derived::Scalar> flip_x(const Eigen::MatrixBase<Derived>& img) {
  return img.colwise().reverse();
}

/// Mirror across the vertical axis (column order reversed).
template <typename Derived>
Image<typename Derived::Scalar> flip_y(const Eigen::MatrixBase<Derived>& img) {
  return img.rowwise().reverse();
}

template <typename Derived>
Image<typename Derived::Scalar> flip_both(const Eigen::MatrixBase<Derived>& img) {
  return img.reverse();
}

/// Moves content by dx columns (positive = right) and dy rows (positive =
/// down); vacated pixels are zero.
/// out(r, c) = img(r + dy, c + dx); vacated pixels are 0.
template <typename Derived>
Image<typename Derived::Scalar> shift(const Eigen::MatrixBase<Derived>& img, Eigen::Index dx, Eigen::Index dy) {
  const Eigen::Index rows = img.rows();
  const Eigen::Index cols = img.cols();
  if (std::abs(dx) >= cols || std::abs(dy) >= rows) {
    throw Error(ErrorCode::InvalidAugmentSpec, "shift exceeds image extent");
  }
  Image<typename Derived::Scalar> out = Image<typename Derived::Scalar>::Zero(rows, cols);
  const Eigen::Index h = rows - std::abs(dy);
  const Eigen::Index w = cols - std::abs(dx);
  out.block(std::max<Eigen::Index>(-dy, 0), std::max<Eigen::Index>(-dx, 0), h, w) =
      img.block(std::max<Eigen::Index>(dy, 0), std::max<Eigen::Index>(dx, 0), h, w);
  return out;
}

/// Counter-clockwise rotation about the image centre. Quarter turns are
/// exact index permutations; other angles use inverse-mapped bilinear
/// sampling with zero fill outside the source.
template <typename Derived>
Image<typename Derived::Scalar> rotate(const Eigen::MatrixBase<Derived>& img, double degrees) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = img.rows();
  if (img.cols() != n) throw Error(ErrorCode::NonSquareRotation, "rotate requires a square image");
  double deg = std::fmod(degrees, 360.0);
  if (deg < 0.0) deg += 360.0;

  Image<Scalar> out(n, n);
  if (deg == 0.0) return img;
  if (deg == 90.0) {
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) out(r, c) = img(c, n - 1 - r);
    return out;
  }
  if (deg == 180.0) return img.reverse();
  if (deg == 270.0) {
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) out(r, c) = img(n - 1 - c, r);
    return out;
  }

  constexpr double kEdge = 1e-9;
  const double theta = deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double centre = 0.5 * static_cast<double>(n - 1);
  const double last = static_cast<double>(n - 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double y = static_cast<double>(r) - centre;
    for (Eigen::Index c = 0; c < n; ++c) {
      const double x = static_cast<double>(c) - centre;
      double sx = cs * x - sn * y + centre;
      double sy = sn * x + cs * y + centre;
      if (sx < -kEdge || sy < -kEdge || sx > last + kEdge || sy > last + kEdge) {
        out(r, c) = Scalar(0);
        continue;
      }
      sx = std::clamp(sx, 0.0, last);
      sy = std::clamp(sy, 0.0, last);
      const auto r0 = static_cast<Eigen::Index>(std::floor(sy));
      const auto c0 = static_cast<Eigen::Index>(std::floor(sx));
      const Eigen::Index r1 = std::min(r0 + 1, n - 1);
      const Eigen::Index c1 = std::min(c0 + 1, n - 1);
      const double fy = sy - static_cast<double>(r0);
      const double fx = sx - static_cast<double>(c0);
      const double v = (1.0 - fy) * ((1.0 - fx) * static_cast<double>(img(r0, c0)) +
                                     fx * static_cast<double>(img(r0, c1))) +
                       fy * ((1.0 - fx) * static_cast<double>(img(r1, c0)) +
                             fx * static_cast<double>(img(r1, c1)));
      out(r, c) = static_cast<Scalar>(v);
    }
  }
  return out;
}

/// [original] ++ flips ++ shifts ++ rotations, in that order:
///   flips     flip_x, flip_y, flip_both
///   shifts    (dx, dy) over {-k, 0, +k}^2 minus (0, 0), dx-major
///   rotations step, 2*step, ..., 360 - step degrees
template <typename Derived>
std::vector<Image<typename Derived::Scalar>> augment_image(const Eigen::MatrixBase<Derived>& img,
                                                           const AugmentSpec& spec) {
  spec.validate();
  if (spec.rotations && img.rows() != img.cols()) {
    throw Error(ErrorCode::NonSquareRotation, "rotations requested on " + std::to_string(img.rows()) +
                                                  "x" + std::to_string(img.cols()) + " input");
  }
  std::vector<Image<typename Derived::Scalar>> out;
  out.reserve(spec.member_count());
  out.emplace_back(img);
  if (spec.flips) {
    out.push_back(flip_x(img));
    out.push_back(flip_y(img));
    out.push_back(flip_both(img));
  }
  if (spec.shifts) {
    const Eigen::Index k = spec.shift_magnitude;
    for (Eigen::Index dx : {-k, Eigen::Index{0}, k}) {
      for (Eigen::Index dy : {-k, Eigen::Index{0}, k}) {
        if (dx == 0 && dy == 0) continue;
        out.push_back(shift(img, dx, dy));
      }
    }
  }
  if (spec.rotations) {
    for (int angle = spec.rotation_step; angle < 360; angle += spec.rotation_step) {
      out.push_back(rotate(img, angle));
    }
  }
  return out;
}

}  // namespace ctguard::augment
