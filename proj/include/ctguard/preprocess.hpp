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

// Pixel pipeline: stored values -> Hounsfield units -> windowed [0,1]
// intensities -> one of three spatial regimes (raw, localized crop,
// negative-space-reduced canvas).

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ctguard/dicom.hpp"
#include "ctguard/error.hpp"
#include "ctguard/image.hpp"

namespace ctguard::preprocess {

enum class RegimeKind { Raw, Localized, NegSpace };

std::string_view to_string(RegimeKind kind) noexcept;
RegimeKind regime_kind_from_string(std::string_view name);

struct PreprocessRegime {
  RegimeKind kind = RegimeKind::Raw;
  double window_low = -1000.0;   ///< HU mapped to 0
  double window_high = 400.0;    ///< HU mapped to 1
  int crop_size = 128;           ///< Localized only
  int canvas_rows = 266;         ///< NegSpace only
  int canvas_cols = 340;         ///< NegSpace only
  double body_threshold = 0.05;  ///< NegSpace only, normalized intensity

  static PreprocessRegime raw() { return {}; }
  static PreprocessRegime localized(int crop = 128) {
    PreprocessRegime r;
    r.kind = RegimeKind::Localized;
    r.crop_size = crop;
    return r;
  }
  static PreprocessRegime negspace(int rows = 266, int cols = 340) {
    PreprocessRegime r;
    r.kind = RegimeKind::NegSpace;
    r.canvas_rows = rows;
    r.canvas_cols = cols;
    return r;
  }

  /// Throws InvalidRegime.
  void validate() const;
  /// Canonical text form; only fields that affect the output are included.
  std::string describe() const;
  std::uint64_t fingerprint() const;

  bool operator==(const PreprocessRegime&) const = default;
};

/// HU = slope * stored + intercept, element-wise.
ImageD to_hu(const dicom::DicomSlice& slice);

/// clamp((hu - low) / (high - low), 0, 1).
template <typename Derived>
Image<typename Derived::Scalar> normalize(const Eigen::MatrixBase<Derived>& hu, double low, double high) {
  using Scalar = typename Derived::Scalar;
  if (!(low < high)) throw Error(ErrorCode::InvalidRegime, "window low must be below high");
  const auto lo = static_cast<Scalar>(low);
  const auto width = static_cast<Scalar>(high - low);
  return ((hu.array() - lo) / width).cwiseMax(Scalar(0)).cwiseMin(Scalar(1)).matrix();
}

/// Top-left corner of a size x size window centred on (center_x, center_y),
/// translated to stay inside a rows x cols image.
struct CropWindow {
  Eigen::Index row0 = 0;
  Eigen::Index col0 = 0;
  Eigen::Index size = 0;
};

CropWindow localize_window(Eigen::Index rows, Eigen::Index cols, Eigen::Index center_x,
                           Eigen::Index center_y, Eigen::Index size);

template <typename Derived>
Image<typename Derived::Scalar> localize(const Eigen::MatrixBase<Derived>& img, Eigen::Index center_x,
                                         Eigen::Index center_y, Eigen::Index size) {
  const auto w = localize_window(img.rows(), img.cols(), center_x, center_y, size);
  return img.block(w.row0, w.col0, w.size, w.size);
}

/// Inclusive bounds.
struct BoundingBox {
  Eigen::Index first_row = 0;
  Eigen::Index first_col = 0;
  Eigen::Index last_row = 0;
  Eigen::Index last_col = 0;

  Eigen::Index rows() const noexcept { return last_row - first_row + 1; }
  Eigen::Index cols() const noexcept { return last_col - first_col + 1; }
  bool operator==(const BoundingBox&) const = default;
};

/// Tight box around every pixel strictly above `threshold`; nullopt if none.
template <typename Derived>
std::optional<BoundingBox> foreground_bbox(const Eigen::MatrixBase<Derived>& img, double threshold) {
  const auto mask = (img.array() > static_cast<typename Derived::Scalar>(threshold)).eval();
  const auto row_hit = mask.rowwise().any().eval();
  const auto col_hit = mask.colwise().any().eval();
  if (!row_hit.any()) return std::nullopt;
  BoundingBox box;
  Eigen::Index i = 0;
  while (!row_hit(i)) ++i;
  box.first_row = i;
  i = row_hit.size() - 1;
  while (!row_hit(i)) --i;
  box.last_row = i;
  i = 0;
  while (!col_hit(i)) ++i;
  box.first_col = i;
  i = col_hit.size() - 1;
  while (!col_hit(i)) --i;
  box.last_col = i;
  return box;
}

/// Centre-pads (with zeros) or centre-crops each axis independently to
/// exactly rows x cols.
template <typename Derived>
Image<typename Derived::Scalar> fit_canvas(const Eigen::MatrixBase<Derived>& img, Eigen::Index rows,
                                           Eigen::Index cols) {
  Image<typename Derived::Scalar> out = Image<typename Derived::Scalar>::Zero(rows, cols);
  const auto span = [](Eigen::Index have, Eigen::Index want) {
    // {source offset, destination offset, extent}
    if (have <= want) return std::array<Eigen::Index, 3>{0, (want - have) / 2, have};
    return std::array<Eigen::Index, 3>{(have - want) / 2, 0, want};
  };
  const auto r = span(img.rows(), rows);
  const auto c = span(img.cols(), cols);
  out.block(r[1], c[1], r[2], c[2]) = img.block(r[0], c[0], r[2], c[2]);
  return out;
}

template <typename Derived>
Image<typename Derived::Scalar> reduce_negative_space(const Eigen::MatrixBase<Derived>& img,
                                                      double body_threshold, Eigen::Index canvas_rows,
                                                      Eigen::Index canvas_cols) {
  const auto box = foreground_bbox(img, body_threshold);
  if (!box) throw Error(ErrorCode::EmptyForeground, "no pixel above body threshold");
  return fit_canvas(img.block(box->first_row, box->first_col, box->rows(), box->cols()), canvas_rows,
                    canvas_cols);
}

struct SiteCenter {
  Eigen::Index x = 0;  ///< column
  Eigen::Index y = 0;  ///< row
};

/// Full per-slice pipeline. Localized crops use `center`, falling back to
/// the image centre when absent.
ImageF apply_regime(const dicom::DicomSlice& slice, const PreprocessRegime& regime,
                    std::optional<SiteCenter> center = std::nullopt);

}  // namespace ctguard::preprocess
