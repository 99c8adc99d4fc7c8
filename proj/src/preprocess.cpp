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

#include "ctguard/preprocess.hpp"

#include "ctguard/bytes.hpp"
#include "ctguard/text.hpp"

namespace ctguard::preprocess {

std::string_view to_string(RegimeKind kind) noexcept {
  switch (kind) {
    case RegimeKind::Raw: return "RAW";
    case RegimeKind::Localized: return "LOCALIZED";
    case RegimeKind::NegSpace: return "NEGSPACE";
  }
  return "?";
}

RegimeKind regime_kind_from_string(std::string_view name) {
  if (name == "RAW") return RegimeKind::Raw;
  if (name == "LOCALIZED") return RegimeKind::Localized;
  if (name == "NEGSPACE") return RegimeKind::NegSpace;
  throw Error(ErrorCode::InvalidRegime, "unknown regime " + std::string(name));
}

void PreprocessRegime::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidRegime, what); };
  if (!(window_low < window_high)) fail("window_low must be below window_high");
  if (kind == RegimeKind::Localized && (crop_size < 8 || crop_size % 2 != 0)) {
    fail("crop_size must be even and >= 8");
  }
  if (kind == RegimeKind::NegSpace) {
    if (canvas_rows <= 0 || canvas_cols <= 0) fail("canvas dimensions must be positive");
    if (!(body_threshold >= 0.0 && body_threshold < 1.0)) fail("body_threshold must be in [0,1)");
  }
}

std::string PreprocessRegime::describe() const {
  std::string s = "kind=" + std::string(to_string(kind)) + ";window=" + shortest(window_low) + "," +
                  shortest(window_high);
  if (kind == RegimeKind::Localized) s += ";crop=" + std::to_string(crop_size);
  if (kind == RegimeKind::NegSpace) {
    s += ";canvas=" + std::to_string(canvas_rows) + "x" + std::to_string(canvas_cols) +
         ";body_threshold=" + shortest(body_threshold);
  }
  return s;
}

std::uint64_t PreprocessRegime::fingerprint() const { return fnv1a(describe()); }

ImageD to_hu(const dicom::DicomSlice& slice) {
  return (slice.stored_pixels().cast<double>().array() * slice.rescale_slope() +
          slice.rescale_intercept())
      .matrix();
}

CropWindow localize_window(Eigen::Index rows, Eigen::Index cols, Eigen::Index center_x,
                           Eigen::Index center_y, Eigen::Index size) {
  if (size <= 0 || size > std::min(rows, cols)) {
    throw Error(ErrorCode::SizeExceedsImage, "crop " + std::to_string(size) + " on " +
                                                 std::to_string(rows) + "x" + std::to_string(cols));
  }
  CropWindow w;
  w.size = size;
  w.row0 = std::clamp<Eigen::Index>(center_y - size / 2, 0, rows - size);
  w.col0 = std::clamp<Eigen::Index>(center_x - size / 2, 0, cols - size);
  return w;
}

ImageF apply_regime(const dicom::DicomSlice& slice, const PreprocessRegime& regime,
                    std::optional<SiteCenter> center) {
  regime.validate();
  const ImageF norm = normalize(to_hu(slice), regime.window_low, regime.window_high).cast<float>();
  switch (regime.kind) {
    case RegimeKind::Raw:
      return norm;
    case RegimeKind::Localized: {
      const auto c = center.value_or(SiteCenter{norm.cols() / 2, norm.rows() / 2});
      return localize(norm, c.x, c.y, regime.crop_size);
    }
    case RegimeKind::NegSpace:
      return reduce_negative_space(norm, regime.body_threshold, regime.canvas_rows, regime.canvas_cols);
  }
  return norm;
}

}  // namespace ctguard::preprocess
