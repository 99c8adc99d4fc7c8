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

// Minimal DICOM Part-10 codec for uncompressed 16-bit CT slices.
//
// Reads Explicit and Implicit VR Little Endian; writes Explicit VR Little
// Endian only. Anything else (compressed, big-endian, undefined-length
// items) is rejected with UnsupportedTransferSyntax.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctguard/bytes.hpp"
#include "ctguard/image.hpp"

namespace ctguard::dicom {

struct Tag {
  std::uint16_t group = 0;
  std::uint16_t element = 0;

  constexpr auto operator<=>(const Tag&) const = default;
  std::string str() const;
};

namespace tags {
inline constexpr Tag kTransferSyntax{0x0002, 0x0010};
inline constexpr Tag kPatientId{0x0010, 0x0020};
inline constexpr Tag kInstanceNumber{0x0020, 0x0013};
inline constexpr Tag kSliceLocation{0x0020, 0x1041};
inline constexpr Tag kRows{0x0028, 0x0010};
inline constexpr Tag kColumns{0x0028, 0x0011};
inline constexpr Tag kBitsAllocated{0x0028, 0x0100};
inline constexpr Tag kPixelRepresentation{0x0028, 0x0103};
inline constexpr Tag kRescaleIntercept{0x0028, 0x1052};
inline constexpr Tag kRescaleSlope{0x0028, 0x1053};
inline constexpr Tag kPixelData{0x7FE0, 0x0010};
}  // namespace tags

inline constexpr std::string_view kExplicitVrLittleEndian = "1.2.840.10008.1.2.1";
inline constexpr std::string_view kImplicitVrLittleEndian = "1.2.840.10008.1.2";

/// One data element. For implicit-VR input the VR is inferred from a small
/// built-in dictionary ("UN" when unknown).
struct TagValue {
  Tag tag;
  std::array<char, 2> vr{'U', 'N'};
  Bytes payload;
};

/// Stored (pre-rescale) pixel values, already sign-interpreted.
using StoredPixels = Image<std::int32_t>;

struct SliceHeader {
  std::string patient_id;
  std::int32_t instance_number = 0;
  std::optional<double> slice_location;
  int pixel_representation = 0;  ///< 0 unsigned, 1 two's complement
  double rescale_slope = 1.0;
  double rescale_intercept = 0.0;

  bool operator==(const SliceHeader&) const = default;
};

/// Validated CT slice. Immutable once constructed; the constructor throws
/// InvalidSlice on any invariant violation (zero slope, empty raster,
/// out-of-range stored values, unencodable patient id).
class DicomSlice {
 public:
  DicomSlice(SliceHeader header, StoredPixels pixels);

  const SliceHeader& header() const noexcept { return header_; }
  const std::string& patient_id() const noexcept { return header_.patient_id; }
  std::int32_t instance_number() const noexcept { return header_.instance_number; }
  std::optional<double> slice_location() const noexcept { return header_.slice_location; }
  int pixel_representation() const noexcept { return header_.pixel_representation; }
  double rescale_slope() const noexcept { return header_.rescale_slope; }
  double rescale_intercept() const noexcept { return header_.rescale_intercept; }
  static constexpr int bits_allocated() noexcept { return 16; }
  Eigen::Index rows() const noexcept { return pixels_.rows(); }
  Eigen::Index cols() const noexcept { return pixels_.cols(); }
  const StoredPixels& stored_pixels() const noexcept { return pixels_; }

  bool operator==(const DicomSlice& other) const {
    return header_ == other.header_ && pixels_.rows() == other.pixels_.rows() &&
           pixels_.cols() == other.pixels_.cols() && pixels_ == other.pixels_;
  }

 private:
  SliceHeader header_;
  StoredPixels pixels_;
};

/// Decodes the file meta group and returns the transfer syntax UID together
/// with the offset where the main dataset starts.
struct MetaInfo {
  std::string transfer_syntax;
  std::size_t dataset_offset = 0;
};
MetaInfo parse_meta(std::span<const std::uint8_t> bytes);

/// All top-level elements of the main dataset, in file order.
std::vector<TagValue> parse_dataset(std::span<const std::uint8_t> bytes);

/// `warnings`, when given, receives non-fatal findings (e.g. a missing
/// PixelRepresentation that was defaulted to unsigned).
DicomSlice parse_slice(std::span<const std::uint8_t> bytes,
                       std::vector<std::string>* warnings = nullptr);
DicomSlice read_slice(const std::filesystem::path& path,
                      std::vector<std::string>* warnings = nullptr);

Bytes write_slice(const DicomSlice& slice);
void write_slice_file(const DicomSlice& slice, const std::filesystem::path& path);

/// Ordered stack of slices from one patient with shared geometry.
class ScanVolume {
 public:
  /// Sorts by instance number, then slice location (absent last), then the
  /// optional per-slice name. Throws EmptyVolume, MixedPatients or
  /// InconsistentGeometry.
  explicit ScanVolume(std::vector<DicomSlice> slices, std::vector<std::string> names = {});

  const std::string& patient_id() const noexcept { return slices_.front().patient_id(); }
  std::size_t size() const noexcept { return slices_.size(); }
  const DicomSlice& operator[](std::size_t i) const { return slices_.at(i); }
  const std::vector<DicomSlice>& slices() const noexcept { return slices_; }
  Eigen::Index rows() const noexcept { return slices_.front().rows(); }
  Eigen::Index cols() const noexcept { return slices_.front().cols(); }

 private:
  std::vector<DicomSlice> slices_;
};

/// Loads every Part-10 file in `directory` (non-recursive). Files without the
/// DICM magic are skipped; any other parse failure propagates.
ScanVolume load_volume(const std::filesystem::path& directory,
                       std::vector<std::string>* warnings = nullptr);

}  // namespace ctguard::dicom
