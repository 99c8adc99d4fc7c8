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

#include "ctguard/dicom.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace ctguard::dicom {

namespace {

constexpr std::size_t kPreambleSize = 128;
constexpr std::string_view kMagic = "DICM";
constexpr std::string_view kCtImageStorage = "1.2.840.10008.5.1.4.1.1.2";
constexpr std::string_view kImplementationClassUid = "2.25.302147613720964712738458214602318127377";
constexpr std::string_view kImplementationVersion = "CTGUARD_1";

bool long_form_vr(std::array<char, 2> vr) {
  static constexpr std::array<std::string_view, 13> kLong = {
      "OB", "OD", "OF", "OL", "OV", "OW", "SQ", "SV", "UC", "UN", "UR", "UT", "UV"};
  const std::string_view v(vr.data(), 2);
  return std::find(kLong.begin(), kLong.end(), v) != kLong.end();
}

std::array<char, 2> implicit_vr(Tag tag) {
  static const std::map<Tag, std::array<char, 2>> kDictionary = {
      {tags::kPatientId, {'L', 'O'}},          {tags::kInstanceNumber, {'I', 'S'}},
      {tags::kSliceLocation, {'D', 'S'}},      {tags::kRows, {'U', 'S'}},
      {tags::kColumns, {'U', 'S'}},            {tags::kBitsAllocated, {'U', 'S'}},
      {tags::kPixelRepresentation, {'U', 'S'}}, {tags::kRescaleIntercept, {'D', 'S'}},
      {tags::kRescaleSlope, {'D', 'S'}},       {tags::kPixelData, {'O', 'W'}},
  };
  const auto it = kDictionary.find(tag);
  return it == kDictionary.end() ? std::array<char, 2>{'U', 'N'} : it->second;
}

std::string trim_value(std::span<const std::uint8_t> payload) {
  std::string s(payload.begin(), payload.end());
  const auto is_pad = [](char c) { return c == ' ' || c == '\0'; };
  while (!s.empty() && is_pad(s.back())) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  return s.substr(start);
}

TagValue read_element(ByteReader& in, bool explicit_vr) {
  TagValue out;
  out.tag.group = in.u16();
  out.tag.element = in.u16();
  std::uint32_t length = 0;
  if (explicit_vr) {
    const auto vr = in.take(2);
    out.vr = {static_cast<char>(vr[0]), static_cast<char>(vr[1])};
    if (!std::isupper(static_cast<unsigned char>(out.vr[0])) ||
        !std::isupper(static_cast<unsigned char>(out.vr[1]))) {
      throw Error(ErrorCode::MalformedElement, "invalid VR at " + out.tag.str());
    }
    if (long_form_vr(out.vr)) {
      in.skip(2);
      length = in.u32();
    } else {
      length = in.u16();
    }
  } else {
    out.vr = implicit_vr(out.tag);
    length = in.u32();
  }
  if (length == 0xFFFFFFFFu) {
    throw Error(ErrorCode::UnsupportedTransferSyntax,
                "undefined-length element " + out.tag.str() +
                    " (sequence or encapsulated pixel data)");
  }
  if (length > in.remaining()) {
    if (out.tag == tags::kPixelData) {
      throw Error(ErrorCode::PixelLengthMismatch,
                  "pixel data declares " + std::to_string(length) + " bytes, " +
                      std::to_string(in.remaining()) + " present");
    }
    throw Error(ErrorCode::MalformedElement, "element " + out.tag.str() + " runs past end of file");
  }
  const auto payload = in.take(length);
  out.payload.assign(payload.begin(), payload.end());
  return out;
}

const TagValue* find(const std::vector<TagValue>& elements, Tag tag) {
  for (const auto& e : elements) {
    if (e.tag == tag) return &e;
  }
  return nullptr;
}

const TagValue& require(const std::vector<TagValue>& elements, Tag tag) {
  const auto* e = find(elements, tag);
  if (e == nullptr) throw Error(ErrorCode::MissingRequiredTag, tag.str());
  return *e;
}

std::uint16_t as_us(const TagValue& e) {
  if (e.payload.size() != 2) {
    throw Error(ErrorCode::MalformedElement, e.tag.str() + " is not a single US value");
  }
  return static_cast<std::uint16_t>(e.payload[0] | (e.payload[1] << 8));
}

double as_ds(const TagValue& e) {
  std::string s = trim_value(e.payload);
  if (!s.empty() && s.front() == '+') s.erase(0, 1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::MalformedElement, e.tag.str() + " is not a decimal string");
  }
  return v;
}

std::int32_t as_is(const TagValue& e) {
  std::string s = trim_value(e.payload);
  if (!s.empty() && s.front() == '+') s.erase(0, 1);
  std::int32_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedElement, e.tag.str() + " is not an integer string");
  }
  return v;
}

// --- writer ---------------------------------------------------------------

std::string format_ds(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  for (int precision = 15; s.size() > 16 && precision > 0; --precision) {
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
    s.assign(buf, r.ptr);
  }
  return s;
}

void put_element(ByteWriter& out, Tag tag, std::string_view vr, std::span<const std::uint8_t> value) {
  out.u16(tag.group);
  out.u16(tag.element);
  out.raw(vr);
  const std::array<char, 2> v{vr[0], vr[1]};
  if (long_form_vr(v)) {
    out.u16(0);
    out.u32(static_cast<std::uint32_t>(value.size()));
  } else {
    out.u16(static_cast<std::uint16_t>(value.size()));
  }
  out.raw(value);
}

void put_string(ByteWriter& out, Tag tag, std::string_view vr, std::string_view value) {
  Bytes b(value.begin(), value.end());
  if (b.size() % 2 != 0) b.push_back(vr == "UI" ? '\0' : ' ');
  put_element(out, tag, vr, b);
}

void put_us(ByteWriter& out, Tag tag, std::uint16_t value) {
  const std::array<std::uint8_t, 2> b{static_cast<std::uint8_t>(value & 0xFF),
                                      static_cast<std::uint8_t>(value >> 8)};
  put_element(out, tag, "US", b);
}

std::string instance_uid(const DicomSlice& slice) {
  std::uint64_t h = fnv1a(slice.patient_id());
  h = fnv1a(std::to_string(slice.instance_number()), h);
  return "2.25." + std::to_string(h);
}

}  // namespace

std::string Tag::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "(%04X,%04X)", group, element);
  return buf;
}

DicomSlice::DicomSlice(SliceHeader header, StoredPixels pixels)
    : header_(std::move(header)), pixels_(std::move(pixels)) {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSlice, what); };
  if (pixels_.rows() <= 0 || pixels_.cols() <= 0) fail("empty pixel raster");
  if (pixels_.rows() > 0xFFFF || pixels_.cols() > 0xFFFF) fail("raster exceeds 65535 rows/cols");
  if (header_.pixel_representation != 0 && header_.pixel_representation != 1) {
    fail("pixel_representation must be 0 or 1");
  }
  if (!std::isfinite(header_.rescale_slope) || header_.rescale_slope == 0.0) {
    fail("rescale_slope must be finite and non-zero");
  }
  if (!std::isfinite(header_.rescale_intercept)) fail("rescale_intercept must be finite");
  if (header_.slice_location && !std::isfinite(*header_.slice_location)) {
    fail("slice_location must be finite");
  }
  if (header_.instance_number < 0) fail("instance_number must be >= 0");
  const auto& id = header_.patient_id;
  if (id.empty() || id.size() > 64 || id.front() == ' ' || id.back() == ' ' ||
      std::any_of(id.begin(), id.end(), [](char c) { return c < 0x20 || c > 0x7E || c == '\\'; })) {
    fail("patient_id must be 1-64 printable characters without backslash or edge spaces");
  }
  const std::int32_t lo = header_.pixel_representation == 1 ? -32768 : 0;
  const std::int32_t hi = header_.pixel_representation == 1 ? 32767 : 65535;
  if (pixels_.minCoeff() < lo || pixels_.maxCoeff() > hi) fail("stored value outside 16-bit range");
}

MetaInfo parse_meta(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreambleSize + kMagic.size() ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin() + kPreambleSize)) {
    throw Error(ErrorCode::MissingMagic, "no DICM marker at offset 128");
  }
  ByteReader in(bytes.subspan(kPreambleSize + kMagic.size()), ErrorCode::MalformedElement);
  MetaInfo meta;
  bool have_syntax = false;
  while (in.remaining() >= 2) {
    const auto peek = bytes[kPreambleSize + kMagic.size() + in.offset()] |
                      (bytes[kPreambleSize + kMagic.size() + in.offset() + 1] << 8);
    if (peek != 0x0002) break;
    const auto e = read_element(in, true);
    if (e.tag == tags::kTransferSyntax) {
      meta.transfer_syntax = trim_value(e.payload);
      have_syntax = true;
    }
  }
  if (!have_syntax) throw Error(ErrorCode::MissingRequiredTag, tags::kTransferSyntax.str());
  meta.dataset_offset = kPreambleSize + kMagic.size() + in.offset();
  return meta;
}

std::vector<TagValue> parse_dataset(std::span<const std::uint8_t> bytes) {
  const auto meta = parse_meta(bytes);
  bool explicit_vr = false;
  if (meta.transfer_syntax == kExplicitVrLittleEndian) {
    explicit_vr = true;
  } else if (meta.transfer_syntax != kImplicitVrLittleEndian) {
    throw Error(ErrorCode::UnsupportedTransferSyntax, "transfer syntax " + meta.transfer_syntax);
  }
  ByteReader in(bytes.subspan(meta.dataset_offset), ErrorCode::MalformedElement);
  std::vector<TagValue> elements;
  while (!in.at_end()) {
    auto e = read_element(in, explicit_vr);
    if (e.tag.group == 0xFFFE) {
      throw Error(ErrorCode::MalformedElement, "item delimiter at top level");
    }
    elements.push_back(std::move(e));
  }
  return elements;
}

DicomSlice parse_slice(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
  const auto elements = parse_dataset(bytes);

  SliceHeader header;
  header.patient_id = trim_value(require(elements, tags::kPatientId).payload);
  header.instance_number = as_is(require(elements, tags::kInstanceNumber));
  if (const auto* loc = find(elements, tags::kSliceLocation); loc && !trim_value(loc->payload).empty()) {
    header.slice_location = as_ds(*loc);
  }
  const auto rows = as_us(require(elements, tags::kRows));
  const auto cols = as_us(require(elements, tags::kColumns));
  const auto bits = as_us(require(elements, tags::kBitsAllocated));
  if (bits != 16) {
    throw Error(ErrorCode::InvalidSlice, "BitsAllocated " + std::to_string(bits) + " (only 16 supported)");
  }
  if (const auto* rep = find(elements, tags::kPixelRepresentation)) {
    header.pixel_representation = as_us(*rep);
  } else {
    header.pixel_representation = 0;
    if (warnings) warnings->push_back("PixelRepresentation absent; assuming unsigned");
  }
  header.rescale_intercept = as_ds(require(elements, tags::kRescaleIntercept));
  header.rescale_slope = as_ds(require(elements, tags::kRescaleSlope));

  const auto& pixel = require(elements, tags::kPixelData);
  const std::size_t expected = static_cast<std::size_t>(rows) * cols * 2;
  if (pixel.payload.size() != expected) {
    throw Error(ErrorCode::PixelLengthMismatch,
                "rows*cols*2 = " + std::to_string(expected) + ", payload " +
                    std::to_string(pixel.payload.size()));
  }
  StoredPixels pixels(rows, cols);
  const bool is_signed = header.pixel_representation == 1;
  for (Eigen::Index i = 0; i < pixels.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i) * 2;
    const auto word = static_cast<std::uint16_t>(pixel.payload[idx] | (pixel.payload[idx + 1] << 8));
    pixels.data()[i] = is_signed ? static_cast<std::int16_t>(word) : static_cast<std::int32_t>(word);
  }
  return DicomSlice(std::move(header), std::move(pixels));
}

DicomSlice read_slice(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  const auto bytes = read_file(path);
  return parse_slice(bytes, warnings);
}

Bytes write_slice(const DicomSlice& slice) {
  ByteWriter meta;
  const std::array<std::uint8_t, 2> version{0x00, 0x01};
  put_element(meta, {0x0002, 0x0001}, "OB", version);
  put_string(meta, {0x0002, 0x0002}, "UI", kCtImageStorage);
  const auto uid = instance_uid(slice);
  put_string(meta, {0x0002, 0x0003}, "UI", uid);
  put_string(meta, tags::kTransferSyntax, "UI", kExplicitVrLittleEndian);
  put_string(meta, {0x0002, 0x0012}, "UI", kImplementationClassUid);
  put_string(meta, {0x0002, 0x0013}, "SH", kImplementationVersion);

  ByteWriter out;
  out.raw(Bytes(kPreambleSize, 0));
  out.raw(kMagic);
  ByteWriter group_length;
  group_length.u32(static_cast<std::uint32_t>(meta.size()));
  put_element(out, {0x0002, 0x0000}, "UL", group_length.bytes());
  out.raw(meta.bytes());

  put_string(out, {0x0008, 0x0016}, "UI", kCtImageStorage);
  put_string(out, {0x0008, 0x0018}, "UI", uid);
  put_string(out, {0x0008, 0x0060}, "CS", "CT");
  put_string(out, tags::kPatientId, "LO", slice.patient_id());
  put_string(out, tags::kInstanceNumber, "IS", std::to_string(slice.instance_number()));
  if (slice.slice_location()) {
    put_string(out, tags::kSliceLocation, "DS", format_ds(*slice.slice_location()));
  }
  put_us(out, {0x0028, 0x0002}, 1);
  put_string(out, {0x0028, 0x0004}, "CS", "MONOCHROME2");
  put_us(out, tags::kRows, static_cast<std::uint16_t>(slice.rows()));
  put_us(out, tags::kColumns, static_cast<std::uint16_t>(slice.cols()));
  put_us(out, tags::kBitsAllocated, 16);
  put_us(out, {0x0028, 0x0101}, 16);
  put_us(out, {0x0028, 0x0102}, 15);
  put_us(out, tags::kPixelRepresentation, static_cast<std::uint16_t>(slice.pixel_representation()));
  put_string(out, tags::kRescaleIntercept, "DS", format_ds(slice.rescale_intercept()));
  put_string(out, tags::kRescaleSlope, "DS", format_ds(slice.rescale_slope()));

  const auto& px = slice.stored_pixels();
  Bytes pixel_bytes(static_cast<std::size_t>(px.size()) * 2);
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    const auto word = static_cast<std::uint16_t>(px.data()[i]);
    pixel_bytes[static_cast<std::size_t>(i) * 2] = static_cast<std::uint8_t>(word & 0xFF);
    pixel_bytes[static_cast<std::size_t>(i) * 2 + 1] = static_cast<std::uint8_t>(word >> 8);
  }
  put_element(out, tags::kPixelData, "OW", pixel_bytes);
  return std::move(out).take();
}

void write_slice_file(const DicomSlice& slice, const std::filesystem::path& path) {
  write_file(path, write_slice(slice));
}

ScanVolume::ScanVolume(std::vector<DicomSlice> slices, std::vector<std::string> names) {
  if (slices.empty()) throw Error(ErrorCode::EmptyVolume, "no slices");
  if (names.empty()) names.resize(slices.size());
  if (names.size() != slices.size()) {
    throw Error(ErrorCode::InvalidSlice, "slice/name count mismatch");
  }
  const auto& first = slices.front();
  for (const auto& s : slices) {
    if (s.patient_id() != first.patient_id()) {
      throw Error(ErrorCode::MixedPatients, first.patient_id() + " vs " + s.patient_id());
    }
    if (s.rows() != first.rows() || s.cols() != first.cols()) {
      throw Error(ErrorCode::InconsistentGeometry,
                  std::to_string(first.rows()) + "x" + std::to_string(first.cols()) + " vs " +
                      std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
    }
  }
  std::vector<std::size_t> order(slices.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = slices[a];
    const auto& sb = slices[b];
    if (sa.instance_number() != sb.instance_number()) return sa.instance_number() < sb.instance_number();
    const auto la = sa.slice_location();
    const auto lb = sb.slice_location();
    if (la.has_value() != lb.has_value()) return la.has_value();
    if (la && *la != *lb) return *la < *lb;
    return names[a] < names[b];
  });
  slices_.reserve(slices.size());
  for (auto i : order) slices_.push_back(std::move(slices[i]));
}

ScanVolume load_volume(const std::filesystem::path& directory, std::vector<std::string>* warnings) {
  std::error_code ec;
  if (!std::filesystem::is_directory(directory, ec)) {
    throw Error(ErrorCode::Io, directory.string() + " is not a directory");
  }
  std::vector<DicomSlice> slices;
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    try {
      slices.push_back(read_slice(entry.path(), warnings));
      names.push_back(entry.path().filename().string());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingMagic) throw;
    }
  }
  if (slices.empty()) throw Error(ErrorCode::EmptyVolume, directory.string());
  return ScanVolume(std::move(slices), std::move(names));
}

}  // namespace ctguard::dicom
