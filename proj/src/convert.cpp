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

#include "ctguard/convert.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>

namespace ctguard::convert {

namespace {

std::optional<int> as_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Integer or decimal, rounded half away from zero.
std::optional<int> as_pixel(const std::string& s) {
  if (auto i = as_int(s)) return i;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v) || std::abs(v) > 1e9) {
    return std::nullopt;
  }
  return static_cast<int>(std::lround(v));
}

struct Columns {
  std::map<std::string, std::size_t> index;

  std::size_t at(const std::string& name) const { return index.at(name); }
};

Columns header_columns(const std::string& header, std::initializer_list<std::string> required) {
  Columns c;
  const auto fields = cohort::split_csv(header);
  for (std::size_t i = 0; i < fields.size(); ++i) c.index.emplace(fields[i], i);
  for (const auto& name : required) {
    if (!c.index.contains(name)) throw Error(ErrorCode::MalformedRow, "line 1: missing column '" + name + "'");
  }
  return c;
}

}  // namespace

std::string_view to_string(SourceFormat format) noexcept {
  switch (format) {
    case SourceFormat::Native: return "native";
    case SourceFormat::CtGan: return "ctgan";
    case SourceFormat::Lidc: return "lidc";
    case SourceFormat::Phantom: return "phantom";
  }
  return "?";
}

SourceFormat source_format_from_string(std::string_view s) {
  for (auto f : {SourceFormat::Native, SourceFormat::CtGan, SourceFormat::Lidc, SourceFormat::Phantom}) {
    if (s == to_string(f)) return f;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown annotation format '" + std::string(s) + "'");
}

Conversion convert_stream(SourceFormat format, std::istream& in) {
  if (format == SourceFormat::Phantom) {
    throw Error(ErrorCode::InvalidConfig, "phantom input is a manifest file, not a stream");
  }
  Conversion out;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, "line 1: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  Columns cols;
  switch (format) {
    case SourceFormat::Native: cols = header_columns(line, {"patient_id", "slice", "x", "y", "tag"}); break;
    case SourceFormat::CtGan: cols = header_columns(line, {"type", "uuid", "slice", "x", "y"}); break;
    case SourceFormat::Lidc: cols = header_columns(line, {"patient_id", "slice_index", "x", "y"}); break;
    case SourceFormat::Phantom: break;
  }
  const std::size_t width = cohort::split_csv(line).size();

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = cohort::split_csv(line);
    const auto skip = [&](const std::string& why) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() != width) {
      skip("expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()));
      continue;
    }
    cohort::Annotation a;
    std::optional<int> slice, x, y;
    std::string tag;
    switch (format) {
      case SourceFormat::Native:
        a.patient_id = f[cols.at("patient_id")];
        slice = as_int(f[cols.at("slice")]);
        x = as_int(f[cols.at("x")]);
        y = as_int(f[cols.at("y")]);
        tag = f[cols.at("tag")];
        break;
      case SourceFormat::CtGan: {
        a.patient_id = f[cols.at("uuid")];
        slice = as_int(f[cols.at("slice")]);
        x = as_pixel(f[cols.at("x")]);
        y = as_pixel(f[cols.at("y")]);
        const auto& type = f[cols.at("type")];
        tag = type == "TB" || type == "TM" ? "NODULE" : type;
        break;
      }
      case SourceFormat::Lidc:
        a.patient_id = f[cols.at("patient_id")];
        slice = as_int(f[cols.at("slice_index")]);
        x = as_pixel(f[cols.at("x")]);
        y = as_pixel(f[cols.at("y")]);
        tag = "NODULE";
        break;
      case SourceFormat::Phantom: break;
    }
    if (a.patient_id.empty()) {
      skip("empty patient id");
      continue;
    }
    if (!slice || !x || !y || *slice < 0 || *x < 0 || *y < 0) {
      skip("slice, x and y must be non-negative integers");
      continue;
    }
    if (tag == "FB") {
      a.tag = cohort::AnnotationTag::FB;
    } else if (tag == "FM") {
      a.tag = cohort::AnnotationTag::FM;
    } else if (tag == "NODULE") {
      a.tag = cohort::AnnotationTag::Nodule;
    } else {
      skip("unknown tag '" + tag + "'");
      continue;
    }
    a.slice_index = *slice;
    a.x = *x;
    a.y = *y;
    out.annotations.push_back(std::move(a));
  }
  return out;
}

Conversion convert_file(SourceFormat format, const std::filesystem::path& input) {
  if (format != SourceFormat::Phantom) {
    std::ifstream in(input);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + input.string());
    return convert_stream(format, in);
  }
  const auto manifest = cohort::load_manifest(input);
  const auto annotations_path = input.parent_path() / manifest.annotations;
  std::ifstream in(annotations_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + annotations_path.string());
  auto out = convert_stream(SourceFormat::Native, in);
  std::erase_if(out.annotations, [&](const cohort::Annotation& a) {
    const auto* p = manifest.find(a.patient_id);
    if (p == nullptr) {
      out.warnings.push_back(a.patient_id + " slice " + std::to_string(a.slice_index) + ": patient not in manifest");
      return true;
    }
    if (cohort::label_for(a.tag) != p->label) {
      out.warnings.push_back(a.patient_id + " slice " + std::to_string(a.slice_index) + ": tag " +
                             std::string(cohort::to_string(a.tag)) + " contradicts label " +
                             std::string(cohort::to_string(p->label)));
      return true;
    }
    return false;
  });
  return out;
}

}  // namespace ctguard::convert
