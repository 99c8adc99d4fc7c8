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

// Converters from external annotation layouts to the native annotation CSV
// (`patient_id,slice,x,y,tag`). Coordinates are 0-based pixel indices.
//
//   native   the native CSV itself; malformed rows are dropped
//   ctgan    header with columns type, uuid, slice, x, y (any order, extra
//            columns ignored); uuid -> patient_id, type FB/FM kept,
//            TB/TM (untouched scans) -> NODULE
//   lidc     header with columns patient_id, slice_index, x, y; every row
//            is a NODULE; fractional centroids are rounded to the nearest
//            pixel
//   phantom  a phantom corpus manifest.json; emits its annotation file after
//            checking every row against the manifest

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ctguard/cohort.hpp"

namespace ctguard::convert {

enum class SourceFormat { Native, CtGan, Lidc, Phantom };

std::string_view to_string(SourceFormat format) noexcept;
SourceFormat source_format_from_string(std::string_view s);

struct Conversion {
  std::vector<cohort::Annotation> annotations;
  /// One entry per skipped row, prefixed with its 1-based line number.
  std::vector<std::string> warnings;
};

/// CSV-based formats. Throws MalformedRow when the header is unusable.
Conversion convert_stream(SourceFormat format, std::istream& in);
Conversion convert_file(SourceFormat format, const std::filesystem::path& input);

}  // namespace ctguard::convert
