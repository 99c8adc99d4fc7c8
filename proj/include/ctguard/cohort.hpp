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

// Labelled sample assembly: annotation CSV + cohort manifest + volumes ->
// preprocessed samples, class balancing, and train/test partitioning.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctguard/dicom.hpp"
#include "ctguard/image.hpp"
#include "ctguard/preprocess.hpp"

namespace ctguard::cohort {

enum class AnnotationTag : std::uint8_t { FB, FM, Nodule };
enum class Label : std::uint8_t { Untampered = 0, FB = 1, FM = 2 };
enum class Trial : std::uint8_t { Blind = 0, Open = 1, NA = 2 };

inline constexpr int kLabelCount = 3;

std::string_view to_string(AnnotationTag tag) noexcept;
std::string_view to_string(Label label) noexcept;
std::string_view to_string(Trial trial) noexcept;
Label label_from_string(std::string_view s);
Trial trial_from_string(std::string_view s);
Label label_for(AnnotationTag tag) noexcept;

struct Annotation {
  std::string patient_id;
  int slice_index = 0;
  int x = 0;  ///< column
  int y = 0;  ///< row
  AnnotationTag tag = AnnotationTag::Nodule;

  bool operator==(const Annotation&) const = default;
};

/// Comma-separated fields of one line; no quoting.
std::vector<std::string> split_csv(const std::string& line);

/// CSV with header `patient_id,slice,x,y,tag`. Throws MalformedRow or
/// UnknownTag carrying the 1-based line number (header is line 1).
std::vector<Annotation> parse_annotations(std::istream& in);
std::vector<Annotation> load_annotations(const std::filesystem::path& path);
void write_annotations(std::ostream& out, std::span<const Annotation> annotations);
void save_annotations(const std::filesystem::path& path, std::span<const Annotation> annotations);

struct SourceRef {
  std::string patient_id;
  int slice_index = 0;

  auto operator<=>(const SourceRef&) const = default;
};

struct Sample {
  ImageF image;
  Label label = Label::Untampered;
  Trial trial = Trial::NA;
  SourceRef source;
};

struct PatientEntry {
  std::string patient_id;
  std::string directory;  ///< relative to the manifest file
  Label label = Label::Untampered;
  Trial trial = Trial::NA;

  bool operator==(const PatientEntry&) const = default;
};

struct CohortManifest {
  std::vector<PatientEntry> patients;
  std::string annotations = "annotations.csv";  ///< relative to the manifest file

  const PatientEntry* find(std::string_view patient_id) const;
  bool operator==(const CohortManifest&) const = default;
};

CohortManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const CohortManifest& manifest, const std::filesystem::path& path);

/// Volumes and annotations referenced by a manifest on disk.
struct LoadedCohort {
  CohortManifest manifest;
  std::vector<dicom::ScanVolume> volumes;
  std::vector<Annotation> annotations;
};
LoadedCohort load_cohort(const std::filesystem::path& manifest_path,
                         std::vector<std::string>* warnings = nullptr);

struct ClassCounts {
  std::size_t untampered = 0;
  std::size_t fb = 0;
  std::size_t fm = 0;
  std::size_t total = 0;

  std::size_t of(Label label) const noexcept;
  bool operator==(const ClassCounts&) const = default;
};

ClassCounts count_classes(std::span<const Sample> samples);

/// Annotated slices become samples labelled by their tag; patients without
/// annotations that the manifest lists as untampered contribute every slice.
/// One sample per (patient, slice); later duplicates are dropped with a
/// warning.
std::vector<Sample> assemble(std::span<const dicom::ScanVolume> volumes,
                             std::span<const Annotation> annotations, const CohortManifest& manifest,
                             const preprocess::PreprocessRegime& regime,
                             std::vector<std::string>* warnings = nullptr);

/// Down-samples the untampered class (seeded, uniform) to the size of the
/// smallest tampered class present. Tampered samples are never dropped;
/// relative order is preserved.
std::vector<Sample> balance(std::vector<Sample> samples, std::uint64_t seed);

enum class SplitPolicy { TrialBased, Ratio85_15 };

std::string_view to_string(SplitPolicy policy) noexcept;
SplitPolicy split_policy_from_string(std::string_view s);

struct SplitPlan {
  std::vector<std::size_t> train;  ///< indices into the sample list, ascending
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  SplitPolicy policy = SplitPolicy::TrialBased;
};

/// Stratified 85:15 per class (train size ceil(0.85 n), at most n - 1).
/// Under TrialBased the tampered classes follow their trial instead:
/// BLIND -> train, OPEN -> test. Throws ClassTooSmall.
SplitPlan split(std::span<const Sample> samples, SplitPolicy policy, std::uint64_t seed);

/// Preprocessed sample cache: little-endian f32 tensor with a header
/// (magic, version, regime fingerprint, dims) followed by per-sample
/// metadata. All samples must share one shape.
void save_samples(const std::filesystem::path& path, std::span<const Sample> samples,
                  std::uint64_t regime_fingerprint);

struct SampleFile {
  std::uint64_t regime_fingerprint = 0;
  std::vector<Sample> samples;
};
SampleFile load_samples(const std::filesystem::path& path);

}  // namespace ctguard::cohort
