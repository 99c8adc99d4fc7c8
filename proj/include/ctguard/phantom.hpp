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

// Deterministic synthetic CT cohorts with ground truth. Every slice is a
// body ellipse with two textured lungs, drawn independently per slice from
// one shape distribution; annotated slices carry a lesion
// and, when tampered, a local high-frequency variance deficit ("fingerprint")
// whose depth is set by tamper_signature_strength.
//
// Patient i is FB when i % 4 == 0, FM when i % 4 == 1 and untampered
// otherwise. Within each tampered class the first round(blind_fraction * n)
// patients are BLIND, the rest OPEN.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ctguard/cohort.hpp"
#include "ctguard/dicom.hpp"

namespace ctguard::phantom {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

struct PhantomSpec {
  std::uint64_t seed = 1;
  int n_patients = 20;
  int slices_per_patient = 20;
  int sites_per_patient = 16;  ///< annotated slices per patient, one site each
  int rows = 512;
  int cols = 512;
  Range lesion_radius_px{6.0, 9.0};  ///< Gaussian sigma of the lesion profile
  Range lesion_contrast_hu{700.0, 800.0};
  double tamper_signature_strength = 1.0;  ///< 0 disables the fingerprint
  double patch_radius_px = 32.0;
  double site_scale = 0.3;  ///< sites lie in each lung ellipse shrunk by this factor
  double blind_fraction = 0.8;
  double noise_hu = 60.0;

  /// Throws InvalidConfig.
  void validate() const;
  /// Canonical `key=value,...` form accepted by `parse`.
  std::string describe() const;
  /// Overrides defaults from `key=value` pairs separated by commas; ranges
  /// are written `lo:hi`. Throws InvalidConfig on unknown keys or bad values.
  static PhantomSpec parse(std::string_view text);

  bool operator==(const PhantomSpec&) const = default;
};

struct Ellipse {
  double cx = 0.0;  ///< column
  double cy = 0.0;  ///< row
  double ax = 1.0;  ///< semi-axis along columns
  double ay = 1.0;  ///< semi-axis along rows

  /// Normalised radius; <= 1 inside.
  double rho(double x, double y) const noexcept;
  bool contains(double x, double y) const noexcept { return rho(x, y) <= 1.0; }
};

struct SliceAnatomy {
  Ellipse body;
  std::array<Ellipse, 2> lungs;

  bool in_lung(double x, double y) const noexcept { return lungs[0].contains(x, y) || lungs[1].contains(x, y); }
};

struct PatientAnatomy {
  std::string patient_id;
  cohort::Label label = cohort::Label::Untampered;
  std::vector<SliceAnatomy> slices;  ///< indexed like the volume
};

struct PhantomCohort {
  PhantomSpec spec;
  std::vector<dicom::ScanVolume> volumes;
  std::vector<cohort::Annotation> annotations;
  cohort::CohortManifest manifest;
  std::vector<PatientAnatomy> anatomy;
};

std::string patient_id(int index);

PhantomCohort generate(const PhantomSpec& spec);

/// manifest.json, annotations.csv and <patient>/slice_NNNN.dcm under `dir`.
void write_corpus(const PhantomCohort& cohort, const std::filesystem::path& dir);

}  // namespace ctguard::phantom
