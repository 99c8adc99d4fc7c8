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
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctguard {

enum class ErrorCode {
  // dicom
  MissingMagic,
  UnsupportedTransferSyntax,
  MissingRequiredTag,
  PixelLengthMismatch,
  MalformedElement,
  InvalidSlice,
  EmptyVolume,
  InconsistentGeometry,
  MixedPatients,
  // cohort
  MalformedRow,
  UnknownTag,
  OutOfBounds,
  UnresolvedAnnotation,
  InconsistentManifest,
  ClassTooSmall,
  // preprocess / augment
  InvalidRegime,
  SizeExceedsImage,
  EmptyForeground,
  InvalidAugmentSpec,
  NonSquareRotation,
  // learners
  EmptyTrainingSet,
  SingleClassInput,
  NonConvergence,
  DimensionMismatch,
  InvalidModel,
  // evalkit
  LabelOutsideClassSet,
  SingleClassEval,
  InvalidReport,
  // plumbing
  InvalidConfig,
  Io,
  FormatError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library is an Error carrying a stable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ctguard
