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

#include "ctguard/error.hpp"

namespace ctguard {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingMagic: return "MissingMagic";
    case ErrorCode::UnsupportedTransferSyntax: return "UnsupportedTransferSyntax";
    case ErrorCode::MissingRequiredTag: return "MissingRequiredTag";
    case ErrorCode::PixelLengthMismatch: return "PixelLengthMismatch";
    case ErrorCode::MalformedElement: return "MalformedElement";
    case ErrorCode::InvalidSlice: return "InvalidSlice";
    case ErrorCode::EmptyVolume: return "EmptyVolume";
    case ErrorCode::InconsistentGeometry: return "InconsistentGeometry";
    case ErrorCode::MixedPatients: return "MixedPatients";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::UnresolvedAnnotation: return "UnresolvedAnnotation";
    case ErrorCode::InconsistentManifest: return "InconsistentManifest";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::InvalidRegime: return "InvalidRegime";
    case ErrorCode::SizeExceedsImage: return "SizeExceedsImage";
    case ErrorCode::EmptyForeground: return "EmptyForeground";
    case ErrorCode::InvalidAugmentSpec: return "InvalidAugmentSpec";
    case ErrorCode::NonSquareRotation: return "NonSquareRotation";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::LabelOutsideClassSet: return "LabelOutsideClassSet";
    case ErrorCode::SingleClassEval: return "SingleClassEval";
    case ErrorCode::InvalidReport: return "InvalidReport";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace ctguard
