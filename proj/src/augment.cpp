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

#include "ctguard/augment.hpp"

namespace ctguard::augment {

void AugmentSpec::validate() const {
  if (shift_magnitude < 1) throw Error(ErrorCode::InvalidAugmentSpec, "shift_magnitude must be >= 1");
  if (rotation_step <= 0 || rotation_step >= 360 || 360 % rotation_step != 0) {
    throw Error(ErrorCode::InvalidAugmentSpec, "rotation_step must divide 360");
  }
}

std::size_t AugmentSpec::member_count() const {
  std::size_t n = 1;
  if (flips) n += 3;
  if (shifts) n += 8;
  if (rotations) n += static_cast<std::size_t>(360 / rotation_step - 1);
  return n;
}

}  // namespace ctguard::augment
