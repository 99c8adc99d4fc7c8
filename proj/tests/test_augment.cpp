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


#include <doctest.h>

#include <random>

#include "ctguard/augment.hpp"
#include "oracles.hpp"

using namespace ctguard;
using namespace ctguard::augment;

namespace {

ImageD random_image(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageD img(rows, cols);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(gen);
  return img;
}

}  // namespace

TEST_CASE("member counts") {
  CHECK(AugmentSpec::full().member_count() == 71);
  CHECK(AugmentSpec::flips_and_shifts().member_count() == 12);
  std::mt19937_64 gen(1);
  for (Eigen::Index n : {8, 9, 17}) {
    const auto img = random_image(gen, n, n);
    const auto out = augment_image(img, AugmentSpec::full());
    CHECK(out.size() == 71);
    for (const auto& m : out) CHECK((m.rows() == n && m.cols() == n));
    CHECK(out[0] == img);
  }
  const auto wide = random_image(gen, 6, 10);
  CHECK(augment_image(wide, AugmentSpec::flips_and_shifts()).size() == 12);
  CHECK_THROWS_AS(augment_image(wide, AugmentSpec::full()), Error);
}

TEST_CASE("quarter turn of a 2x2 image") {
  ImageD img(2, 2);
  img << 1, 2, 3, 4;
  ImageD expected(2, 2);
  expected << 2, 4, 1, 3;
  CHECK(rotate(img, 90) == expected);
}

TEST_CASE("flip and quarter-turn group structure") {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 10; ++t) {
    const auto img = random_image(gen, 7, 7);
    CHECK(flip_x(flip_x(img)) == img);
    CHECK(flip_y(flip_y(img)) == img);
    CHECK(flip_both(img) == flip_x(flip_y(img)));
    CHECK(rotate(img, 180) == flip_both(img));
    CHECK(rotate(rotate(img, 90), 90) == rotate(img, 180));
    CHECK(rotate(rotate(img, 90), 270) == img);
    CHECK(rotate(img, 360) == img);
    CHECK(rotate(img, -90) == rotate(img, 270));
    // flip_x mirrors across the horizontal axis (row order)
    CHECK(flip_x(img).row(0) == img.row(6));
  }
}

TEST_CASE("rotation matches the inverse-map oracle") {
  std::mt19937_64 gen(3);
  for (Eigen::Index n : {5, 16, 33}) {
    const auto img = random_image(gen, n, n);
    for (double deg : {6.0, 12.0, 45.0, 93.0, 186.0, 354.0}) {
      CAPTURE(deg);
      CHECK((rotate(img, deg) - oracle::rotate(img, deg)).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("shifts") {
  std::mt19937_64 gen(4);
  const auto img = random_image(gen, 12, 12);
  CHECK(shift(img, 0, 0) == img);
  const auto back = shift(shift(img, 4, 0), -4, 0);
  CHECK(back.rightCols(8) == img.rightCols(8));
  CHECK(back.leftCols(4).isZero());
  CHECK(shift(img, 0, 3).bottomRows(3).isZero());
  CHECK(shift(img, 0, 3).topRows(9) == img.bottomRows(9));
  CHECK(shift(img, -2, 0)(5, 2) == img(5, 0));
  for (int dx = -5; dx <= 5; ++dx) {
    for (int dy = -5; dy <= 5; ++dy) CHECK(shift(img, dx, dy).sum() <= img.sum() + 1e-12);
  }
  CHECK_THROWS_AS(shift(img, 12, 0), Error);
}

TEST_CASE("spec validation") {
  AugmentSpec s;
  s.rotation_step = 7;
  CHECK_THROWS_AS(s.validate(), Error);
  s.rotation_step = 6;
  s.shift_magnitude = 0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("float and double images agree on exact members") {
  std::mt19937_64 gen(5);
  const auto img = random_image(gen, 9, 9);
  const ImageF f = img.cast<float>();
  const auto a = augment_image(img, AugmentSpec::full());
  const auto b = augment_image(f, AugmentSpec::full());
  for (std::size_t i = 0; i < 12; ++i) CHECK(a[i].cast<float>() == b[i]);
}
