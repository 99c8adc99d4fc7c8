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

#include <cmath>

#include "ctguard/experiment.hpp"
#include "ctguard/phantom.hpp"
#include "support.hpp"

using namespace ctguard;
using namespace ctguard::phantom;

namespace {

std::uint64_t corpus_digest(const PhantomCohort& c) {
  std::uint64_t h = fnv1a("");
  for (const auto& v : c.volumes) {
    for (const auto& s : v.slices()) {
      const auto bytes = dicom::write_slice(s);
      h = fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), h);
    }
  }
  return h;
}

// Mean variance of the 3x3 high-pass residual over a disc around each site.
double site_texture(const PhantomCohort& c, cohort::AnnotationTag tag, int max_sites) {
  double total = 0.0;
  int n = 0;
  for (const auto& a : c.annotations) {
    if (a.tag != tag || n == max_sites) continue;
    const dicom::ScanVolume* v = nullptr;
    for (const auto& vol : c.volumes) if (vol.patient_id() == a.patient_id) v = &vol;
    const auto& px = (*v)[static_cast<std::size_t>(a.slice_index)].stored_pixels();
    double sum = 0.0, sq = 0.0;
    int m = 0;
    for (int dy = -20; dy <= 20; ++dy) {
      for (int dx = -20; dx <= 20; ++dx) {
        if (dx * dx + dy * dy > 400) continue;
        const int r = a.y + dy, col = a.x + dx;
        double mean = 0.0;
        for (int i = -1; i <= 1; ++i)
          for (int j = -1; j <= 1; ++j) mean += px(r + i, col + j);
        const double hp = px(r, col) - mean / 9.0;
        sum += hp;
        sq += hp * hp;
        ++m;
      }
    }
    total += sq / m - (sum / m) * (sum / m);
    ++n;
  }
  REQUIRE(n == max_sites);
  return total / n;
}

PhantomSpec small() {
  PhantomSpec s;
  s.n_patients = 4;
  s.slices_per_patient = 3;
  s.sites_per_patient = 2;
  s.rows = s.cols = 128;
  return s;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  const auto a = generate(PhantomSpec{});
  const auto b = generate(PhantomSpec{});
  CHECK(corpus_digest(a) == corpus_digest(b));
  CHECK(a.annotations == b.annotations);
  CHECK(a.manifest == b.manifest);
  auto other = PhantomSpec{};
  other.seed = 2;
  other.n_patients = 2;
  auto first_two = PhantomSpec{};
  first_two.n_patients = 2;
  CHECK(corpus_digest(generate(other)) != corpus_digest(generate(first_two)));
}

TEST_CASE("files on disk are byte-identical across generations") {
  testing::TempDir x("phx"), y("phy");
  write_corpus(generate(small()), x.path());
  write_corpus(generate(small()), y.path());
  int files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(x.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), x.path());
    CHECK(read_file(e.path()) == read_file(y.path() / rel));
    ++files;
  }
  CHECK(files == 4 * 3 + 2);
}

TEST_CASE("every site lies inside a lung") {
  for (std::uint64_t seed : {1, 2, 3}) {
    PhantomSpec spec;
    spec.seed = seed;
    const auto c = generate(spec);
    CHECK(c.annotations.size() == static_cast<std::size_t>(spec.n_patients * spec.sites_per_patient));
    for (const auto& a : c.annotations) {
      std::size_t p = 0;
      while (c.anatomy[p].patient_id != a.patient_id) ++p;
      CHECK(c.anatomy[p].slices[static_cast<std::size_t>(a.slice_index)].in_lung(a.x, a.y));
    }
  }
}

TEST_CASE("cohort layout") {
  PhantomSpec spec;
  spec.n_patients = 20;
  spec.slices_per_patient = 2;
  spec.sites_per_patient = 1;
  spec.rows = spec.cols = 96;
  const auto c = generate(spec);
  int fb = 0, fm = 0, blind = 0, open = 0;
  for (const auto& p : c.manifest.patients) {
    fb += p.label == cohort::Label::FB;
    fm += p.label == cohort::Label::FM;
    blind += p.trial == cohort::Trial::Blind;
    open += p.trial == cohort::Trial::Open;
    if (p.label == cohort::Label::Untampered) CHECK(p.trial == cohort::Trial::NA);
  }
  CHECK(fb == 5);
  CHECK(fm == 5);
  CHECK(blind == 8);
  CHECK(open == 2);
  CHECK(c.manifest.patients[0].patient_id == patient_id(0));
  CHECK(patient_id(7) == "PH0007");
}

TEST_CASE("written slices parse without warnings") {
  testing::TempDir dir("phwarn");
  write_corpus(generate(small()), dir.path());
  int n = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
    if (e.path().extension() != ".dcm") continue;
    std::vector<std::string> warnings;
    (void)dicom::read_slice(e.path(), &warnings);
    CHECK(warnings.empty());
    ++n;
  }
  CHECK(n == 12);
}

TEST_CASE("without the fingerprint tampered and clean sites have the same texture") {
  PhantomSpec spec;
  spec.n_patients = 52;
  spec.slices_per_patient = 16;
  spec.tamper_signature_strength = 0.0;
  const auto clean = generate(spec);
  const double ratio = site_texture(clean, cohort::AnnotationTag::FM, 200) /
                       site_texture(clean, cohort::AnnotationTag::Nodule, 200);
  CHECK(ratio >= 0.9);
  CHECK(ratio <= 1.1);

  spec.tamper_signature_strength = 1.0;
  const auto marked = generate(spec);
  CHECK(site_texture(marked, cohort::AnnotationTag::FM, 200) <
        0.5 * site_texture(marked, cohort::AnnotationTag::Nodule, 200));
}

TEST_CASE("detector accuracy is monotone in fingerprint strength") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double acc[3];
    int k = 0;
    for (const char* strength : {"0", "0.5", "1"}) {
      testing::TempDir out("mono");
      experiment::ExperimentConfig cfg;
      cfg.study = experiment::Study::Localized;
      cfg.phantom = "seed=" + std::to_string(seed) + ",strength=" + strength +
                    ",patients=40,slices=16,sites=16,rows=256,cols=256";
      cfg.forest.n_trees = 100;
      cfg.output_root = out.path().string();
      acc[k++] = experiment::run(cfg).report.accuracy;
    }
    CAPTURE(seed);
    CHECK(acc[2] >= acc[1]);
    CHECK(acc[1] >= acc[0]);
  }
}

TEST_CASE("spec text") {
  PhantomSpec s;
  CHECK(PhantomSpec::parse(s.describe()) == s);
  const auto p = PhantomSpec::parse("seed=9,strength=0.25,radius=2:4");
  CHECK(p.seed == 9);
  CHECK(p.tamper_signature_strength == 0.25);
  CHECK(p.lesion_radius_px == Range{2, 4});
  CHECK_THROWS_AS(PhantomSpec::parse("colour=red"), Error);
  CHECK_THROWS_AS(PhantomSpec::parse("strength=2"), Error);
  CHECK_THROWS_AS(PhantomSpec::parse("rows=32"), Error);
  CHECK_THROWS_AS(PhantomSpec::parse("sites=30"), Error);
}
