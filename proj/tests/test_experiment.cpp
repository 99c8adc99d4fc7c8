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

#include <cstdlib>

#include "ctguard/experiment.hpp"
#include "support.hpp"

using namespace ctguard;
using namespace ctguard::experiment;

namespace {

constexpr const char* kSmallPhantom = "seed=3,patients=12,slices=6,sites=4,rows=128,cols=128,patch=16,radius=2:4";

ExperimentConfig small(Study study, LearnerKind learner, const std::filesystem::path& root) {
  ExperimentConfig c;
  c.study = study;
  c.phantom = kSmallPhantom;
  c.learner = learner;
  c.forest.n_trees = 10;
  c.crop_size = 32;
  c.canvas_rows = 64;
  c.canvas_cols = 80;
  c.output_root = root.string();
  return c;
}

nlohmann::ordered_json without_timestamp(nlohmann::ordered_json j) {
  j.erase("timestamp");
  j["config"].erase("output_root");
  return j;
}

}  // namespace

TEST_CASE("study defaults") {
  ExperimentConfig c;
  const auto regime_of = [&](Study s) {
    c.study = s;
    return c.regime();
  };
  CHECK(regime_of(Study::RawBinary).kind == preprocess::RegimeKind::Raw);
  CHECK(regime_of(Study::Localized).crop_size == 128);
  CHECK(regime_of(Study::LocalizedAug).kind == preprocess::RegimeKind::Localized);
  CHECK(regime_of(Study::NegSpace).canvas_rows == 266);
  CHECK(regime_of(Study::NegSpaceAug).canvas_cols == 340);
  CHECK(regime_of(Study::Multiclass).kind == preprocess::RegimeKind::NegSpace);

  for (auto s : {Study::RawBinary, Study::Localized, Study::NegSpace}) {
    c.study = s;
    CHECK_FALSE(c.augmentation());
    CHECK_FALSE(c.augments_test());
  }
  c.study = Study::LocalizedAug;
  CHECK(c.augmentation()->member_count() == 71);
  CHECK(c.augments_test());
  c.study = Study::NegSpaceAug;
  CHECK(c.augmentation()->member_count() == 12);
  c.study = Study::Multiclass;
  CHECK(c.augmentation());
  CHECK(c.class_names() == std::vector<std::string>{"untampered", "FB", "FM"});
  c.study = Study::NegSpace;
  CHECK(c.class_names() == std::vector<std::string>{"untampered", "FB"});
  c.study = Study::Localized;
  CHECK(c.class_names() == std::vector<std::string>{"untampered", "FM"});
  c.augment_test = false;
  c.study = Study::LocalizedAug;
  CHECK_FALSE(c.augments_test());
}

TEST_CASE("settings and config files") {
  const auto c = parse_config(
      "# comment\n"
      "[experiment]\n"
      "study = NEGSPACE_AUG\n"
      "phantom = \"seed=4,strength=0.5\"\n"
      "; another comment\n"
      "learner = svm\n"
      "C = 2.5\n"
      "kernel = linear\n"
      "seed = 9\n"
      "split = RATIO_85_15\n");
  CHECK(c.study == Study::NegSpaceAug);
  CHECK(c.learner == LearnerKind::Svm);
  CHECK(c.svm.C == 2.5);
  CHECK(c.svm.kernel == learn::KernelKind::Linear);
  CHECK(c.seed == 9);
  CHECK(c.split == cohort::SplitPolicy::Ratio85_15);
  CHECK(config_from_json(c.to_json()).to_json() == c.to_json());

  try {
    parse_config("study = LOCALIZED\nbogus = 1\n");
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  ExperimentConfig bad;
  CHECK_THROWS_AS(bad.set("study", "LOCALISED"), Error);
  CHECK_THROWS_AS(bad.set("seed", "-1"), Error);
  CHECK_THROWS_AS(bad.set("n_trees", "many"), Error);
  CHECK_THROWS_AS(parse_config("no equals sign\n"), Error);
}

TEST_CASE("hash and output directory ignore the output root") {
  ExperimentConfig a;
  a.phantom = "seed=1";
  auto b = a;
  b.output_root = "elsewhere";
  CHECK(a.hash() == b.hash());
  CHECK(a.output_dir().filename() == b.output_dir().filename());
  b.seed = 1;
  CHECK(a.hash() != b.hash());
  ExperimentConfig neither;
  CHECK_THROWS_AS(neither.validate(), Error);
  auto both = a;
  both.manifest = "m.json";
  CHECK_THROWS_AS(both.validate(), Error);
}

TEST_CASE("runs are reproducible for every learner") {
  setenv(std::string(kCacheEnv).c_str(), "", 1);
  for (auto learner : {LearnerKind::Tree, LearnerKind::Forest, LearnerKind::Svm}) {
    CAPTURE(to_string(learner));
    testing::TempDir a("runa"), b("runb");
    const auto ra = run(small(Study::Localized, learner, a.path()));
    const auto rb = run(small(Study::Localized, learner, b.path()));
    CHECK(ra.output_dir.filename() == rb.output_dir.filename());
    CHECK(without_timestamp(eval::to_json(ra.report)) == without_timestamp(eval::to_json(rb.report)));
    CHECK(read_file(ra.output_dir / "model.bin") == read_file(rb.output_dir / "model.bin"));
    const auto report = eval::load_report(ra.output_dir / "report.json");
    CHECK(report.config == ra.report.config);
    CHECK(learn::deserialize(read_file(ra.output_dir / "model.bin")) == ra.model);
    CHECK(std::filesystem::exists(ra.output_dir / "model.json"));
    CHECK(std::filesystem::exists(ra.output_dir / "roc_FM.csv"));
  }
}

TEST_CASE("reports carry enough to rerun") {
  testing::TempDir root("rerun");
  const auto first = run(small(Study::NegSpace, LearnerKind::Forest, root.path()));
  const auto& meta = first.report.run_metadata;
  for (const char* key : {"config_hash", "regime", "classes", "learner", "hyperparameters", "seeds", "split_policy",
                          "class_counts", "roc_method", "score_kind", "warnings"}) {
    CAPTURE(key);
    CHECK(meta.contains(key));
  }
  auto again = config_from_json(first.report.config);
  again.output_root = root.path().string();
  testing::TempDir other("rerun2");
  again.output_root = other.path().string();
  const auto second = run(again);
  CHECK(without_timestamp(eval::to_json(second.report)) == without_timestamp(eval::to_json(first.report)));
}

TEST_CASE("cached samples give the same result") {
  testing::TempDir cache("cache"), a("ca"), b("cb"), c("cc");
  setenv(std::string(kCacheEnv).c_str(), "", 1);
  const auto plain = run(small(Study::LocalizedAug, LearnerKind::Tree, a.path()));
  setenv(std::string(kCacheEnv).c_str(), cache.path().c_str(), 1);
  const auto miss = run(small(Study::LocalizedAug, LearnerKind::Tree, b.path()));
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(cache.path())) ++files;
  CHECK(files >= 1);
  const auto hit = run(small(Study::LocalizedAug, LearnerKind::Tree, c.path()));
  setenv(std::string(kCacheEnv).c_str(), "", 1);
  const auto j = without_timestamp(eval::to_json(plain.report));
  CHECK(without_timestamp(eval::to_json(miss.report)) == j);
  CHECK(without_timestamp(eval::to_json(hit.report)) == j);
}

TEST_CASE("multiclass classes are balanced after augmentation") {
  testing::TempDir root("multi");
  auto cfg = small(Study::Multiclass, LearnerKind::Forest, root.path());
  const auto r = run(cfg);
  const auto& rows = r.report.run_metadata["class_counts"]["train_rows"];
  CHECK(rows["untampered"] == rows["FB"]);
  CHECK(rows["FB"] == rows["FM"]);
  CHECK(r.report.confusion.k() == 3);
  CHECK(r.report.roc.size() == 3);
}

TEST_CASE("binary studies balance train and test") {
  testing::TempDir root("bal");
  const auto r = run(small(Study::Localized, LearnerKind::Tree, root.path()));
  const auto& counts = r.report.run_metadata["class_counts"];
  CHECK(counts["train_rows"]["untampered"] == counts["train_rows"]["FM"]);
  // tampered samples are never dropped, so a short untampered pool stays short
  const int before = counts["test_samples"]["untampered"];
  const int fm = counts["test_rows"]["FM"];
  CHECK(counts["test_rows"]["untampered"] == std::min(before, fm));
}
