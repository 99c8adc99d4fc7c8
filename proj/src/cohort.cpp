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

#include "ctguard/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctguard/bytes.hpp"
#include "ctguard/rng.hpp"

namespace ctguard::cohort {

namespace {

constexpr std::string_view kCsvHeader = "patient_id,slice,x,y,tag";
constexpr std::string_view kTensorMagic = "CTGT";
constexpr std::uint32_t kTensorVersion = 1;

bool parse_int(const std::string& s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::size_t> ratio_train(std::vector<std::size_t> members, Rng& rng) {
  rng.shuffle(std::span(members));
  const std::size_t n = members.size();
  const std::size_t n_train = std::min(n - 1, (85 * n + 99) / 100);
  members.resize(n_train);
  return members;
}

}  // namespace

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string_view to_string(AnnotationTag tag) noexcept {
  switch (tag) {
    case AnnotationTag::FB: return "FB";
    case AnnotationTag::FM: return "FM";
    case AnnotationTag::Nodule: return "NODULE";
  }
  return "?";
}

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::Untampered: return "UNTAMPERED";
    case Label::FB: return "FB";
    case Label::FM: return "FM";
  }
  return "?";
}

std::string_view to_string(Trial trial) noexcept {
  switch (trial) {
    case Trial::Blind: return "BLIND";
    case Trial::Open: return "OPEN";
    case Trial::NA: return "NA";
  }
  return "?";
}

Label label_from_string(std::string_view s) {
  if (s == "UNTAMPERED") return Label::Untampered;
  if (s == "FB") return Label::FB;
  if (s == "FM") return Label::FM;
  throw Error(ErrorCode::InconsistentManifest, "unknown label " + std::string(s));
}

Trial trial_from_string(std::string_view s) {
  if (s == "BLIND") return Trial::Blind;
  if (s == "OPEN") return Trial::Open;
  if (s == "NA") return Trial::NA;
  throw Error(ErrorCode::InconsistentManifest, "unknown trial " + std::string(s));
}

Label label_for(AnnotationTag tag) noexcept {
  switch (tag) {
    case AnnotationTag::FB: return Label::FB;
    case AnnotationTag::FM: return Label::FM;
    case AnnotationTag::Nodule: return Label::Untampered;
  }
  return Label::Untampered;
}

std::vector<Annotation> parse_annotations(std::istream& in) {
  std::vector<Annotation> out;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line != kCsvHeader) {
        throw Error(ErrorCode::MalformedRow, "line 1: expected header '" + std::string(kCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line);
    Annotation a;
    if (f.size() != 5 || f[0].empty() || !parse_int(f[1], a.slice_index) || !parse_int(f[2], a.x) ||
        !parse_int(f[3], a.y) || a.slice_index < 0) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no));
    }
    a.patient_id = f[0];
    if (f[4] == "FB") {
      a.tag = AnnotationTag::FB;
    } else if (f[4] == "FM") {
      a.tag = AnnotationTag::FM;
    } else if (f[4] == "NODULE") {
      a.tag = AnnotationTag::Nodule;
    } else {
      throw Error(ErrorCode::UnknownTag, "line " + std::to_string(line_no) + ": '" + f[4] + "'");
    }
    out.push_back(std::move(a));
  }
  if (!header_seen) throw Error(ErrorCode::MalformedRow, "line 1: empty file");
  return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return parse_annotations(in);
}

void write_annotations(std::ostream& out, std::span<const Annotation> annotations) {
  out << kCsvHeader << '\n';
  for (const auto& a : annotations) {
    out << a.patient_id << ',' << a.slice_index << ',' << a.x << ',' << a.y << ',' << to_string(a.tag)
        << '\n';
  }
}

void save_annotations(const std::filesystem::path& path, std::span<const Annotation> annotations) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  write_annotations(out, annotations);
}

const PatientEntry* CohortManifest::find(std::string_view patient_id) const {
  for (const auto& p : patients) {
    if (p.patient_id == patient_id) return &p;
  }
  return nullptr;
}

CohortManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  CohortManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("schema_version").get<int>() != 1) {
      throw Error(ErrorCode::FormatError, "unsupported manifest schema_version");
    }
    m.annotations = j.value("annotations", std::string("annotations.csv"));
    for (const auto& p : j.at("patients")) {
      PatientEntry e;
      e.patient_id = p.at("patient_id").get<std::string>();
      e.directory = p.value("directory", e.patient_id);
      e.label = label_from_string(p.at("label").get<std::string>());
      e.trial = trial_from_string(p.value("trial", std::string("NA")));
      if ((e.label == Label::Untampered) != (e.trial == Trial::NA)) {
        throw Error(ErrorCode::InconsistentManifest,
                    e.patient_id + ": tampered patients need BLIND/OPEN, untampered need NA");
      }
      m.patients.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return m;
}

void save_manifest(const CohortManifest& manifest, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["annotations"] = manifest.annotations;
  j["patients"] = nlohmann::ordered_json::array();
  for (const auto& p : manifest.patients) {
    j["patients"].push_back({{"patient_id", p.patient_id},
                             {"directory", p.directory},
                             {"label", to_string(p.label)},
                             {"trial", to_string(p.trial)}});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out << j.dump(2) << '\n';
}

LoadedCohort load_cohort(const std::filesystem::path& manifest_path, std::vector<std::string>* warnings) {
  LoadedCohort c;
  c.manifest = load_manifest(manifest_path);
  const auto root = manifest_path.parent_path();
  c.annotations = load_annotations(root / c.manifest.annotations);
  for (const auto& p : c.manifest.patients) {
    auto volume = dicom::load_volume(root / p.directory, warnings);
    if (volume.patient_id() != p.patient_id) {
      throw Error(ErrorCode::InconsistentManifest,
                  p.directory + " holds patient " + volume.patient_id() + ", manifest says " + p.patient_id);
    }
    c.volumes.push_back(std::move(volume));
  }
  return c;
}

std::size_t ClassCounts::of(Label label) const noexcept {
  switch (label) {
    case Label::Untampered: return untampered;
    case Label::FB: return fb;
    case Label::FM: return fm;
  }
  return 0;
}

ClassCounts count_classes(std::span<const Sample> samples) {
  ClassCounts c;
  for (const auto& s : samples) {
    switch (s.label) {
      case Label::Untampered: ++c.untampered; break;
      case Label::FB: ++c.fb; break;
      case Label::FM: ++c.fm; break;
    }
  }
  c.total = c.untampered + c.fb + c.fm;
  return c;
}

std::vector<Sample> assemble(std::span<const dicom::ScanVolume> volumes,
                             std::span<const Annotation> annotations, const CohortManifest& manifest,
                             const preprocess::PreprocessRegime& regime, std::vector<std::string>* warnings) {
  regime.validate();
  std::map<std::string, const dicom::ScanVolume*, std::less<>> by_patient;
  for (const auto& v : volumes) by_patient.emplace(v.patient_id(), &v);

  std::vector<Sample> out;
  std::set<SourceRef> seen;
  std::set<std::string, std::less<>> annotated;
  for (const auto& a : annotations) {
    const auto it = by_patient.find(a.patient_id);
    const auto* entry = manifest.find(a.patient_id);
    if (it == by_patient.end() || entry == nullptr) {
      throw Error(ErrorCode::UnresolvedAnnotation, a.patient_id);
    }
    const auto& volume = *it->second;
    if (a.slice_index >= static_cast<int>(volume.size()) || a.x < 0 || a.y < 0 ||
        a.x >= volume.cols() || a.y >= volume.rows()) {
      throw Error(ErrorCode::OutOfBounds, a.patient_id + " slice " + std::to_string(a.slice_index) +
                                              " (" + std::to_string(a.x) + "," + std::to_string(a.y) + ")");
    }
    annotated.insert(a.patient_id);
    SourceRef source{a.patient_id, a.slice_index};
    if (!seen.insert(source).second) {
      if (warnings) {
        warnings->push_back("duplicate annotation on " + a.patient_id + " slice " +
                            std::to_string(a.slice_index) + " dropped");
      }
      continue;
    }
    Sample s;
    s.label = label_for(a.tag);
    s.trial = s.label == Label::Untampered ? Trial::NA : entry->trial;
    if (s.label != Label::Untampered && s.trial == Trial::NA) {
      throw Error(ErrorCode::InconsistentManifest, a.patient_id + " has tampered annotations but no trial");
    }
    s.image = preprocess::apply_regime(volume[static_cast<std::size_t>(a.slice_index)], regime,
                                       preprocess::SiteCenter{a.x, a.y});
    s.source = std::move(source);
    out.push_back(std::move(s));
  }

  for (const auto& v : volumes) {
    if (annotated.contains(v.patient_id())) continue;
    const auto* entry = manifest.find(v.patient_id());
    if (entry != nullptr && entry->label != Label::Untampered) {
      if (warnings) warnings->push_back(v.patient_id() + " is tampered but has no annotations; skipped");
      continue;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      Sample s;
      s.image = preprocess::apply_regime(v[i], regime);
      s.source = {v.patient_id(), static_cast<int>(i)};
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<Sample> balance(std::vector<Sample> samples, std::uint64_t seed) {
  const auto counts = count_classes(samples);
  std::size_t target = 0;
  bool any_tampered = false;
  for (auto label : {Label::FB, Label::FM}) {
    const auto n = counts.of(label);
    if (n == 0) continue;
    target = any_tampered ? std::min(target, n) : n;
    any_tampered = true;
  }
  if (!any_tampered || counts.untampered <= target) return samples;

  std::vector<std::size_t> untampered;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label == Label::Untampered) untampered.push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(std::span(untampered));
  std::vector<bool> keep(samples.size(), true);
  for (std::size_t k = target; k < untampered.size(); ++k) keep[untampered[k]] = false;

  std::vector<Sample> out;
  out.reserve(samples.size() - (untampered.size() - target));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (keep[i]) out.push_back(std::move(samples[i]));
  }
  return out;
}

std::string_view to_string(SplitPolicy policy) noexcept {
  return policy == SplitPolicy::TrialBased ? "TRIAL_BASED" : "RATIO_85_15";
}

SplitPolicy split_policy_from_string(std::string_view s) {
  if (s == "TRIAL_BASED") return SplitPolicy::TrialBased;
  if (s == "RATIO_85_15") return SplitPolicy::Ratio85_15;
  throw Error(ErrorCode::InvalidConfig, "unknown split policy " + std::string(s));
}

SplitPlan split(std::span<const Sample> samples, SplitPolicy policy, std::uint64_t seed) {
  SplitPlan plan;
  plan.seed = seed;
  plan.policy = policy;
  Rng rng(seed);
  std::vector<bool> in_train(samples.size(), false);
  for (auto label : {Label::Untampered, Label::FB, Label::FM}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].label == label) members.push_back(i);
    }
    if (members.empty()) continue;
    if (policy == SplitPolicy::TrialBased && label != Label::Untampered) {
      for (auto i : members) {
        if (samples[i].trial == Trial::NA) {
          throw Error(ErrorCode::InconsistentManifest,
                      samples[i].source.patient_id + ": tampered sample without trial");
        }
        in_train[i] = samples[i].trial == Trial::Blind;
      }
      continue;
    }
    if (members.size() < 2) {
      throw Error(ErrorCode::ClassTooSmall,
                  std::string(to_string(label)) + " has " + std::to_string(members.size()) + " sample(s)");
    }
    for (auto i : ratio_train(std::move(members), rng)) in_train[i] = true;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) (in_train[i] ? plan.train : plan.test).push_back(i);
  return plan;
}

void save_samples(const std::filesystem::path& path, std::span<const Sample> samples,
                  std::uint64_t regime_fingerprint) {
  const Eigen::Index rows = samples.empty() ? 0 : samples.front().image.rows();
  const Eigen::Index cols = samples.empty() ? 0 : samples.front().image.cols();
  ByteWriter w;
  w.raw(kTensorMagic);
  w.u32(kTensorVersion);
  w.u8(1);  // little-endian
  w.u64(regime_fingerprint);
  w.u64(samples.size());
  w.u32(static_cast<std::uint32_t>(rows));
  w.u32(static_cast<std::uint32_t>(cols));
  for (const auto& s : samples) {
    if (s.image.rows() != rows || s.image.cols() != cols) {
      throw Error(ErrorCode::DimensionMismatch, "samples in one tensor file must share a shape");
    }
    for (Eigen::Index i = 0; i < s.image.size(); ++i) w.f32(s.image.data()[i]);
  }
  for (const auto& s : samples) {
    w.u8(static_cast<std::uint8_t>(s.label));
    w.u8(static_cast<std::uint8_t>(s.trial));
    w.i32(s.source.slice_index);
    w.str(s.source.patient_id);
  }
  write_file_atomic(path, w.bytes());
}

SampleFile load_samples(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(bytes);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kTensorMagic.begin())) {
    throw Error(ErrorCode::FormatError, path.string() + " is not a sample tensor file");
  }
  if (r.u32() != kTensorVersion) throw Error(ErrorCode::FormatError, "unsupported tensor version");
  if (r.u8() != 1) throw Error(ErrorCode::FormatError, "unsupported endianness tag");
  SampleFile f;
  f.regime_fingerprint = r.u64();
  const auto n = r.u64();
  const auto rows = r.u32();
  const auto cols = r.u32();
  const std::uint64_t pixels = static_cast<std::uint64_t>(rows) * cols;
  if (n > 0 && pixels * 4 > r.remaining() / n) throw Error(ErrorCode::FormatError, "truncated tensor");
  f.samples.resize(n);
  for (auto& s : f.samples) {
    s.image.resize(rows, cols);
    for (Eigen::Index i = 0; i < s.image.size(); ++i) s.image.data()[i] = r.f32();
  }
  for (auto& s : f.samples) {
    const auto label = r.u8();
    const auto trial = r.u8();
    if (label > 2 || trial > 2) throw Error(ErrorCode::FormatError, "bad sample metadata");
    s.label = static_cast<Label>(label);
    s.trial = static_cast<Trial>(trial);
    s.source.slice_index = r.i32();
    s.source.patient_id = r.str();
  }
  return f;
}

}  // namespace ctguard::cohort
