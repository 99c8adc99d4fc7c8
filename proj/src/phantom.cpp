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

#include "ctguard/phantom.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "ctguard/rng.hpp"
#include "ctguard/text.hpp"

namespace ctguard::phantom {

namespace {

constexpr double kAirHu = -1000.0;
constexpr double kAirNoiseHu = 5.0;
constexpr double kTissueHu = 40.0;
constexpr double kLungHu = -800.0;
constexpr double kTextureHu = 12.0;
constexpr double kTextureCell = 24.0;
constexpr double kIntercept = -1024.0;
constexpr std::int32_t kMaxStored = 4095;

[[noreturn]] void bad_spec(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, "phantom: " + msg); }

template <class T>
T parse_number(std::string_view key, std::string_view s) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    bad_spec("bad value '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

Range parse_range(std::string_view key, std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) {
    const double v = parse_number<double>(key, s);
    return {v, v};
  }
  return {parse_number<double>(key, s.substr(0, colon)), parse_number<double>(key, s.substr(colon + 1))};
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

/// Two-octave value noise on a seeded lattice, roughly in [-1, 1].
class ValueNoise {
 public:
  ValueNoise(Rng& rng, int rows, int cols) {
    for (int o = 0; o < 2; ++o) {
      auto& oct = octaves_[o];
      oct.cell = kTextureCell / (1 << o);
      oct.h = static_cast<int>(rows / oct.cell) + 2;
      oct.w = static_cast<int>(cols / oct.cell) + 2;
      oct.values.resize(static_cast<std::size_t>(oct.h * oct.w));
      for (auto& v : oct.values) v = rng.uniform(-1.0, 1.0);
    }
  }

  double operator()(double x, double y) const {
    return sample(octaves_[0], x, y) * (2.0 / 3.0) + sample(octaves_[1], x, y) * (1.0 / 3.0);
  }

 private:
  struct Octave {
    double cell = 1.0;
    int h = 0, w = 0;
    std::vector<double> values;
  };

  static double sample(const Octave& o, double x, double y) {
    const double gx = x / o.cell, gy = y / o.cell;
    const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
    const double tx = smoothstep(gx - ix), ty = smoothstep(gy - iy);
    const auto at = [&](int r, int c) { return o.values[static_cast<std::size_t>(r * o.w + c)]; };
    const double top = at(iy, ix) * (1 - tx) + at(iy, ix + 1) * tx;
    const double bottom = at(iy + 1, ix) * (1 - tx) + at(iy + 1, ix + 1) * tx;
    return top * (1 - ty) + bottom * ty;
  }

  std::array<Octave, 2> octaves_;
};

struct Lesion {
  double x = 0, y = 0, sigma = 1, contrast = 0;
};

struct Patch {
  double x = 0, y = 0, radius = 1, depth = 0;  // depth: fraction of noise removed at the centre
};

/// Fraction of the edge ramp covered at normalised radius `rho`.
double inside_weight(const Ellipse& e, double rho) {
  const double dist = (1.0 - rho) * std::min(e.ax, e.ay);
  return std::clamp(dist * 0.5 + 0.5, 0.0, 1.0);
}

double patch_weight(double d, double radius) {
  const double inner = 0.75 * radius;
  if (d <= inner) return 1.0;
  if (d >= radius) return 0.0;
  return 0.5 * (1.0 + std::cos(M_PI * (d - inner) / (radius - inner)));
}

dicom::StoredPixels render(const SliceAnatomy& a, const PhantomSpec& spec, Rng& rng,
                           const std::vector<Lesion>& lesions, const std::optional<Patch>& patch) {
  const ValueNoise texture(rng, spec.rows, spec.cols);
  dicom::StoredPixels out(spec.rows, spec.cols);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const double x = c, y = r;
      const double wb = inside_weight(a.body, a.body.rho(x, y));
      double wl = 0.0;
      for (const auto& lung : a.lungs) wl = std::max(wl, inside_weight(lung, lung.rho(x, y)));
      double hu = kAirHu + (kTissueHu - kAirHu) * wb;
      if (wl > 0.0) hu = hu * (1.0 - wl) + (kLungHu + kTextureHu * texture(x, y)) * wl;
      for (const auto& l : lesions) {
        const double d2 = (x - l.x) * (x - l.x) + (y - l.y) * (y - l.y);
        if (d2 < 16.0 * l.sigma * l.sigma) hu += l.contrast * std::exp(-d2 / (2.0 * l.sigma * l.sigma));
      }
      double sigma = spec.noise_hu * wb + kAirNoiseHu * (1.0 - wb);
      if (patch) {
        const double d = std::hypot(x - patch->x, y - patch->y);
        sigma *= 1.0 - patch->depth * patch_weight(d, patch->radius);
      }
      hu += sigma * rng.normal();
      const auto stored = static_cast<std::int32_t>(std::lround(hu - kIntercept));
      out(r, c) = std::clamp<std::int32_t>(stored, 0, kMaxStored);
    }
  }
  return out;
}

/// Uniform integer point inside the inner part of `lung`.
std::pair<int, int> draw_site(const Ellipse& lung, double scale, Rng& rng) {
  const Ellipse inner{lung.cx, lung.cy, lung.ax * scale, lung.ay * scale};
  for (;;) {
    const double x = std::round(rng.uniform(inner.cx - inner.ax, inner.cx + inner.ax));
    const double y = std::round(rng.uniform(inner.cy - inner.ay, inner.cy + inner.ay));
    if (inner.contains(x, y)) return {static_cast<int>(x), static_cast<int>(y)};
  }
}

SliceAnatomy draw_anatomy(const PhantomSpec& spec, Rng& rng) {
  SliceAnatomy a;
  const double sr = spec.rows / 512.0, sc = spec.cols / 512.0;
  a.body.cx = spec.cols / 2.0 + rng.uniform(-6.0, 6.0) * sc;
  a.body.cy = spec.rows / 2.0 + rng.uniform(-6.0, 6.0) * sr;
  a.body.ax = spec.cols * rng.uniform(0.285, 0.32);
  a.body.ay = spec.rows * rng.uniform(0.218, 0.242);
  for (int side = 0; side < 2; ++side) {
    auto& lung = a.lungs[static_cast<std::size_t>(side)];
    const double sign = side == 0 ? -1.0 : 1.0;
    lung.cx = a.body.cx + sign * a.body.ax * rng.uniform(0.42, 0.48);
    lung.cy = a.body.cy - a.body.ay * rng.uniform(0.0, 0.08);
    lung.ax = a.body.ax * rng.uniform(0.28, 0.33);
    lung.ay = a.body.ay * rng.uniform(0.6, 0.7);
  }
  return a;
}

cohort::Label label_of(int index) {
  switch (index % 4) {
    case 0: return cohort::Label::FB;
    case 1: return cohort::Label::FM;
    default: return cohort::Label::Untampered;
  }
}

struct PatientOutput {
  std::optional<dicom::ScanVolume> volume;
  std::vector<cohort::Annotation> annotations;
  PatientAnatomy anatomy;
};

PatientOutput make_patient(const PhantomSpec& spec, int index) {
  Rng rng(spec.seed ^ static_cast<std::uint64_t>(index));
  PatientAnatomy a;
  a.patient_id = patient_id(index);
  a.label = label_of(index);
  std::vector<int> order(static_cast<std::size_t>(spec.slices_per_patient));
  for (int s = 0; s < spec.slices_per_patient; ++s) order[static_cast<std::size_t>(s)] = s;
  rng.shuffle(std::span<int>(order));
  std::vector<bool> is_site(order.size(), false);
  for (int k = 0; k < spec.sites_per_patient; ++k) {
    is_site[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
  }

  const auto tag = a.label == cohort::Label::FB   ? cohort::AnnotationTag::FB
                   : a.label == cohort::Label::FM ? cohort::AnnotationTag::FM
                                                  : cohort::AnnotationTag::Nodule;
  PatientOutput out;
  std::vector<dicom::DicomSlice> slices;
  for (int s = 0; s < spec.slices_per_patient; ++s) {
    const auto& anatomy = a.slices.emplace_back(draw_anatomy(spec, rng));
    std::vector<Lesion> lesions;
    std::optional<Patch> patch;
    if (is_site[static_cast<std::size_t>(s)]) {
      const auto lung = rng.index(2);
      const auto [x, y] = draw_site(anatomy.lungs[lung], spec.site_scale, rng);
      const Lesion lesion{static_cast<double>(x), static_cast<double>(y),
                          rng.uniform(spec.lesion_radius_px.lo, spec.lesion_radius_px.hi),
                          rng.uniform(spec.lesion_contrast_hu.lo, spec.lesion_contrast_hu.hi)};
      const auto [ox, oy] = draw_site(anatomy.lungs[1 - lung], spec.site_scale, rng);
      const Patch fingerprint{static_cast<double>(x), static_cast<double>(y), spec.patch_radius_px,
                              0.9 * spec.tamper_signature_strength};
      switch (a.label) {
        case cohort::Label::Untampered:
          lesions.push_back(lesion);
          break;
        case cohort::Label::FM:
          lesions.push_back(lesion);
          patch = fingerprint;
          break;
        case cohort::Label::FB:
          lesions.push_back({static_cast<double>(ox), static_cast<double>(oy), lesion.sigma, lesion.contrast});
          patch = fingerprint;
          break;
      }
      out.annotations.push_back({a.patient_id, s, x, y, tag});
    }
    dicom::SliceHeader h;
    h.patient_id = a.patient_id;
    h.instance_number = s + 1;
    h.slice_location = 100.0 - 2.5 * s;
    h.pixel_representation = 0;
    h.rescale_slope = 1.0;
    h.rescale_intercept = kIntercept;
    slices.emplace_back(std::move(h), render(anatomy, spec, rng, lesions, patch));
  }
  out.volume = dicom::ScanVolume(std::move(slices));
  out.anatomy = std::move(a);
  return out;
}

}  // namespace

double Ellipse::rho(double x, double y) const noexcept {
  const double u = (x - cx) / ax, v = (y - cy) / ay;
  return std::sqrt(u * u + v * v);
}

void PhantomSpec::validate() const {
  if (n_patients < 1) bad_spec("patients must be >= 1");
  if (slices_per_patient < 1) bad_spec("slices must be >= 1");
  if (sites_per_patient < 1 || sites_per_patient > slices_per_patient) bad_spec("sites must be in [1, slices]");
  if (rows < 64 || cols < 64 || rows > 65535 || cols > 65535) bad_spec("rows and cols must be in [64, 65535]");
  for (const auto& [name, r] : {std::pair{"radius", lesion_radius_px}, std::pair{"contrast", lesion_contrast_hu}}) {
    if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi)) bad_spec(std::string(name) + " range is empty");
  }
  if (!(lesion_radius_px.lo > 0.0)) bad_spec("radius must be positive");
  if (!(tamper_signature_strength >= 0.0 && tamper_signature_strength <= 1.0)) bad_spec("strength must be in [0, 1]");
  if (!(patch_radius_px > 0.0 && std::isfinite(patch_radius_px))) bad_spec("patch must be positive");
  if (!(site_scale > 0.0 && site_scale <= 1.0)) bad_spec("site_scale must be in (0, 1]");
  if (!(blind_fraction >= 0.0 && blind_fraction <= 1.0)) bad_spec("blind must be in [0, 1]");
  if (!(noise_hu >= 0.0 && noise_hu <= 500.0)) bad_spec("noise must be in [0, 500]");
}

std::string PhantomSpec::describe() const {
  return "seed=" + std::to_string(seed) + ",patients=" + std::to_string(n_patients) +
         ",slices=" + std::to_string(slices_per_patient) + ",sites=" + std::to_string(sites_per_patient) +
         ",rows=" + std::to_string(rows) + ",cols=" + std::to_string(cols) +
         ",radius=" + shortest(lesion_radius_px.lo) + ":" + shortest(lesion_radius_px.hi) +
         ",contrast=" + shortest(lesion_contrast_hu.lo) + ":" + shortest(lesion_contrast_hu.hi) +
         ",strength=" + shortest(tamper_signature_strength) + ",patch=" + shortest(patch_radius_px) +
         ",site_scale=" + shortest(site_scale) + ",blind=" + shortest(blind_fraction) +
         ",noise=" + shortest(noise_hu);
}

PhantomSpec PhantomSpec::parse(std::string_view text) {
  PhantomSpec s;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) bad_spec("expected key=value, got '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "seed") {
      s.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "patients") {
      s.n_patients = parse_number<int>(key, value);
    } else if (key == "slices") {
      s.slices_per_patient = parse_number<int>(key, value);
    } else if (key == "sites") {
      s.sites_per_patient = parse_number<int>(key, value);
    } else if (key == "rows") {
      s.rows = parse_number<int>(key, value);
    } else if (key == "cols") {
      s.cols = parse_number<int>(key, value);
    } else if (key == "radius") {
      s.lesion_radius_px = parse_range(key, value);
    } else if (key == "contrast") {
      s.lesion_contrast_hu = parse_range(key, value);
    } else if (key == "strength") {
      s.tamper_signature_strength = parse_number<double>(key, value);
    } else if (key == "patch") {
      s.patch_radius_px = parse_number<double>(key, value);
    } else if (key == "site_scale") {
      s.site_scale = parse_number<double>(key, value);
    } else if (key == "blind") {
      s.blind_fraction = parse_number<double>(key, value);
    } else if (key == "noise") {
      s.noise_hu = parse_number<double>(key, value);
    } else {
      bad_spec("unknown key '" + std::string(key) + "'");
    }
  }
  s.validate();
  return s;
}

std::string patient_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "PH%04d", index);
  return buf;
}

PhantomCohort generate(const PhantomSpec& spec) {
  spec.validate();
  std::vector<std::optional<PatientOutput>> outputs(static_cast<std::size_t>(spec.n_patients));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    const int n_workers =
        std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, spec.n_patients);
    std::vector<std::jthread> workers;
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        for (int i = next++; i < spec.n_patients; i = next++) {
          try {
            outputs[static_cast<std::size_t>(i)] = make_patient(spec, i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);

  PhantomCohort cohort;
  cohort.spec = spec;
  std::array<int, cohort::kLabelCount> class_size{};
  for (int i = 0; i < spec.n_patients; ++i) ++class_size[static_cast<std::size_t>(label_of(i))];
  std::array<int, cohort::kLabelCount> seen{};
  for (int i = 0; i < spec.n_patients; ++i) {
    auto& o = *outputs[static_cast<std::size_t>(i)];
    const auto label = label_of(i);
    auto trial = cohort::Trial::NA;
    if (label != cohort::Label::Untampered) {
      const auto c = static_cast<std::size_t>(label);
      const int n_blind = static_cast<int>(std::lround(spec.blind_fraction * class_size[c]));
      trial = seen[c]++ < n_blind ? cohort::Trial::Blind : cohort::Trial::Open;
    }
    cohort.manifest.patients.push_back({o.anatomy.patient_id, o.anatomy.patient_id, label, trial});
    cohort.annotations.insert(cohort.annotations.end(), o.annotations.begin(), o.annotations.end());
    cohort.volumes.push_back(std::move(*o.volume));
    cohort.anatomy.push_back(std::move(o.anatomy));
  }
  return cohort;
}

void write_corpus(const PhantomCohort& cohort, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& volume : cohort.volumes) {
    const auto patient_dir = dir / volume.patient_id();
    std::filesystem::create_directories(patient_dir);
    for (std::size_t s = 0; s < volume.size(); ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "slice_%04zu.dcm", s);
      dicom::write_slice_file(volume[s], patient_dir / name);
    }
  }
  cohort::save_annotations(dir / cohort.manifest.annotations, cohort.annotations);
  cohort::save_manifest(cohort.manifest, dir / "manifest.json");
}

}  // namespace ctguard::phantom
