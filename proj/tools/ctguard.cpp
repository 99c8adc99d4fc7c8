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

// Command-line front end: ingest, phantom, convert-annotations, run, report.
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctguard/cohort.hpp"
#include "ctguard/convert.hpp"
#include "ctguard/experiment.hpp"
#include "ctguard/metrics.hpp"
#include "ctguard/phantom.hpp"

namespace {

using namespace ctguard;

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

void print_error(std::string_view code, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

void log_line(std::string_view msg) { std::cerr << "ctguard: " << msg << '\n'; }

struct RunOptions {
  std::string config_file;
  std::string study;
  std::string phantom;
  std::string manifest;
  std::string learner;
  std::string split;
  std::string output_root;
  std::string augment_test;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int do_run(const RunOptions& o) {
  experiment::ExperimentConfig config;
  if (!o.config_file.empty()) config = experiment::load_config(o.config_file);
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.study.empty()) config.set("study", o.study);
  if (!o.phantom.empty()) {
    config.phantom = o.phantom;
    config.manifest.clear();
  }
  if (!o.manifest.empty()) {
    config.manifest = o.manifest;
    config.phantom.clear();
  }
  if (!o.learner.empty()) config.set("learner", o.learner);
  if (!o.split.empty()) config.set("split", o.split);
  if (!o.output_root.empty()) config.set("output_root", o.output_root);
  if (!o.augment_test.empty()) config.set("augment_test", o.augment_test);
  if (o.seed) config.seed = *o.seed;

  const auto result = experiment::run(config, o.quiet ? experiment::Logger{} : experiment::Logger{log_line});
  nlohmann::ordered_json out;
  out["output_dir"] = result.output_dir.string();
  out["accuracy"] = result.report.accuracy;
  std::cout << out.dump() << '\n';
  return 0;
}

int do_ingest(const std::string& manifest, const std::string& regime_name, const std::string& out_file) {
  preprocess::PreprocessRegime regime;
  switch (preprocess::regime_kind_from_string(regime_name)) {
    case preprocess::RegimeKind::Raw: regime = preprocess::PreprocessRegime::raw(); break;
    case preprocess::RegimeKind::Localized: regime = preprocess::PreprocessRegime::localized(); break;
    case preprocess::RegimeKind::NegSpace: regime = preprocess::PreprocessRegime::negspace(); break;
  }
  std::vector<std::string> warnings;
  const auto loaded = cohort::load_cohort(manifest, &warnings);
  const auto samples = cohort::assemble(loaded.volumes, loaded.annotations, loaded.manifest, regime, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (!out_file.empty()) cohort::save_samples(out_file, samples, regime.fingerprint());
  const auto c = cohort::count_classes(samples);
  nlohmann::ordered_json j;
  j["patients"] = loaded.manifest.patients.size();
  j["annotations"] = loaded.annotations.size();
  j["regime"] = regime.describe();
  j["class_counts"] = {{"untampered", c.untampered}, {"FB", c.fb}, {"FM", c.fm}, {"total", c.total}};
  if (!out_file.empty()) j["tensor"] = out_file;
  std::cout << j.dump() << '\n';
  return 0;
}

int do_phantom(const std::string& spec_text, const std::string& out_dir) {
  const auto spec = phantom::PhantomSpec::parse(spec_text);
  const auto cohort = phantom::generate(spec);
  phantom::write_corpus(cohort, out_dir);
  nlohmann::ordered_json j;
  j["spec"] = spec.describe();
  j["manifest"] = (std::filesystem::path(out_dir) / "manifest.json").string();
  j["patients"] = cohort.volumes.size();
  j["annotations"] = cohort.annotations.size();
  std::cout << j.dump() << '\n';
  return 0;
}

int do_convert(const std::string& format, const std::string& input, const std::string& output) {
  const auto result = convert::convert_file(convert::source_format_from_string(format), input);
  for (const auto& w : result.warnings) std::cerr << "warning: " << input << ": " << w << '\n';
  cohort::save_annotations(output, result.annotations);
  std::cerr << "ctguard: wrote " << result.annotations.size() << " annotations, skipped " << result.warnings.size()
            << " rows\n";
  return 0;
}

int do_report(const std::string& path_text, bool as_json, bool rewrite) {
  std::filesystem::path path(path_text);
  if (std::filesystem::is_directory(path)) path /= "report.json";
  const auto report = eval::load_report(path);
  if (rewrite) {
    for (const auto& [name, curve] : report.roc) {
      write_text_atomic(path.parent_path() / ("roc_" + name + ".csv"), eval::roc_csv(curve));
      write_text_atomic(path.parent_path() / ("roc_" + name + ".svg"), eval::roc_svg(curve, "ROC " + name));
    }
  }
  if (as_json) {
    std::cout << eval::to_json(report).dump(2) << '\n';
    return 0;
  }
  const auto& cm = report.confusion;
  std::printf("study     %s\n", report.config.value("study", std::string("?")).c_str());
  std::printf("learner   %s\n", report.config.value("learner", std::string("?")).c_str());
  std::printf("accuracy  %.4f  (%lld / %lld)\n", report.accuracy, static_cast<long long>(cm.trace()),
              static_cast<long long>(cm.total()));
  std::printf("\n%-12s %10s %10s\n", "class", "precision", "recall");
  for (const auto& m : report.per_class) {
    std::printf("%-12s %9.4f%s %9.4f%s\n", m.name.c_str(), m.pr.precision, m.pr.precision_undefined ? "*" : " ",
                m.pr.recall, m.pr.recall_undefined ? "*" : " ");
  }
  std::printf("\nconfusion (rows true, cols predicted)\n%-12s", "");
  for (const auto& n : cm.class_names) std::printf(" %10s", n.c_str());
  std::printf("\n");
  for (int r = 0; r < cm.k(); ++r) {
    std::printf("%-12s", cm.class_names[static_cast<std::size_t>(r)].c_str());
    for (int c = 0; c < cm.k(); ++c) std::printf(" %10lld", static_cast<long long>(cm.at(r, c)));
    std::printf("\n");
  }
  if (!report.roc.empty()) std::printf("\n");
  for (const auto& [name, curve] : report.roc) std::printf("AUC %-8s %.4f\n", name.c_str(), curve.auc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctguard: detection of injected and removed lesions in CT slices"};
  app.require_subcommand(1);

  std::string ingest_manifest, ingest_regime = "RAW", ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Load a cohort, preprocess its slices and report class counts");
  ingest->add_option("manifest", ingest_manifest, "Cohort manifest.json")->required()->check(CLI::ExistingFile);
  ingest->add_option("--regime", ingest_regime, "RAW, LOCALIZED or NEGSPACE")
      ->check(CLI::IsMember({"RAW", "LOCALIZED", "NEGSPACE"}));
  ingest->add_option("--out", ingest_out, "Write the preprocessed sample tensor here");

  std::string phantom_spec, phantom_out;
  auto* phantom_cmd = app.add_subcommand("phantom", "Write a synthetic cohort (DICOM, manifest, annotations)");
  phantom_cmd->add_option("--spec", phantom_spec, "key=value,... e.g. seed=1,patients=20,strength=1");
  phantom_cmd->add_option("--out", phantom_out, "Output directory")->required();

  std::string conv_from, conv_in, conv_out;
  auto* conv = app.add_subcommand("convert-annotations", "Convert external annotations to the native CSV");
  conv->add_option("--from", conv_from, "native, ctgan, lidc or phantom")
      ->required()
      ->check(CLI::IsMember({"native", "ctgan", "lidc", "phantom"}));
  conv->add_option("--in", conv_in, "Input file (phantom: manifest.json)")->required()->check(CLI::ExistingFile);
  conv->add_option("--out", conv_out, "Output CSV")->required();

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run a study end to end");
  run->add_option("--config", run_opts.config_file, "Flat key = value config file")->check(CLI::ExistingFile);
  run->add_option("--study", run_opts.study, "Study name")
      ->check(CLI::IsMember({"RAW_BINARY", "LOCALIZED", "LOCALIZED_AUG", "NEGSPACE", "NEGSPACE_AUG", "MULTICLASS"}));
  run->add_option("--phantom", run_opts.phantom, "Phantom spec, e.g. seed=1");
  run->add_option("--manifest", run_opts.manifest, "Cohort manifest.json");
  run->add_option("--learner", run_opts.learner, "tree, forest or svm")
      ->check(CLI::IsMember({"tree", "forest", "svm"}));
  run->add_option("--seed", run_opts.seed, "Seed for splitting, balancing and the learner");
  run->add_option("--split", run_opts.split, "TRIAL_BASED or RATIO_85_15")
      ->check(CLI::IsMember({"TRIAL_BASED", "RATIO_85_15"}));
  run->add_option("--augment-test", run_opts.augment_test, "Augment the test split too (true/false)");
  run->add_option("--output-root", run_opts.output_root, "Runs are written to <root>/<config hash>");
  run->add_option("--set", run_opts.settings, "Any config key=value; repeatable");
  run->add_flag("-q,--quiet", run_opts.quiet, "No progress on stderr");

  std::string report_path;
  bool report_json = false, report_rewrite = false;
  auto* report = app.add_subcommand("report", "Validate and summarise a report.json");
  report->add_option("path", report_path, "report.json or its run directory")->required()->check(CLI::ExistingPath);
  report->add_flag("--json", report_json, "Print the validated report as JSON");
  report->add_flag("--svg", report_rewrite, "Rewrite the ROC CSV and SVG files next to the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*ingest) return do_ingest(ingest_manifest, ingest_regime, ingest_out);
    if (*phantom_cmd) return do_phantom(phantom_spec, phantom_out);
    if (*conv) return do_convert(conv_from, conv_in, conv_out);
    if (*run) return do_run(run_opts);
    if (*report) return do_report(report_path, report_json, report_rewrite);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return e.code() == ErrorCode::InvalidConfig ? kUsageError : kRuntimeError;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return kRuntimeError;
  }
  return kUsageError;
}
