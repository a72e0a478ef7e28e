#pragma once

// End-to-end drivers used by the command-line tool: simulate a run into a
// capture directory, analyze a capture directory into reports, and sweep the
// five reference scenarios.

#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "edgelat/analyzer.hpp"
#include "edgelat/config.hpp"
#include "edgelat/emulator.hpp"
#include "edgelat/kpis.hpp"
#include "edgelat/ndjson.hpp"
#include "edgelat/report.hpp"

namespace edgelat::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kManifestFile = "manifest.ini";
inline constexpr const char* kSamplesFile = "samples.ndjson";
inline constexpr const char* kReportCsv = "report.csv";
inline constexpr const char* kReportNdjson = "report.ndjson";
inline constexpr const char* kComparisonCsv = "comparison.csv";
inline constexpr const char* kSweepSamples = "sweep_samples.ndjson";

/// Creates `dir` if needed and refuses to clobber any of `files` unless
/// `overwrite` is set.
inline void prepare_outputs(const fs::path& dir, const std::vector<std::string>& files, bool overwrite) {
  fs::create_directories(dir);
  if (overwrite) return;
  for (const auto& f : files) {
    if (fs::exists(dir / f))
      throw Error("refusing to overwrite existing " + (dir / f).string() + " (pass --overwrite)");
  }
}

inline std::vector<std::string> capture_files() {
  return {ndjson::kUeFile, ndjson::kCoreFile, ndjson::kAppFile, ndjson::kNtpFile, ndjson::kTruthFile, kManifestFile};
}

inline std::vector<std::string> analysis_files() { return {kSamplesFile, kReportCsv, kReportNdjson}; }

inline EmulationResult simulate_to_dir(const RunConfig& cfg, const fs::path& dir, bool overwrite) {
  cfg.validate();
  prepare_outputs(dir, capture_files(), overwrite);
  auto result = run(cfg.run);
  ndjson::write_capture_set(dir, result.captures);
  write_truth(dir / ndjson::kTruthFile, result.truth);
  report::write_text(dir / kManifestFile, to_ini(cfg));
  return result;
}

inline std::string slug(const Scenario& s) {
  std::string t = s.tech == Tech::FIVE_G ? "5g" : "4g";
  std::string r = s.range == Range::EDGE ? "edge" : s.range == Range::REGIONAL ? "regional" : "national";
  return t + "-" + r;
}

inline kpis::ReportConfig report_config_for(const RunConfig& cfg) {
  kpis::ReportConfig rc;
  rc.scenario = cfg.run.scenario.label();
  rc.tech = cfg.run.scenario.tech;
  rc.range = cfg.run.scenario.range;
  rc.tau_ms = cfg.run.processing.tau_total_ms();
  rc.owd_rd_ms = cfg.analysis.owd_rd_ms;
  rc.distance_m = cfg.analysis.distance_m;
  rc.reliability_bound_ms = cfg.analysis.reliability_bound_ms;
  rc.reliability_level = cfg.analysis.reliability_level;
  if (cfg.run.workload.video) rc.video = cfg.run.workload.video->video;
  return rc;
}

struct AnalysisOutput {
  analyzer::Analysis analysis;
  kpis::KpiReport report;
};

inline AnalysisOutput analyze_captures(const CaptureSet& captures, const analyzer::AnalyzerConfig& acfg,
                                       const kpis::ReportConfig& rcfg) {
  for (Tap tap : kAllTaps) {
    auto v = validate(captures.at(tap));
    if (!v) throw ValidationError(std::string(ndjson::tap_file(tap)) + ": " + v.message);
  }
  AnalysisOutput out;
  out.analysis = analyzer::analyze(captures, acfg);
  out.report = kpis::build_report(out.analysis, rcfg);
  return out;
}

inline void write_analysis(const fs::path& dir, const AnalysisOutput& out, bool overwrite) {
  prepare_outputs(dir, analysis_files(), overwrite);
  std::string samples;
  for (const auto& s : report::sample_lines(out.analysis, out.report)) samples += report::encode(s) + "\n";
  report::write_text(dir / kSamplesFile, samples);
  report::write_text(dir / kReportCsv, report::to_csv(out.report));
  report::write_text(dir / kReportNdjson, report::to_ndjson(out.report));
}

/// Flag overrides for `analyze`; unset fields fall back to the capture
/// directory's manifest, then to defaults.
struct AnalyzeOptions {
  std::optional<double> alpha;
  std::optional<analyzer::MatchMode> match;
  std::optional<analyzer::FrameEndpoints> endpoints;
  std::optional<fs::path> out_dir;
  bool overwrite = false;
};

inline AnalysisOutput analyze_dir(const fs::path& in_dir, const AnalyzeOptions& opts) {
  auto captures = ndjson::read_capture_set(in_dir);
  RunConfig cfg = RunConfig::defaults();
  kpis::ReportConfig rcfg;
  if (fs::exists(in_dir / kManifestFile)) {
    cfg = load_config(in_dir / kManifestFile);
    rcfg = report_config_for(cfg);
  } else {
    rcfg.owd_rd_ms = cfg.analysis.owd_rd_ms;
    rcfg.distance_m = cfg.analysis.distance_m;
  }
  auto acfg = cfg.analysis.analyzer;
  if (opts.alpha) acfg.alpha = *opts.alpha;
  if (opts.match) acfg.match = *opts.match;
  if (opts.endpoints) acfg.endpoints = *opts.endpoints;
  auto out = analyze_captures(captures, acfg, rcfg);
  write_analysis(opts.out_dir.value_or(in_dir), out, opts.overwrite);
  return out;
}

// Sweep -------------------------------------------------------------------------

inline constexpr std::array<std::pair<Tech, Range>, 5> kSweepScenarios{{
    {Tech::FIVE_G, Range::EDGE},
    {Tech::FIVE_G, Range::REGIONAL},
    {Tech::FIVE_G, Range::NATIONAL},
    {Tech::FOUR_G, Range::REGIONAL},
    {Tech::FOUR_G, Range::NATIONAL},
}};

/// The base config with its scenario swapped for scenario `index` of the
/// sweep. Access-network parameters come from the technology defaults;
/// jitter, loss and retransmission carry over. Seeds are base + index.
inline RunConfig sweep_config(const RunConfig& base, std::size_t index) {
  RunConfig cfg = base;
  const auto [tech, range] = kSweepScenarios.at(index);
  auto s = Scenario::make(tech, range);
  s.jitter_std_ms = base.run.scenario.jitter_std_ms;
  s.loss_prob = base.run.scenario.loss_prob;
  s.retransmit = base.run.scenario.retransmit;
  cfg.run.scenario = s;
  cfg.run.seed = base.run.seed + index;
  return cfg;
}

struct SweepResult {
  std::vector<RunConfig> configs;
  std::vector<AnalysisOutput> outputs;

  std::vector<kpis::KpiReport> reports() const {
    std::vector<kpis::KpiReport> r;
    for (const auto& o : outputs) r.push_back(o.report);
    return r;
  }
};

/// Runs the five scenarios concurrently and analyzes each in memory. When
/// `out_dir` is given, every scenario's captures and reports land in its own
/// subdirectory, plus a comparison table and a combined sample file.
inline SweepResult sweep(const RunConfig& base, const std::optional<fs::path>& out_dir = std::nullopt,
                         bool overwrite = false) {
  base.validate();
  if (out_dir) {
    prepare_outputs(*out_dir, {kComparisonCsv, kSweepSamples}, overwrite);
    for (std::size_t i = 0; i < kSweepScenarios.size(); ++i) {
      auto dir = *out_dir / slug(sweep_config(base, i).run.scenario);
      auto files = capture_files();
      for (auto& f : analysis_files()) files.push_back(f);
      prepare_outputs(dir, files, overwrite);
    }
  }

  SweepResult result;
  std::vector<std::future<AnalysisOutput>> jobs;
  for (std::size_t i = 0; i < kSweepScenarios.size(); ++i) {
    result.configs.push_back(sweep_config(base, i));
    jobs.push_back(std::async(std::launch::async, [cfg = result.configs.back(), out_dir] {
      EmulationResult emu;
      if (out_dir) {
        emu = simulate_to_dir(cfg, *out_dir / slug(cfg.run.scenario), true);
      } else {
        emu = run(cfg.run);
      }
      auto out = analyze_captures(emu.captures, cfg.analysis.analyzer, report_config_for(cfg));
      if (out_dir) write_analysis(*out_dir / slug(cfg.run.scenario), out, true);
      return out;
    }));
  }
  for (auto& j : jobs) result.outputs.push_back(j.get());

  if (out_dir) {
    report::write_text(*out_dir / kComparisonCsv, report::comparison_csv(result.reports()));
    std::string samples;
    for (const auto& o : result.outputs) {
      for (auto s : report::sample_lines(o.analysis, o.report)) {
        s.scenario = o.report.config.scenario;
        samples += report::encode(s) + "\n";
      }
    }
    report::write_text(*out_dir / kSweepSamples, samples);
  }
  return result;
}

}  // namespace edgelat::pipeline
