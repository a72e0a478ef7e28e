#pragma once

// Command-line front end. Exit codes: 0 success, 1 validation or usage
// error, 2 selftest oracle failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgelat/config.hpp"
#include "edgelat/pipeline.hpp"
#include "edgelat/plot.hpp"
#include "edgelat/report.hpp"
#include "edgelat/selftest.hpp"

namespace edgelat::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kOracleFailure = 2;

struct PlotOptions {
  plot::Kind kind = plot::Kind::CDF;
  std::optional<std::filesystem::path> in;
  std::optional<std::string> cls;
  double level = 0.95;
  bool ascii = false;
};

inline std::vector<double> class_values(const std::vector<report::SampleLine>& lines, const std::string& cls) {
  std::vector<double> v;
  for (const auto& l : lines) {
    if (l.cls == cls) v.push_back(l.value_ms);
  }
  return v;
}

inline std::string pick_class(const std::vector<report::SampleLine>& lines, const std::optional<std::string>& cls) {
  if (cls) return *cls;
  for (const char* preferred : {"OWD_FRAME_UP", "OWD_PACKET_UP", "CTRL_RTT"}) {
    if (!class_values(lines, preferred).empty()) return preferred;
  }
  if (lines.empty()) throw ValidationError("sample file has no samples");
  return lines.front().cls;
}

inline std::string render_plot(const PlotOptions& o) {
  if (o.kind == plot::Kind::THROUGHPUT) {
    std::vector<plot::Bar> bars = plot::default_demand_bars();
    if (o.in) {
      auto cfg = load_config(*o.in);
      if (!cfg.run.workload.video) throw ValidationError("config has no video workload");
      bars = plot::default_demand_bars(cfg.run.workload.video->video.encoder, cfg.run.workload.video->video.fps);
    }
    std::vector<double> caps{kFourGCapMbps, kFiveGCapMbps};
    return o.ascii ? plot::throughput_ascii(bars, caps) : plot::throughput_svg(bars, caps, "Demanded throughput");
  }

  if (!o.in) throw ValidationError("--in is required for this plot kind");
  auto lines = report::read_samples(*o.in);
  if (o.kind == plot::Kind::CDF) {
    const auto cls = pick_class(lines, o.cls);
    auto v = class_values(lines, cls);
    if (v.empty()) throw ValidationError("no samples of class " + cls);
    return o.ascii ? plot::cdf_ascii(v, o.level) : plot::cdf_svg(v, o.level, cls + " CDF");
  }

  const bool by_scenario =
      std::any_of(lines.begin(), lines.end(), [](const report::SampleLine& l) { return !l.scenario.empty(); });
  std::vector<plot::Group> groups;
  std::map<std::string, std::size_t> slot;
  const std::string cls = by_scenario ? pick_class(lines, o.cls) : o.cls.value_or("");
  for (const auto& l : lines) {
    if (!cls.empty() && l.cls != cls) continue;
    const std::string& key = by_scenario ? l.scenario : l.cls;
    auto [it, fresh] = slot.emplace(key, groups.size());
    if (fresh) groups.push_back({key, {}});
    groups[it->second].second.push_back(l.value_ms);
  }
  if (groups.empty()) throw ValidationError("no samples to plot");
  const std::string title = by_scenario ? cls + " by scenario" : "latency by class";
  return o.ascii ? plot::box_ascii(groups) : plot::box_svg(groups, title);
}

inline void print_selftest(const std::vector<selftest::OracleResult>& results, std::ostream& out) {
  std::size_t failed = 0;
  for (const auto& r : results) {
    out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    if (!r.pass) ++failed;
  }
  out << results.size() - failed << "/" << results.size() << " oracles passed\n";
}

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Latency emulation and capture analysis toolkit", "edgelat"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_path, plot_out;
  std::optional<std::uint64_t> seed;
  bool overwrite = false;

  auto* sim = app.add_subcommand("simulate", "Emulate a scenario and write tap captures");
  sim->add_option("--config", config_path, "INI config file")->required();
  sim->add_option("--seed", seed, "RNG seed (overrides the config)");
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_flag("--overwrite", overwrite, "Replace existing outputs");

  std::optional<double> alpha;
  std::string match, endpoints;
  std::string analyze_out;
  auto* ana = app.add_subcommand("analyze", "Compute latency samples and KPIs from a capture directory");
  ana->add_option("--in", in_path, "Capture directory")->required();
  ana->add_option("--alpha", alpha, "SRTT smoothing gain");
  ana->add_option("--match", match, "Packet identity for OWD")->check(CLI::IsMember({"pid", "seq"}));
  ana->add_option("--frame-owd", endpoints, "Frame OWD endpoints")->check(CLI::IsMember({"first-last", "first-first"}));
  ana->add_option("--out", analyze_out, "Report directory (default: the capture directory)");
  ana->add_flag("--overwrite", overwrite, "Replace existing outputs");

  auto* swp = app.add_subcommand("sweep", "Run the five reference scenarios and compare them");
  swp->add_option("--config", config_path, "INI config file")->required();
  swp->add_option("--out", out_dir, "Output directory")->required();
  swp->add_flag("--overwrite", overwrite, "Replace existing outputs");

  std::string kind;
  PlotOptions popts;
  std::string plot_in, plot_class;
  auto* plt = app.add_subcommand("plot", "Render a CDF, boxplot or throughput chart");
  plt->add_option("--kind", kind, "Plot kind")->required();
  plt->add_option("--in", plot_in, "Sample NDJSON (cdf, box) or config (throughput)");
  plt->add_option("--out", plot_out, "Output file")->required();
  plt->add_option("--class", plot_class, "Sample class to plot");
  plt->add_option("--level", popts.level, "Reliability level marked on the CDF");
  plt->add_flag("--ascii", popts.ascii, "Plain-text output instead of SVG");
  plt->add_flag("--overwrite", overwrite, "Replace an existing output file");

  auto* st = app.add_subcommand("selftest", "Run the built-in oracle battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sim->parsed()) {
      auto cfg = load_config(config_path);
      if (seed) cfg.run.seed = *seed;
      pipeline::simulate_to_dir(cfg, out_dir, overwrite);
      out << "wrote captures for " << cfg.run.scenario.label() << " to " << out_dir << "\n";
    } else if (ana->parsed()) {
      pipeline::AnalyzeOptions o;
      o.alpha = alpha;
      if (!match.empty()) o.match = parse_match(match);
      if (!endpoints.empty()) o.endpoints = parse_endpoints(endpoints);
      if (!analyze_out.empty()) o.out_dir = analyze_out;
      o.overwrite = overwrite;
      auto res = pipeline::analyze_dir(in_path, o);
      out << "analyzed " << in_path << ": " << res.analysis.control_rtt.samples.size() << " control RTTs, "
          << res.analysis.frame_owd.samples.size() << " frame OWDs\n";
    } else if (swp->parsed()) {
      auto res = pipeline::sweep(load_config(config_path), out_dir, overwrite);
      out << report::comparison_csv(res.reports());
    } else if (plt->parsed()) {
      auto k = plot::parse_kind(kind);
      if (!k) {
        err << "error: unknown plot kind '" << kind << "' (expected cdf, box or throughput)\n";
        return kUsage;
      }
      popts.kind = *k;
      if (!plot_in.empty()) popts.in = plot_in;
      if (!plot_class.empty()) popts.cls = plot_class;
      if (!overwrite && std::filesystem::exists(plot_out))
        throw Error("refusing to overwrite existing " + plot_out + " (pass --overwrite)");
      const auto text = render_plot(popts);
      if (auto parent = std::filesystem::path(plot_out).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
      report::write_text(plot_out, text);
    } else if (st->parsed()) {
      auto results = selftest::run_all();
      print_selftest(results, out);
      return selftest::all_pass(results) ? kOk : kOracleFailure;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}

}  // namespace edgelat::cli
