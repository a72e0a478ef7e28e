#pragma once

// Sectioned key=value run configuration.
//
//   [scenario]   tech range base_owd_up base_owd_down jitter_std loss_prob
//                bandwidth_cap retransmit (added_owd is implied by range)
//   [clocks]     offset_ue offset_core offset_app sigma_a sigma_b sigma_c
//                resync_interval
//   [video]      enabled encoder resolution fps mean_frame_bytes
//                frame_size_cv duration terminate
//   [workload]   ping_count ping_interval ping_start ping_bytes
//                bulk_duration bulk_rate mss seed
//   [processing] tau_total stage_fractions response_bytes
//   [analysis]   alpha match frame_owd owd_rd delta_s reliability_bound
//                reliability_level
//
// Units: ms for delays, seconds for durations and resync_interval, Mbit/s for
// rates, bytes for sizes. Lines starting with '#' or ';' are comments.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "edgelat/analyzer.hpp"
#include "edgelat/emulator.hpp"
#include "edgelat/model.hpp"
#include "edgelat/ndjson.hpp"

namespace edgelat {

struct AnalysisSettings {
  analyzer::AnalyzerConfig analyzer;
  double owd_rd_ms = 5.0;
  double distance_m = 1.0;
  double reliability_bound_ms = 100.0;
  double reliability_level = 0.95;

  void validate() const {
    analyzer.validate();
    if (owd_rd_ms < 0.0) throw ValidationError("owd_rd must be >= 0");
    if (distance_m < 0.0) throw ValidationError("delta_s must be >= 0");
    if (!(reliability_level > 0.0 && reliability_level <= 1.0))
      throw ValidationError("reliability_level must be in (0,1]");
  }
};

struct RunConfig {
  EmulationRun run;
  AnalysisSettings analysis;

  /// Default lab run: 5G edge path, 20 s of VGA MJPEG video at 20 fps and a
  /// ping every 100 ms alongside it.
  static RunConfig defaults() {
    RunConfig c;
    c.run.scenario = Scenario::make(Tech::FIVE_G, Range::EDGE);
    c.run.workload.pings.count = 200;
    c.run.workload.pings.interval_ms = 100.0;
    c.run.workload.video = VideoWorkload{VideoConfig::defaults(Encoder::MJPEG, Resolution::VGA), 20.0, true};
    return c;
  }

  void validate() const {
    run.validate();
    analysis.validate();
  }
};

constexpr std::string_view to_string(analyzer::MatchMode m) {
  return m == analyzer::MatchMode::BY_PID ? "pid" : "seq";
}
constexpr std::string_view to_string(analyzer::FrameEndpoints e) {
  return e == analyzer::FrameEndpoints::FIRST_TO_LAST ? "first-last" : "first-first";
}
inline std::optional<analyzer::MatchMode> parse_match(std::string_view s) {
  if (s == "pid") return analyzer::MatchMode::BY_PID;
  if (s == "seq") return analyzer::MatchMode::BY_SEQ;
  return std::nullopt;
}
inline std::optional<analyzer::FrameEndpoints> parse_endpoints(std::string_view s) {
  if (s == "first-last") return analyzer::FrameEndpoints::FIRST_TO_LAST;
  if (s == "first-first") return analyzer::FrameEndpoints::FIRST_TO_FIRST;
  return std::nullopt;
}

namespace ini {

struct Entry {
  std::string value;
  int line = 0;
};

using Document = std::map<std::string, std::map<std::string, Entry>>;

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline Document parse(std::istream& in) {
  Document doc;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto text = trim(raw);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("unterminated section header", line);
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line);
      doc[section];
      continue;
    }
    auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    if (section.empty()) throw ConfigError("key outside of a section", line);
    auto key = trim(std::string_view(text).substr(0, eq));
    auto value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line);
    if (!doc[section].emplace(key, Entry{value, line}).second)
      throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line);
  }
  return doc;
}

inline Document parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

class SectionReader {
 public:
  SectionReader(const Document& doc, const std::string& name) {
    if (auto it = doc.find(name); it != doc.end()) entries_ = &it->second;
    name_ = name;
  }

  bool has(const std::string& key) const { return entries_ && entries_->count(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const auto& e = entries_->at(key);
    used_.insert(key);
    out = convert<T>(e, key);
  }

  /// Every key present in the section must have been consumed.
  void finish() const {
    if (!entries_) return;
    for (const auto& [key, e] : *entries_) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]", e.line);
    }
  }

  void mark_used(const std::string& key) { used_.insert(key); }

  /// Line of the key named in `message`, else of `fallback`, else of the
  /// section's first key.
  int line_for(std::string_view message, const std::string& fallback) const {
    if (!entries_ || entries_->empty()) return 0;
    for (const auto& [key, e] : *entries_) {
      if (message.find(key) != std::string_view::npos) return e.line;
    }
    if (auto it = entries_->find(fallback); it != entries_->end()) return it->second.line;
    int first = entries_->begin()->second.line;
    for (const auto& [key, e] : *entries_) first = std::min(first, e.line);
    return first;
  }
  const Entry* entry(const std::string& key) const { return has(key) ? &entries_->at(key) : nullptr; }

 private:
  template <typename T>
  T convert(const Entry& e, const std::string& key) const {
    auto bad = [&](const std::string& what) {
      return ConfigError("invalid value '" + e.value + "' for " + key + ": expected " + what, e.line);
    };
    const char* b = e.value.data();
    const char* end = e.value.data() + e.value.size();
    if constexpr (std::is_same_v<T, bool>) {
      if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
      if (e.value == "false" || e.value == "0" || e.value == "no") return false;
      throw bad("true or false");
    } else if constexpr (std::is_same_v<T, double>) {
      double v = 0;
      auto res = std::from_chars(b, end, v);
      if (res.ec != std::errc{} || res.ptr != end) throw bad("a number");
      return v;
    } else if constexpr (std::is_integral_v<T>) {
      T v = 0;
      auto res = std::from_chars(b, end, v);
      if (res.ec != std::errc{} || res.ptr != end) throw bad("an integer");
      return v;
    } else if constexpr (std::is_enum_v<T>) {
      auto v = parse_enum<T>(e.value);
      if (!v) throw bad("one of the enum names");
      return *v;
    } else {
      return e.value;
    }
  }

  const std::map<std::string, Entry>* entries_ = nullptr;
  std::string name_;
  std::set<std::string> used_;
};

}  // namespace ini

inline RunConfig parse_config(const ini::Document& doc) {
  static const std::set<std::string> kSections{"scenario", "clocks", "video", "workload", "processing", "analysis"};
  for (const auto& [name, entries] : doc) {
    if (!kSections.count(name)) {
      int line = entries.empty() ? 0 : entries.begin()->second.line;
      throw ConfigError("unknown section [" + name + "]", line);
    }
  }
  RunConfig cfg = RunConfig::defaults();
  auto wrap = [](const ini::SectionReader& sec, const char* key, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      throw ConfigError(e.what(), sec.line_for(e.what(), key));
    }
  };

  {
    ini::SectionReader sec(doc, "scenario");
    Tech tech = cfg.run.scenario.tech;
    Range range = cfg.run.scenario.range;
    sec.get("tech", tech);
    sec.get("range", range);
    wrap(sec, "range", [&] { cfg.run.scenario = Scenario::make(tech, range); });
    auto& s = cfg.run.scenario;
    if (const auto* e = sec.entry("added_owd")) {
      double v = 0;
      sec.get("added_owd", v);
      if (v != s.added_owd())
        throw ConfigError("added_owd is fixed by range " + std::string(to_string(range)) + " (" +
                              ndjson::format_double(s.added_owd()) + " ms)",
                          e->line);
    }
    sec.get("base_owd_up", s.base_owd_up_ms);
    sec.get("base_owd_down", s.base_owd_down_ms);
    sec.get("jitter_std", s.jitter_std_ms);
    sec.get("loss_prob", s.loss_prob);
    sec.get("bandwidth_cap", s.bandwidth_cap_mbps);
    sec.get("retransmit", s.retransmit);
    sec.finish();
    wrap(sec, "tech", [&] { s.validate(); });
  }
  {
    ini::SectionReader sec(doc, "clocks");
    auto& c = cfg.run.clocks;
    sec.get("offset_ue", c.offset_ms[0]);
    sec.get("offset_core", c.offset_ms[1]);
    sec.get("offset_app", c.offset_ms[2]);
    sec.get("sigma_a", c.sigma_ms[0]);
    sec.get("sigma_b", c.sigma_ms[1]);
    sec.get("sigma_c", c.sigma_ms[2]);
    sec.get("resync_interval", c.resync_interval_s);
    sec.finish();
    wrap(sec, "sigma_a", [&] { c.validate(); });
  }
  {
    ini::SectionReader sec(doc, "video");
    bool enabled = cfg.run.workload.video.has_value();
    sec.get("enabled", enabled);
    VideoWorkload w = cfg.run.workload.video.value_or(VideoWorkload{});
    Encoder enc = w.video.encoder;
    Resolution res = w.video.resolution;
    sec.get("encoder", enc);
    sec.get("resolution", res);
    w.video = VideoConfig::defaults(enc, res);
    sec.get("fps", w.video.fps);
    sec.get("mean_frame_bytes", w.video.mean_frame_bytes);
    sec.get("frame_size_cv", w.video.frame_size_cv);
    sec.get("duration", w.duration_s);
    sec.get("terminate", w.terminate);
    sec.finish();
    wrap(sec, "fps", [&] { w.video.validate(); });
    if (enabled) {
      cfg.run.workload.video = w;
    } else {
      cfg.run.workload.video.reset();
    }
  }
  {
    ini::SectionReader sec(doc, "workload");
    auto& w = cfg.run.workload;
    sec.get("ping_count", w.pings.count);
    sec.get("ping_interval", w.pings.interval_ms);
    sec.get("ping_start", w.pings.start_ms);
    sec.get("ping_bytes", w.pings.payload_bytes);
    double bulk_duration = w.bulk ? w.bulk->duration_s : 0.0;
    double bulk_rate = w.bulk ? w.bulk->rate_mbps : BulkWorkload{}.rate_mbps;
    sec.get("bulk_duration", bulk_duration);
    sec.get("bulk_rate", bulk_rate);
    if (bulk_duration > 0.0) {
      w.bulk = BulkWorkload{bulk_duration, bulk_rate};
    } else {
      w.bulk.reset();
    }
    sec.get("mss", cfg.run.mss);
    sec.get("seed", cfg.run.seed);
    sec.finish();
    wrap(sec, "bulk_duration", [&] { w.validate(); });
  }
  {
    ini::SectionReader sec(doc, "processing");
    double tau = cfg.run.processing.tau_total_ms();
    auto fractions = cfg.run.processing.stage_fractions();
    std::int64_t response = cfg.run.processing.response_bytes();
    sec.get("tau_total", tau);
    if (const auto* e = sec.entry("stage_fractions")) {
      sec.mark_used("stage_fractions");
      std::istringstream parts(e->value);
      std::string item;
      std::size_t i = 0;
      while (std::getline(parts, item, ',')) {
        auto t = ini::trim(item);
        if (i >= fractions.size()) throw ConfigError("stage_fractions needs exactly 4 values", e->line);
        auto res = std::from_chars(t.data(), t.data() + t.size(), fractions[i]);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
          throw ConfigError("invalid stage fraction '" + t + "'", e->line);
        ++i;
      }
      if (i != fractions.size()) throw ConfigError("stage_fractions needs exactly 4 values", e->line);
    }
    sec.get("response_bytes", response);
    sec.finish();
    wrap(sec, "stage_fractions", [&] { cfg.run.processing = ProcessingModel(tau, fractions, response); });
  }
  {
    ini::SectionReader sec(doc, "analysis");
    auto& a = cfg.analysis;
    sec.get("alpha", a.analyzer.alpha);
    if (const auto* e = sec.entry("match")) {
      sec.mark_used("match");
      auto m = parse_match(e->value);
      if (!m) throw ConfigError("match must be pid or seq", e->line);
      a.analyzer.match = *m;
    }
    if (const auto* e = sec.entry("frame_owd")) {
      sec.mark_used("frame_owd");
      auto m = parse_endpoints(e->value);
      if (!m) throw ConfigError("frame_owd must be first-last or first-first", e->line);
      a.analyzer.endpoints = *m;
    }
    sec.get("owd_rd", a.owd_rd_ms);
    sec.get("delta_s", a.distance_m);
    sec.get("reliability_bound", a.reliability_bound_ms);
    sec.get("reliability_level", a.reliability_level);
    sec.finish();
    wrap(sec, "alpha", [&] { a.validate(); });
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) { return parse_config(ini::parse_string(text)); }

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse_config(ini::parse(in));
  } catch (const ConfigError& e) {
    throw ConfigError(path.filename().string() + ": " + e.what());
  }
}

/// Writes every field explicitly, so the output reproduces the run when fed
/// back as a config.
inline std::string to_ini(const RunConfig& cfg) {
  using ndjson::format_double;
  auto num = [](double v) { return std::isinf(v) ? std::string(v > 0 ? "inf" : "-inf") : format_double(v); };
  const auto& s = cfg.run.scenario;
  const auto& c = cfg.run.clocks;
  const auto& w = cfg.run.workload;
  const auto& p = cfg.run.processing;
  const auto& a = cfg.analysis;
  std::ostringstream o;
  o << "[scenario]\n"
    << "tech = " << to_string(s.tech) << "\n"
    << "range = " << to_string(s.range) << "\n"
    << "added_owd = " << num(s.added_owd()) << "\n"
    << "base_owd_up = " << num(s.base_owd_up_ms) << "\n"
    << "base_owd_down = " << num(s.base_owd_down_ms) << "\n"
    << "jitter_std = " << num(s.jitter_std_ms) << "\n"
    << "loss_prob = " << num(s.loss_prob) << "\n"
    << "bandwidth_cap = " << num(s.bandwidth_cap_mbps) << "\n"
    << "retransmit = " << (s.retransmit ? "true" : "false") << "\n\n";
  o << "[clocks]\n"
    << "offset_ue = " << num(c.offset_ms[0]) << "\n"
    << "offset_core = " << num(c.offset_ms[1]) << "\n"
    << "offset_app = " << num(c.offset_ms[2]) << "\n"
    << "sigma_a = " << num(c.sigma_ms[0]) << "\n"
    << "sigma_b = " << num(c.sigma_ms[1]) << "\n"
    << "sigma_c = " << num(c.sigma_ms[2]) << "\n"
    << "resync_interval = " << num(c.resync_interval_s) << "\n\n";
  const VideoWorkload v = w.video.value_or(VideoWorkload{});
  o << "[video]\n"
    << "enabled = " << (w.video ? "true" : "false") << "\n"
    << "encoder = " << to_string(v.video.encoder) << "\n"
    << "resolution = " << to_string(v.video.resolution) << "\n"
    << "fps = " << num(v.video.fps) << "\n"
    << "mean_frame_bytes = " << num(v.video.mean_frame_bytes) << "\n"
    << "frame_size_cv = " << num(v.video.frame_size_cv) << "\n"
    << "duration = " << num(v.duration_s) << "\n"
    << "terminate = " << (v.terminate ? "true" : "false") << "\n\n";
  o << "[workload]\n"
    << "ping_count = " << w.pings.count << "\n"
    << "ping_interval = " << num(w.pings.interval_ms) << "\n"
    << "ping_start = " << num(w.pings.start_ms) << "\n"
    << "ping_bytes = " << w.pings.payload_bytes << "\n"
    << "bulk_duration = " << num(w.bulk ? w.bulk->duration_s : 0.0) << "\n"
    << "bulk_rate = " << num(w.bulk ? w.bulk->rate_mbps : BulkWorkload{}.rate_mbps) << "\n"
    << "mss = " << cfg.run.mss << "\n"
    << "seed = " << cfg.run.seed << "\n\n";
  o << "[processing]\n"
    << "tau_total = " << num(p.tau_total_ms()) << "\n"
    << "stage_fractions = ";
  for (std::size_t i = 0; i < 4; ++i) o << (i ? "," : "") << num(p.stage_fractions()[i]);
  o << "\n"
    << "response_bytes = " << p.response_bytes() << "\n\n";
  o << "[analysis]\n"
    << "alpha = " << num(a.analyzer.alpha) << "\n"
    << "match = " << to_string(a.analyzer.match) << "\n"
    << "frame_owd = " << to_string(a.analyzer.endpoints) << "\n"
    << "owd_rd = " << num(a.owd_rd_ms) << "\n"
    << "delta_s = " << num(a.distance_m) << "\n"
    << "reliability_bound = " << num(a.reliability_bound_ms) << "\n"
    << "reliability_level = " << num(a.reliability_level) << "\n";
  return o.str();
}

}  // namespace edgelat
