#pragma once

// Report serialization: per-metric rows rendered as CSV and NDJSON, raw
// sample series as NDJSON, and the cross-scenario comparison table.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "edgelat/analyzer.hpp"
#include "edgelat/kpis.hpp"
#include "edgelat/ndjson.hpp"

namespace edgelat::report {

struct Row {
  std::string cls;
  std::string metric;
  std::optional<double> value;  // empty with `text` unset means absent
  std::string text;             // non-numeric value (verdicts)
  std::string unit;
  std::optional<double> sigma;

  bool absent() const { return !value && text.empty(); }
};

namespace detail {

inline void distribution_rows(std::vector<Row>& rows, const std::string& cls, const kpis::Distribution& d,
                              std::optional<double> sigma_on_mean = std::nullopt) {
  rows.push_back({cls, "count", static_cast<double>(d.samples_ms.size()), "", "samples", std::nullopt});
  rows.push_back({cls, "mean", d.mean_ms, "", "ms", sigma_on_mean});
  rows.push_back({cls, "min", d.box.min, "", "ms", std::nullopt});
  rows.push_back({cls, "q1", d.box.q1, "", "ms", std::nullopt});
  rows.push_back({cls, "median", d.box.median, "", "ms", std::nullopt});
  rows.push_back({cls, "q3", d.box.q3, "", "ms", std::nullopt});
  rows.push_back({cls, "max", d.box.max, "", "ms", std::nullopt});
  rows.push_back({cls, "whisker_lo", d.box.whisker_lo, "", "ms", std::nullopt});
  rows.push_back({cls, "whisker_hi", d.box.whisker_hi, "", "ms", std::nullopt});
  rows.push_back({cls, "outliers", static_cast<double>(d.box.outliers.size()), "", "samples", std::nullopt});
  rows.push_back({cls, "p95", d.ecdf.percentile(0.95), "", "ms", std::nullopt});
}

inline void absent_row(std::vector<Row>& rows, const std::string& cls) {
  rows.push_back({cls, "status", std::nullopt, "", "", std::nullopt});
}

}  // namespace detail

inline std::vector<Row> rows(const kpis::KpiReport& r) {
  std::vector<Row> out;
  for (auto c : kpis::kAllClasses) {
    const std::string cls(kpis::to_string(c));
    const auto& k = r.of(c);
    if (!k) {
      detail::absent_row(out, cls);
      continue;
    }
    detail::distribution_rows(out, cls, k->latency);
    out.push_back({cls, "srtt_final", k->srtt_ms.back(), "", "ms", std::nullopt});
  }
  auto owd = [&](const std::string& cls, const std::optional<kpis::OwdKpis>& o) {
    if (!o) return detail::absent_row(out, cls);
    detail::distribution_rows(out, cls, o->owd, o->sigma_q_ms);
  };
  owd("OWD_PACKET_UP", r.owd_packet_up);
  owd("OWD_FRAME_UP", r.owd_frame_up);
  owd("OWD_COMMAND_DOWN", r.owd_command_down);

  for (Tap tap : kAllTaps) {
    const std::string node(to_string(tap));
    out.push_back({"CLOCK", "offset_" + node, r.offsets.offset(tap), "", "ms", r.offsets.sigma(tap)});
  }
  out.push_back({"CLOCK", "sigma_q_quadrature", r.clock_error.quadrature_ms, "", "ms", std::nullopt});
  out.push_back({"CLOCK", "sigma_q_linear_sum", r.clock_error.linear_sum_ms, "", "ms", std::nullopt});

  if (r.availability_pct) {
    out.push_back({"PATH", "sent", static_cast<double>(r.sent), "", "packets", std::nullopt});
    out.push_back({"PATH", "delivered", static_cast<double>(r.delivered), "", "packets", std::nullopt});
    out.push_back({"PATH", "availability", *r.availability_pct, "", "percent", std::nullopt});
  } else {
    detail::absent_row(out, "PATH");
  }

  if (r.reliability) {
    const auto& rel = *r.reliability;
    out.push_back({"RELIABILITY", "bound", rel.bound_ms, "", "ms", std::nullopt});
    out.push_back({"RELIABILITY", "fraction_within_bound", rel.fraction_within, "", "fraction", std::nullopt});
    out.push_back({"RELIABILITY", "level", rel.level, "", "fraction", std::nullopt});
    out.push_back({"RELIABILITY", "latency_at_level", rel.latency_at_level_ms, "", "ms", std::nullopt});
    const double sq = r.clock_error.quadrature_ms;
    out.push_back({"SERVICE", "tau", r.config.tau_ms, "", "ms", std::nullopt});
    out.push_back({"SERVICE", "owd_rd_assumed", r.config.owd_rd_ms, "", "ms", std::nullopt});
    out.push_back({"SERVICE", "e2e_srt_mean", *r.e2e_srt_mean_ms, "", "ms", sq});
    out.push_back({"SERVICE", "e2e_srt_at_level", *r.e2e_srt_p95_ms, "", "ms", sq});
    if (r.e2e_srt_measured_ms)
      out.push_back({"SERVICE", "e2e_srt_measured_down", *r.e2e_srt_measured_ms, "", "ms", sq});
    out.push_back({"SERVICE", "distance", r.config.distance_m, "", "m", std::nullopt});
    out.push_back({"SERVICE", "velocity", *r.velocity_kmh, "", "km/h", std::nullopt});
  } else {
    detail::absent_row(out, "RELIABILITY");
    detail::absent_row(out, "SERVICE");
  }

  if (r.demand) {
    out.push_back({"THROUGHPUT", "demanded", r.demand->mbps, "", "Mbit/s", std::nullopt});
    for (const auto& cap : r.demand->caps) {
      out.push_back({"THROUGHPUT", "cap_" + ndjson::format_double(cap.cap_mbps), std::nullopt,
                     std::string(kpis::to_string(cap.verdict)), "verdict", std::nullopt});
    }
  } else if (!r.bulk_goodput_mbps) {
    detail::absent_row(out, "THROUGHPUT");
  }
  if (r.bulk_goodput_mbps) out.push_back({"THROUGHPUT", "goodput", *r.bulk_goodput_mbps, "", "Mbit/s", std::nullopt});
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline std::string to_csv(const kpis::KpiReport& r) {
  std::string out = "scenario,tech,range,class,metric,value,unit,sigma\n";
  const std::string tech = r.config.tech ? std::string(to_string(*r.config.tech)) : "";
  const std::string range = r.config.range ? std::string(to_string(*r.config.range)) : "";
  for (const auto& row : rows(r)) {
    std::string value = row.value ? ndjson::format_double(*row.value) : row.text.empty() ? "absent" : row.text;
    out += csv_field(r.config.scenario) + "," + tech + "," + range + "," + row.cls + "," + row.metric + "," +
           value + "," + row.unit + "," + (row.sigma ? ndjson::format_double(*row.sigma) : "") + "\n";
  }
  return out;
}

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string to_ndjson(const kpis::KpiReport& r) {
  std::string out;
  const std::string tech = r.config.tech ? json_string(std::string(to_string(*r.config.tech))) : "null";
  const std::string range = r.config.range ? json_string(std::string(to_string(*r.config.range))) : "null";
  for (const auto& row : rows(r)) {
    std::string value = row.value ? ndjson::format_double(*row.value) : row.text.empty() ? "null" : json_string(row.text);
    out += "{\"scenario\":" + json_string(r.config.scenario) + ",\"tech\":" + tech + ",\"range\":" + range +
           ",\"class\":" + json_string(row.cls) + ",\"metric\":" + json_string(row.metric) + ",\"value\":" + value +
           ",\"unit\":" + json_string(row.unit) +
           ",\"sigma\":" + (row.sigma ? ndjson::format_double(*row.sigma) : "null") +
           ",\"status\":" + (row.absent() ? "\"absent\"" : "\"present\"") + "}\n";
  }
  return out;
}

// Samples -------------------------------------------------------------------------

struct SampleLine {
  std::string cls;
  std::size_t idx = 0;
  double value_ms = 0.0;
  std::string scenario;  // set in sweep-wide sample files
};

inline std::vector<SampleLine> sample_lines(const analyzer::Analysis& a, const kpis::KpiReport& r) {
  std::vector<SampleLine> out;
  auto add = [&](const char* cls, const std::vector<analyzer::Sample>& s) {
    for (const auto& x : s) out.push_back({cls, x.idx, x.value_ms, {}});
  };
  auto add_frames = [&](const char* cls, const std::vector<analyzer::FrameSample>& s) {
    for (const auto& x : s) out.push_back({cls, x.idx, x.value_ms, {}});
  };
  auto add_series = [&](const char* cls, const std::vector<double>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back({cls, i, s[i], {}});
  };
  add("CTRL_RTT", a.control_rtt.samples);
  if (const auto& k = r.of(kpis::TrafficClass::CTRL)) add_series("CTRL_SRTT", k->srtt_ms);
  add("STREAM_PACKET_RTT", a.stream_rtt.samples);
  if (const auto& k = r.of(kpis::TrafficClass::STREAM_PACKET)) add_series("STREAM_PACKET_SRTT", k->srtt_ms);
  add_frames("STREAM_FRAME_LATENCY", a.frame_latency.samples);
  if (const auto& k = r.of(kpis::TrafficClass::STREAM_FRAME)) add_series("STREAM_FRAME_SRTT", k->srtt_ms);
  add("OWD_PACKET_UP", a.owd_up.samples);
  add_frames("OWD_FRAME_UP", a.frame_owd.samples);
  add("OWD_COMMAND_DOWN", a.owd_command_down.samples);
  return out;
}

inline std::string encode(const SampleLine& s) {
  std::string out = "{\"class\":" + json_string(s.cls) + ",\"idx\":" + std::to_string(s.idx) +
                    ",\"value_ms\":" + ndjson::format_double(s.value_ms);
  if (!s.scenario.empty()) out += ",\"scenario\":" + json_string(s.scenario);
  return out + "}";
}

inline SampleLine decode_sample(std::string_view line) {
  auto j = ndjson::detail::parse_object(line);
  SampleLine s;
  if (!j.contains("class") || !j["class"].is_string()) throw MalformedCapture("missing string field 'class'");
  if (!j.contains("value_ms") || !j["value_ms"].is_number()) throw MalformedCapture("missing numeric field 'value_ms'");
  s.cls = j["class"].get<std::string>();
  s.value_ms = j["value_ms"].get<double>();
  if (j.contains("idx") && j["idx"].is_number_unsigned()) s.idx = j["idx"].get<std::size_t>();
  if (j.contains("scenario") && j["scenario"].is_string()) s.scenario = j["scenario"].get<std::string>();
  return s;
}

inline std::vector<SampleLine> read_samples(const std::filesystem::path& path) {
  return ndjson::read_lines(path, [](std::string_view l) { return decode_sample(l); });
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

// Scenario comparison ---------------------------------------------------------------

inline std::string opt_num(const std::optional<double>& v) { return v ? ndjson::format_double(*v) : "absent"; }

inline std::optional<double> class_median(const kpis::KpiReport& r, kpis::TrafficClass c) {
  if (const auto& k = r.of(c)) return k->latency.box.median;
  return std::nullopt;
}

/// One row per scenario: the velocity bound alongside per-class medians.
inline std::string comparison_csv(const std::vector<kpis::KpiReport>& reports) {
  std::string out =
      "scenario,tech,range,velocity_kmh,e2e_srt_at_level_ms,frame_owd_at_level_ms,median_ctrl_ms,"
      "median_stream_packet_ms,median_stream_frame_ms\n";
  for (const auto& r : reports) {
    std::optional<double> owd_level;
    if (r.reliability) owd_level = r.reliability->latency_at_level_ms;
    out += csv_field(r.config.scenario) + "," + (r.config.tech ? std::string(to_string(*r.config.tech)) : "") + "," +
           (r.config.range ? std::string(to_string(*r.config.range)) : "") + "," + opt_num(r.velocity_kmh) + "," +
           opt_num(r.e2e_srt_p95_ms) + "," + opt_num(owd_level) + "," +
           opt_num(class_median(r, kpis::TrafficClass::CTRL)) + "," +
           opt_num(class_median(r, kpis::TrafficClass::STREAM_PACKET)) + "," +
           opt_num(class_median(r, kpis::TrafficClass::STREAM_FRAME)) + "\n";
  }
  return out;
}

}  // namespace edgelat::report
