#pragma once

// SVG and terminal renderings of latency CDFs, per-scenario boxplots and
// throughput demand against bandwidth caps.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "edgelat/kpis.hpp"
#include "edgelat/ndjson.hpp"

namespace edgelat::plot {

enum class Kind { CDF, BOX, THROUGHPUT };

inline std::optional<Kind> parse_kind(std::string_view s) {
  if (s == "cdf") return Kind::CDF;
  if (s == "box") return Kind::BOX;
  if (s == "throughput") return Kind::THROUGHPUT;
  return std::nullopt;
}

namespace detail {

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;

struct Scale {
  double lo, hi, px_lo, px_hi;
  double operator()(double v) const {
    if (hi <= lo) return (px_lo + px_hi) / 2.0;
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

inline std::string num(double v) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << v;
  return o.str();
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" + num(kWidth / 2) +
         "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) +
         "</text>\n";
}

inline std::string axes(const std::string& xlabel, const std::string& ylabel) {
  const double x0 = kLeft, y0 = kHeight - kBottom, x1 = kWidth - kRight, y1 = kTop;
  return "<line class=\"axis\" x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) +
         "\" stroke=\"black\"/>\n" + "<line class=\"axis\" x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" +
         num(x0) + "\" y2=\"" + num(y1) + "\" stroke=\"black\"/>\n" + "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" +
         num(kHeight - 12) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape(xlabel) + "</text>\n" + "<text x=\"14\" y=\"" + num((y0 + y1) / 2) +
         "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 " + num((y0 + y1) / 2) +
         ")\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";
}

inline std::string tick_label(double x, double y, const std::string& text, const char* anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + escape(text) + "</text>\n";
}

}  // namespace detail

// CDF -------------------------------------------------------------------------------

/// Empirical CDF as a step polyline with a horizontal marker at `level`.
inline std::string cdf_svg(const std::vector<double>& samples, double level, const std::string& title) {
  using namespace detail;
  kpis::Ecdf e(samples);
  Scale sx{e.min(), e.max(), kLeft, kWidth - kRight};
  Scale sy{0.0, 1.0, kHeight - kBottom, kTop};
  std::string svg = header(title) + axes("latency (ms)", "cumulative probability");
  std::string pts = num(sx(e.min())) + "," + num(sy(0.0));
  double prev = 0.0;
  for (std::size_t i = 0; i < e.values().size(); ++i) {
    const double x = sx(e.values()[i]);
    pts += " " + num(x) + "," + num(sy(prev));
    prev = e.probabilities()[i];
    pts += " " + num(x) + "," + num(sy(prev));
  }
  svg += "<polyline class=\"cdf\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  svg += "<line class=\"reliability\" data-level=\"" + ndjson::format_double(level) + "\" x1=\"" + num(kLeft) +
         "\" y1=\"" + num(sy(level)) + "\" x2=\"" + num(kWidth - kRight) + "\" y2=\"" + num(sy(level)) +
         "\" stroke=\"firebrick\" stroke-dasharray=\"4 3\"/>\n";
  svg += tick_label(kWidth - kRight, sy(level) - 4, "p=" + num(level) + " at " + num(e.percentile(level)) + " ms", "end");
  svg += tick_label(kLeft, kHeight - kBottom + 14, num(e.min()));
  svg += tick_label(kWidth - kRight, kHeight - kBottom + 14, num(e.max()));
  svg += tick_label(kLeft - 4, sy(1.0) + 4, "1.0", "end");
  svg += tick_label(kLeft - 4, sy(0.0) + 4, "0.0", "end");
  return svg + "</svg>\n";
}

inline std::string cdf_ascii(const std::vector<double>& samples, double level, int width = 60, int height = 20) {
  kpis::Ecdf e(samples);
  std::vector<std::string> grid(static_cast<std::size_t>(height), std::string(static_cast<std::size_t>(width), ' '));
  const double lo = e.min(), hi = e.max();
  for (int c = 0; c < width; ++c) {
    const double x = hi > lo ? lo + (hi - lo) * c / (width - 1) : lo;
    const double p = e.cdf(x);
    auto r = static_cast<int>(std::lround((1.0 - p) * (height - 1)));
    grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = '*';
  }
  auto lr = static_cast<std::size_t>(std::lround((1.0 - level) * (height - 1)));
  for (auto& ch : grid[lr]) {
    if (ch == ' ') ch = '-';
  }
  std::ostringstream o;
  for (int r = 0; r < height; ++r) {
    const double p = 1.0 - static_cast<double>(r) / (height - 1);
    o << (r == 0 || r == height - 1 || static_cast<std::size_t>(r) == lr ? detail::num(p) : "    ") << " |"
      << grid[static_cast<std::size_t>(r)] << "\n";
  }
  o << "     +" << std::string(static_cast<std::size_t>(width), '-') << "\n";
  o << "      " << detail::num(lo) << " ms" << std::string(static_cast<std::size_t>(std::max(1, width - 20)), ' ')
    << detail::num(hi) << " ms\n";
  o << "      level " << detail::num(level) << " reached at " << detail::num(e.percentile(level)) << " ms\n";
  return o.str();
}

// Boxplots ----------------------------------------------------------------------------

using Group = std::pair<std::string, std::vector<double>>;

inline std::string box_svg(const std::vector<Group>& groups, const std::string& title) {
  using namespace detail;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<kpis::BoxStats> stats;
  for (const auto& [name, s] : groups) {
    stats.push_back(kpis::boxplot_stats(s));
    lo = std::min(lo, stats.back().min);
    hi = std::max(hi, stats.back().max);
  }
  Scale sy{lo, hi, kHeight - kBottom, kTop};
  std::string svg = header(title) + axes("", "latency (ms)");
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(1, groups.size()));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& b = stats[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double w = std::min(60.0, slot * 0.5);
    svg += "<line class=\"whisker\" x1=\"" + num(cx) + "\" y1=\"" + num(sy(b.whisker_lo)) + "\" x2=\"" + num(cx) +
           "\" y2=\"" + num(sy(b.whisker_hi)) + "\" stroke=\"black\"/>\n";
    svg += "<rect class=\"box\" x=\"" + num(cx - w / 2) + "\" y=\"" + num(sy(b.q3)) + "\" width=\"" + num(w) +
           "\" height=\"" + num(std::max(0.5, sy(b.q1) - sy(b.q3))) +
           "\" fill=\"lightsteelblue\" stroke=\"black\"/>\n";
    svg += "<line class=\"median\" x1=\"" + num(cx - w / 2) + "\" y1=\"" + num(sy(b.median)) + "\" x2=\"" +
           num(cx + w / 2) + "\" y2=\"" + num(sy(b.median)) + "\" stroke=\"firebrick\" stroke-width=\"2\"/>\n";
    for (double o : b.outliers) {
      svg += "<circle class=\"outlier\" cx=\"" + num(cx) + "\" cy=\"" + num(sy(o)) +
             "\" r=\"2\" fill=\"none\" stroke=\"gray\"/>\n";
    }
    svg += tick_label(cx, kHeight - kBottom + 14, groups[i].first);
  }
  svg += tick_label(kLeft - 4, sy(lo) + 4, num(lo), "end");
  svg += tick_label(kLeft - 4, sy(hi) + 4, num(hi), "end");
  return svg + "</svg>\n";
}

inline std::string box_ascii(const std::vector<Group>& groups, int width = 60) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<kpis::BoxStats> stats;
  for (const auto& [name, s] : groups) {
    stats.push_back(kpis::boxplot_stats(s));
    lo = std::min(lo, stats.back().min);
    hi = std::max(hi, stats.back().max);
  }
  auto col = [&](double v) {
    return hi > lo ? static_cast<std::size_t>(std::lround((v - lo) / (hi - lo) * (width - 1))) : 0;
  };
  std::size_t label_w = 0;
  for (const auto& g : groups) label_w = std::max(label_w, g.first.size());
  std::ostringstream o;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& b = stats[i];
    std::string line(static_cast<std::size_t>(width), ' ');
    for (auto c = col(b.whisker_lo); c <= col(b.whisker_hi); ++c) line[c] = '-';
    for (auto c = col(b.q1); c <= col(b.q3); ++c) line[c] = '=';
    line[col(b.whisker_lo)] = '|';
    line[col(b.whisker_hi)] = '|';
    line[col(b.median)] = 'M';
    for (double x : b.outliers) line[col(x)] = 'o';
    o << groups[i].first << std::string(label_w - groups[i].first.size(), ' ') << " " << line << "  median "
      << detail::num(b.median) << " ms\n";
  }
  o << std::string(label_w + 1, ' ') << detail::num(lo) << " .. " << detail::num(hi) << " ms\n";
  return o.str();
}

// Throughput --------------------------------------------------------------------------

using Bar = std::pair<std::string, double>;

inline std::string throughput_svg(const std::vector<Bar>& bars, const std::vector<double>& caps,
                                  const std::string& title) {
  using namespace detail;
  double hi = 0.0;
  for (const auto& b : bars) hi = std::max(hi, b.second);
  for (double c : caps) hi = std::max(hi, c);
  hi *= 1.1;
  Scale sy{0.0, hi, kHeight - kBottom, kTop};
  std::string svg = header(title) + axes("resolution", "throughput (Mbit/s)");
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(1, bars.size()));
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double w = slot * 0.5;
    svg += "<rect class=\"bar\" data-mbps=\"" + ndjson::format_double(bars[i].second) + "\" x=\"" + num(cx - w / 2) +
           "\" y=\"" + num(sy(bars[i].second)) + "\" width=\"" + num(w) + "\" height=\"" +
           num(sy(0.0) - sy(bars[i].second)) + "\" fill=\"steelblue\"/>\n";
    svg += tick_label(cx, kHeight - kBottom + 14, bars[i].first);
    svg += tick_label(cx, sy(bars[i].second) - 4, num(bars[i].second));
  }
  for (double c : caps) {
    svg += "<line class=\"cap\" data-cap=\"" + ndjson::format_double(c) + "\" x1=\"" + num(kLeft) + "\" y1=\"" +
           num(sy(c)) + "\" x2=\"" + num(kWidth - kRight) + "\" y2=\"" + num(sy(c)) +
           "\" stroke=\"firebrick\" stroke-dasharray=\"6 3\"/>\n";
    svg += tick_label(kWidth - kRight, sy(c) - 4, "cap " + num(c) + " Mbit/s", "end");
  }
  return svg + "</svg>\n";
}

inline std::string throughput_ascii(const std::vector<Bar>& bars, const std::vector<double>& caps, int width = 60) {
  double hi = 0.0;
  for (const auto& b : bars) hi = std::max(hi, b.second);
  for (double c : caps) hi = std::max(hi, c);
  auto col = [&](double v) { return static_cast<std::size_t>(std::lround(v / hi * (width - 1))); };
  std::size_t label_w = 0;
  for (const auto& b : bars) label_w = std::max(label_w, b.first.size());
  std::ostringstream o;
  for (const auto& [name, v] : bars) {
    std::string line(static_cast<std::size_t>(width), ' ');
    for (std::size_t c = 0; c < col(v); ++c) line[c] = '#';
    for (double cap : caps) line[col(cap)] = '|';
    o << name << std::string(label_w - name.size(), ' ') << " " << line << " " << detail::num(v) << " Mbit/s\n";
  }
  for (double cap : caps) o << "| cap at " << detail::num(cap) << " Mbit/s\n";
  return o.str();
}

/// Demand bars for every resolution of one encoder at the given frame rate,
/// using the default frame-size model.
inline std::vector<Bar> default_demand_bars(Encoder enc = Encoder::MJPEG, double fps = 20.0) {
  std::vector<Bar> bars;
  for (Resolution r : {Resolution::VGA, Resolution::D1, Resolution::HD}) {
    auto v = VideoConfig::defaults(enc, r);
    v.fps = fps;
    bars.push_back({std::string(to_string(r)) + " " + std::string(to_string(enc)), kpis::demanded_throughput(v).mbps});
  }
  return bars;
}

}  // namespace edgelat::plot
