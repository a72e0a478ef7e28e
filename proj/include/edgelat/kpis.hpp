#pragma once

// KPI suite: distributions, availability, reliability, clock-error
// propagation, end-to-end service response time, velocity bounds and
// throughput demand, plus the report that gathers them per scenario.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgelat/analyzer.hpp"
#include "edgelat/model.hpp"

namespace edgelat::kpis {

// Empirical CDF ---------------------------------------------------------------

class Ecdf {
 public:
  explicit Ecdf(std::span<const double> samples) {
    if (samples.empty()) throw InsufficientData("ECDF of an empty sample set");
    sorted_.assign(samples.begin(), samples.end());
    std::sort(sorted_.begin(), sorted_.end());
    const double n = static_cast<double>(sorted_.size());
    for (std::size_t i = 0; i < sorted_.size(); ++i) {
      if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) continue;
      values_.push_back(sorted_[i]);
      probs_.push_back(static_cast<double>(i + 1) / n);
    }
  }

  /// Distinct sample values, ascending, and the cumulative probability at each.
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& probabilities() const { return probs_; }
  std::size_t size() const { return sorted_.size(); }

  /// Smallest sample whose cumulative probability is at least p: the
  /// ceil(p * n)-th order statistic.
  double percentile(double p) const {
    if (!(p > 0.0 && p <= 1.0)) throw ValidationError("percentile level must be in (0,1]");
    const double n = static_cast<double>(sorted_.size());
    auto k = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    k = std::clamp<std::size_t>(k, 1, sorted_.size());
    return sorted_[k - 1];
  }

  double cdf(double x) const {
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  double min() const { return sorted_.front(); }
  double max() const { return sorted_.back(); }

 private:
  std::vector<double> sorted_;
  std::vector<double> values_;
  std::vector<double> probs_;
};

inline Ecdf ecdf(std::span<const double> samples) { return Ecdf(samples); }

// Boxplot ---------------------------------------------------------------------

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_lo = 0, whisker_hi = 0;
  std::vector<double> outliers;
};

/// Linear-interpolated quantile on sorted data (position p * (n - 1)).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Tukey boxplot: whiskers reach the most extreme points within 1.5 IQR of
/// the quartiles; everything beyond is an outlier.
inline BoxStats boxplot_stats(std::span<const double> samples) {
  if (samples.empty()) throw InsufficientData("boxplot of an empty sample set");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  BoxStats b;
  b.min = s.front();
  b.max = s.back();
  b.q1 = quantile_sorted(s, 0.25);
  b.median = quantile_sorted(s, 0.5);
  b.q3 = quantile_sorted(s, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_lo = b.q1;
  b.whisker_hi = b.q3;
  for (double x : s) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
    } else {
      b.whisker_lo = std::min(b.whisker_lo, x);
      b.whisker_hi = std::max(b.whisker_hi, x);
    }
  }
  return b;
}

inline double mean(std::span<const double> samples) {
  if (samples.empty()) throw InsufficientData("mean of an empty sample set");
  double sum = 0.0;
  for (double x : samples) sum += x;
  return sum / static_cast<double>(samples.size());
}

// Availability and reliability ------------------------------------------------

inline double availability(std::size_t sent, std::size_t delivered) {
  if (sent == 0) throw ValidationError("availability needs at least one sent packet");
  if (delivered > sent) throw ValidationError("delivered count exceeds sent count");
  return 100.0 * static_cast<double>(delivered) / static_cast<double>(sent);
}

/// Fraction of samples at or below the service bound.
inline double reliability(std::span<const double> samples, double bound_ms) {
  if (samples.empty()) throw InsufficientData("reliability of an empty sample set");
  auto within = std::count_if(samples.begin(), samples.end(), [bound_ms](double x) { return x <= bound_ms; });
  return static_cast<double>(within) / static_cast<double>(samples.size());
}

inline double latency_at(std::span<const double> samples, double p) { return Ecdf(samples).percentile(p); }

// Clock error -----------------------------------------------------------------

struct PropagatedError {
  double quadrature_ms = 0.0;  // sqrt(sa^2 + sb^2 + sc^2)
  double linear_sum_ms = 0.0;  // sa + sb + sc
};

inline PropagatedError propagate_error(double sigma_a, double sigma_b, double sigma_c) {
  for (double s : {sigma_a, sigma_b, sigma_c}) {
    if (!(s >= 0.0)) throw ValidationError("standard deviations must be >= 0");
  }
  return {std::sqrt(sigma_a * sigma_a + sigma_b * sigma_b + sigma_c * sigma_c), sigma_a + sigma_b + sigma_c};
}

// Service response time and velocity --------------------------------------------

/// Uplink frame OWD + processing time + downlink response OWD.
inline double e2e_srt(double owd_up_ms, double tau_ms, double owd_down_ms) {
  if (owd_up_ms < 0.0 || tau_ms < 0.0 || owd_down_ms < 0.0)
    throw ValidationError("service response time components must be >= 0");
  return owd_up_ms + tau_ms + owd_down_ms;
}

/// Highest speed (km/h) at which a vehicle covers at most `distance_m` during
/// one service response time.
inline double velocity_kmh(double distance_m, double e2e_srt_ms) {
  if (!(e2e_srt_ms > 0.0)) throw ValidationError("service response time must be > 0");
  if (distance_m < 0.0) throw ValidationError("distance must be >= 0");
  return distance_m / (e2e_srt_ms / 1000.0) * 3.6;
}

// Throughput demand -------------------------------------------------------------

enum class CapVerdict : std::uint8_t { FITS, EXCEEDS };

constexpr std::string_view to_string(CapVerdict v) { return v == CapVerdict::FITS ? "FITS" : "EXCEEDS"; }

struct CapCheck {
  double cap_mbps = 0.0;
  CapVerdict verdict = CapVerdict::FITS;
};

struct ThroughputDemand {
  double mbps = 0.0;
  std::vector<CapCheck> caps;
};

inline constexpr std::array<double, 2> kDefaultCaps{kFiveGCapMbps, kFourGCapMbps};

inline ThroughputDemand demanded_throughput(const VideoConfig& cfg, std::span<const double> caps = kDefaultCaps) {
  cfg.validate();
  ThroughputDemand d;
  d.mbps = cfg.mean_frame_bytes * 8.0 * cfg.fps / 1e6;
  for (double cap : caps) d.caps.push_back({cap, d.mbps > cap ? CapVerdict::EXCEEDS : CapVerdict::FITS});
  return d;
}

inline double improvement_pct(double baseline_ms, double value_ms) {
  if (!(baseline_ms > 0.0)) throw ValidationError("baseline must be > 0");
  return 100.0 * (baseline_ms - value_ms) / baseline_ms;
}

// Report ------------------------------------------------------------------------

enum class TrafficClass : std::uint8_t { CTRL, STREAM_PACKET, STREAM_FRAME };
inline constexpr std::array<TrafficClass, 3> kAllClasses{TrafficClass::CTRL, TrafficClass::STREAM_PACKET,
                                                         TrafficClass::STREAM_FRAME};

constexpr std::string_view to_string(TrafficClass c) {
  return c == TrafficClass::CTRL ? "CTRL" : c == TrafficClass::STREAM_PACKET ? "STREAM_PACKET" : "STREAM_FRAME";
}

struct Distribution {
  std::vector<double> samples_ms;
  Ecdf ecdf;
  BoxStats box;
  double mean_ms = 0.0;

  explicit Distribution(std::vector<double> samples)
      : samples_ms(std::move(samples)), ecdf(samples_ms), box(boxplot_stats(samples_ms)), mean_ms(mean(samples_ms)) {}
};

struct ClassKpis {
  Distribution latency;
  std::vector<double> srtt_ms;
};

struct OwdKpis {
  Distribution owd;
  double sigma_q_ms = 0.0;  // propagated clock error attached to the mean
};

struct ReliabilityKpis {
  double bound_ms = 0.0;
  double fraction_within = 0.0;
  double level = 0.95;
  double latency_at_level_ms = 0.0;
};

struct ReportConfig {
  std::string scenario = "custom";
  std::optional<Tech> tech;
  std::optional<Range> range;
  double tau_ms = 20.3;
  double owd_rd_ms = 5.0;  // assumed downlink response OWD
  double distance_m = 1.0;
  double reliability_bound_ms = 100.0;
  double reliability_level = 0.95;
  std::optional<VideoConfig> video;  // configured video; falls back to the capture estimate
  std::vector<double> caps{kDefaultCaps.begin(), kDefaultCaps.end()};
};

struct KpiReport {
  ReportConfig config;
  std::array<std::optional<ClassKpis>, 3> classes;
  std::optional<OwdKpis> owd_packet_up;
  std::optional<OwdKpis> owd_frame_up;
  std::optional<OwdKpis> owd_command_down;
  analyzer::OffsetEstimate offsets;
  PropagatedError clock_error;
  std::optional<double> availability_pct;
  std::size_t sent = 0;
  std::size_t delivered = 0;
  std::optional<ReliabilityKpis> reliability;
  std::optional<double> e2e_srt_mean_ms;      // mean frame OWD, assumed response OWD
  std::optional<double> e2e_srt_p95_ms;       // frame OWD at the reliability level
  std::optional<double> e2e_srt_measured_ms;  // mean frame OWD, measured response OWD
  std::optional<double> velocity_kmh;
  std::optional<ThroughputDemand> demand;
  std::optional<double> bulk_goodput_mbps;
  std::size_t frame_count = 0;
  std::size_t ctrl_unmatched = 0;
  std::size_t stream_uncovered = 0;
  std::size_t stream_retransmitted = 0;
  std::size_t frames_excluded = 0;

  const std::optional<ClassKpis>& of(TrafficClass c) const { return classes[static_cast<std::size_t>(c)]; }
};

namespace detail {

inline std::optional<ClassKpis> class_kpis(const std::vector<double>& samples, double alpha) {
  if (samples.empty()) return std::nullopt;
  ClassKpis k{Distribution(samples), analyzer::srtt(samples, alpha)};
  return k;
}

inline std::optional<OwdKpis> owd_kpis(const std::vector<double>& samples, double sigma_q) {
  if (samples.empty()) return std::nullopt;
  return OwdKpis{Distribution(samples), sigma_q};
}

}  // namespace detail

/// Populates every report field that has data; absent classes stay empty.
inline KpiReport build_report(const analyzer::Analysis& a, const ReportConfig& cfg) {
  KpiReport r;
  r.config = cfg;
  const double alpha = a.config.alpha;
  r.classes[0] = detail::class_kpis(analyzer::values(a.control_rtt.samples), alpha);
  r.classes[1] = detail::class_kpis(analyzer::values(a.stream_rtt.samples), alpha);
  r.classes[2] = detail::class_kpis(analyzer::values(a.frame_latency.samples), alpha);

  r.offsets = a.offsets;
  r.clock_error =
      propagate_error(a.offsets.sigma(Tap::UE), a.offsets.sigma(Tap::CORE), a.offsets.sigma(Tap::APP));
  const double sigma_q = r.clock_error.quadrature_ms;
  r.owd_packet_up = detail::owd_kpis(analyzer::values(a.owd_up.samples), sigma_q);
  r.owd_frame_up = detail::owd_kpis(analyzer::values(a.frame_owd.samples), sigma_q);
  r.owd_command_down = detail::owd_kpis(analyzer::values(a.owd_command_down.samples), sigma_q);

  r.sent = a.delivery.sent;
  r.delivered = a.delivery.delivered;
  if (a.delivery.sent > 0) r.availability_pct = availability(a.delivery.sent, a.delivery.delivered);

  if (r.owd_frame_up) {
    const auto& owd = r.owd_frame_up->owd;
    ReliabilityKpis rel;
    rel.bound_ms = cfg.reliability_bound_ms;
    rel.level = cfg.reliability_level;
    rel.fraction_within = reliability(owd.samples_ms, cfg.reliability_bound_ms);
    rel.latency_at_level_ms = owd.ecdf.percentile(cfg.reliability_level);
    r.reliability = rel;
    r.e2e_srt_mean_ms = e2e_srt(std::max(0.0, owd.mean_ms), cfg.tau_ms, cfg.owd_rd_ms);
    r.e2e_srt_p95_ms = e2e_srt(std::max(0.0, rel.latency_at_level_ms), cfg.tau_ms, cfg.owd_rd_ms);
    r.velocity_kmh = velocity_kmh(cfg.distance_m, *r.e2e_srt_p95_ms);
    if (r.owd_command_down)
      r.e2e_srt_measured_ms =
          e2e_srt(std::max(0.0, owd.mean_ms), cfg.tau_ms, std::max(0.0, r.owd_command_down->owd.mean_ms));
  }

  if (cfg.video) {
    r.demand = demanded_throughput(*cfg.video, cfg.caps);
  } else if (a.video_estimate) {
    r.demand = demanded_throughput(*a.video_estimate, cfg.caps);
  }
  r.bulk_goodput_mbps = a.bulk_goodput_mbps;
  r.frame_count = a.frame_latency.samples.size();
  r.ctrl_unmatched = a.control_rtt.unmatched;
  r.stream_uncovered = a.stream_rtt.unmatched;
  r.stream_retransmitted = a.stream_rtt.retransmitted;
  r.frames_excluded = a.frame_latency.excluded;
  return r;
}

}  // namespace edgelat::kpis
