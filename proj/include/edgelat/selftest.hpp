#pragma once

// Built-in oracle battery run by `edgelat selftest`.

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edgelat/analyzer.hpp"
#include "edgelat/emulator.hpp"
#include "edgelat/kpis.hpp"

namespace edgelat::selftest {

struct OracleResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Options {
  double srtt_alpha = 0.125;  // alpha handed to srtt(); the frozen series assumes 1/8
  std::uint64_t seed = 7;
};

inline constexpr std::array<double, 10> kSrttFixture{10, 20, 20, 40, 10, 10, 10, 10, 10, 10};

// Smoothed series for kSrttFixture at alpha = 1/8, evaluated by hand as exact
// dyadic fractions (45/4, 395/32, 4045/256, ...).
inline constexpr std::array<double, 10> kSrttExpected{10.0,
                                                      11.25,
                                                      12.34375,
                                                      15.80078125,
                                                      15.07568359375,
                                                      14.44122314453125,
                                                      13.886070251464844,
                                                      13.400311470031738,
                                                      12.975272536277771,
                                                      12.60336346924305};

inline constexpr std::array<double, 5> kTableSrtMs{89.31, 91.30, 95.49, 102.30, 104.32};
inline constexpr std::array<double, 5> kTableVelocity{40.31, 39.43, 37.70, 35.19, 34.51};

namespace detail {

inline std::string fmt(double v, int prec = 6) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

inline EmulationRun delay_run(const ClockModel& clocks, int pings) {
  EmulationRun run;
  run.scenario = Scenario::make(Tech::FIVE_G, Range::EDGE);
  run.scenario.base_owd_up_ms = 10.0;
  run.scenario.base_owd_down_ms = 5.0;
  run.scenario.jitter_std_ms = 0.0;
  run.scenario.loss_prob = 0.0;
  run.scenario.bandwidth_cap_mbps = kUncapped;
  run.clocks = clocks;
  run.workload.pings.count = pings;
  run.workload.pings.interval_ms = 20.0;
  return run;
}

}  // namespace detail

inline OracleResult delay_recovery_exact(std::uint64_t seed) {
  auto run = detail::delay_run(ClockModel::perfect(), 200);
  run.seed = seed;
  auto emu = edgelat::run(run);
  auto a = analyzer::analyze(emu.captures);
  double worst = 0.0;
  for (const auto& s : a.control_rtt.samples) worst = std::max(worst, std::abs(s.value_ms - 15.0));
  for (const auto& s : a.owd_up.samples) {
    worst = std::max(worst, std::abs(s.value_ms - 10.0));
    const auto* t = emu.truth.find(s.pid);
    if (!t || !t->one_way_us()) return {"delay-recovery", false, "OWD sample without truth for pid " + std::to_string(s.pid)};
    worst = std::max(worst, std::abs(s.value_ms - static_cast<double>(*t->one_way_us()) / 1000.0));
  }
  const bool counts = a.control_rtt.samples.size() == 200 && a.owd_up.samples.size() == 200;
  return {"delay-recovery", counts && worst <= 0.001,
          "rtt=" + std::to_string(a.control_rtt.samples.size()) + " owd=" + std::to_string(a.owd_up.samples.size()) +
              " samples, max deviation " + detail::fmt(worst * 1000.0) + " us"};
}

inline OracleResult delay_recovery_noisy(std::uint64_t seed) {
  auto run = detail::delay_run(ClockModel{}, 1000);
  run.seed = seed;
  auto emu = edgelat::run(run);
  auto a = analyzer::analyze(emu.captures);
  auto v = analyzer::values(a.owd_up.samples);
  const double m = kpis::mean(v);
  const double bound = 3.0 * kpis::propagate_error(0.387, 0.317, 0.117).quadrature_ms;
  return {"delay-recovery-noisy-clocks", v.size() >= 1000 && std::abs(m - 10.0) <= bound,
          "mean OWD " + detail::fmt(m) + " ms over " + std::to_string(v.size()) + " packets, bound " +
              detail::fmt(bound)};
}

inline OracleResult srtt_recurrence(double alpha) {
  auto got = analyzer::srtt(kSrttFixture, alpha);
  double worst = got.size() == kSrttExpected.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(got.size(), kSrttExpected.size()); ++i)
    worst = std::max(worst, std::abs(got[i] - kSrttExpected[i]));
  return {"srtt-recurrence", worst <= 1e-9, "alpha " + detail::fmt(alpha) + ", max error " + detail::fmt(worst)};
}

inline OracleResult percentile_order_statistic(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(1, 400);
  std::lognormal_distribution<double> value(3.0, 0.5);
  int bad = 0;
  for (int set = 0; set < 50; ++set) {
    std::vector<double> v(static_cast<std::size_t>(size(rng)));
    for (auto& x : v) x = value(rng);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size()) - 1e-9));
    if (kpis::latency_at(v, 0.95) != sorted[k - 1]) ++bad;
  }
  return {"percentile-order-statistic", bad == 0, std::to_string(bad) + " of 50 sets mismatched"};
}

inline OracleResult error_propagation() {
  auto e = kpis::propagate_error(0.387, 0.317, 0.117);
  const double hand = std::sqrt(0.149769 + 0.100489 + 0.013689);
  const bool ok = std::abs(e.quadrature_ms - hand) <= 1e-12 && std::abs(e.quadrature_ms - 0.5138) <= 0.0005 &&
                  std::abs(e.linear_sum_ms - 0.821) <= 1e-12;
  return {"error-propagation", ok,
          "quadrature " + detail::fmt(e.quadrature_ms) + " ms, linear sum " + detail::fmt(e.linear_sum_ms) + " ms"};
}

inline OracleResult velocity_round_trip() {
  double worst = 0.0;
  for (std::size_t i = 0; i < kTableSrtMs.size(); ++i)
    worst = std::max(worst, std::abs(kpis::velocity_kmh(1.0, kTableSrtMs[i]) - kTableVelocity[i]));
  return {"velocity-round-trip", worst <= 0.01, "max deviation " + detail::fmt(worst) + " km/h"};
}

inline std::vector<OracleResult> run_all(const Options& opts = {}) {
  return {
      delay_recovery_exact(opts.seed),
      delay_recovery_noisy(opts.seed),
      srtt_recurrence(opts.srtt_alpha),
      percentile_order_statistic(opts.seed),
      error_propagation(),
      velocity_round_trip(),
  };
}

inline bool all_pass(const std::vector<OracleResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const OracleResult& r) { return r.pass; });
}

}  // namespace edgelat::selftest
