#pragma once

// Domain types shared by the emulator, the analyzer and the KPI engine.
//
// Timestamps are integer microseconds. Durations that come from configuration
// (delays, jitter, clock offsets) are milliseconds as double, because that is
// the unit every operator reasons in.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace edgelat {

using TimeUs = std::int64_t;
using Pid = std::uint64_t;

// Error hierarchy -------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& msg, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct InsufficientData : Error {
  using Error::Error;
};

struct MalformedCapture : Error {
  using Error::Error;
};

// Enums and their canonical spellings -----------------------------------------

enum class Tap : std::uint8_t { UE, CORE, APP };
enum class Direction : std::uint8_t { UPLINK, DOWNLINK };
enum class Proto : std::uint8_t { CTRL, STREAM };
enum class Marker : std::uint8_t { NONE, FRAME_BOUNDARY };
enum class Tech : std::uint8_t { FOUR_G, FIVE_G };
enum class Range : std::uint8_t { EDGE, REGIONAL, NATIONAL };
enum class Encoder : std::uint8_t { MJPEG, H264 };
enum class Resolution : std::uint8_t { VGA, D1, HD };

template <typename E>
struct EnumNames;

template <>
struct EnumNames<Tap> {
  static constexpr std::array<std::pair<Tap, std::string_view>, 3> table{
      {{Tap::UE, "UE"}, {Tap::CORE, "CORE"}, {Tap::APP, "APP"}}};
};
template <>
struct EnumNames<Direction> {
  static constexpr std::array<std::pair<Direction, std::string_view>, 2> table{
      {{Direction::UPLINK, "UPLINK"}, {Direction::DOWNLINK, "DOWNLINK"}}};
};
template <>
struct EnumNames<Proto> {
  static constexpr std::array<std::pair<Proto, std::string_view>, 2> table{
      {{Proto::CTRL, "CTRL"}, {Proto::STREAM, "STREAM"}}};
};
template <>
struct EnumNames<Marker> {
  static constexpr std::array<std::pair<Marker, std::string_view>, 2> table{
      {{Marker::NONE, "NONE"}, {Marker::FRAME_BOUNDARY, "FRAME_BOUNDARY"}}};
};
template <>
struct EnumNames<Tech> {
  static constexpr std::array<std::pair<Tech, std::string_view>, 2> table{
      {{Tech::FOUR_G, "FOUR_G"}, {Tech::FIVE_G, "FIVE_G"}}};
};
template <>
struct EnumNames<Range> {
  static constexpr std::array<std::pair<Range, std::string_view>, 3> table{
      {{Range::EDGE, "EDGE"},
       {Range::REGIONAL, "REGIONAL"},
       {Range::NATIONAL, "NATIONAL"}}};
};
template <>
struct EnumNames<Encoder> {
  static constexpr std::array<std::pair<Encoder, std::string_view>, 2> table{
      {{Encoder::MJPEG, "MJPEG"}, {Encoder::H264, "H264"}}};
};
template <>
struct EnumNames<Resolution> {
  static constexpr std::array<std::pair<Resolution, std::string_view>, 3> table{
      {{Resolution::VGA, "VGA"}, {Resolution::D1, "D1"}, {Resolution::HD, "HD"}}};
};

template <typename E>
constexpr std::string_view to_string(E value) {
  for (const auto& [v, name] : EnumNames<E>::table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename E>
std::optional<E> parse_enum(std::string_view text) {
  for (const auto& [v, name] : EnumNames<E>::table) {
    if (name == text) return v;
  }
  return std::nullopt;
}

constexpr std::size_t index_of(Tap tap) { return static_cast<std::size_t>(tap); }
constexpr std::array<Tap, 3> kAllTaps{Tap::UE, Tap::CORE, Tap::APP};

// Fixed flow ids used by the emulator's traffic generators.
namespace flows {
inline constexpr std::uint32_t kControl = 1;
inline constexpr std::uint32_t kVideo = 2;
inline constexpr std::uint32_t kCommand = 3;
inline constexpr std::uint32_t kBulk = 4;
}  // namespace flows

// A control reply carries its request's pid with this bit set, so the pair can
// be matched at the UE tap without a payload.
inline constexpr Pid kReplyTag = Pid{1} << 48;
constexpr bool is_reply_pid(Pid pid) { return (pid & kReplyTag) != 0; }
constexpr Pid request_pid_of(Pid reply) { return reply & ~kReplyTag; }
constexpr Pid reply_pid_for(Pid request) { return request | kReplyTag; }

// CaptureRecord ---------------------------------------------------------------

/// One timestamped packet observation at one tap.
struct CaptureRecord {
  Tap tap = Tap::UE;
  TimeUs t_us = 0;  // tap-local clock
  std::uint32_t flow = 0;
  Direction dir = Direction::UPLINK;
  Proto proto = Proto::CTRL;
  std::uint64_t seq = 0;  // first payload byte offset, STREAM only
  std::uint64_t ack = 0;  // cumulative ack, 0 if not an ack
  std::int64_t len = 0;   // payload bytes
  Marker marker = Marker::NONE;
  Pid pid = 0;

  bool is_data() const { return proto == Proto::STREAM && len > 0; }
  bool is_ack() const { return proto == Proto::STREAM && ack > 0 && len == 0; }
  std::uint64_t end() const { return seq + static_cast<std::uint64_t>(std::max<std::int64_t>(len, 0)); }

  friend bool operator==(const CaptureRecord&, const CaptureRecord&) = default;
};

constexpr Tap origin_tap(Direction dir) {
  return dir == Direction::UPLINK ? Tap::UE : Tap::APP;
}

struct ValidationResult {
  bool ok = true;
  std::size_t index = 0;  // index of the first offending record
  std::string message;

  explicit operator bool() const { return ok; }
};

/// Checks the per-tap record invariants: unique pid per tap, non-negative
/// payload, boundary markers carry payload, and no seq regression at the
/// origin tap. A segment re-emitted at a seq that was already emitted counts as
/// a retransmission, not a regression.
inline ValidationResult validate(const std::vector<CaptureRecord>& records) {
  std::array<std::set<Pid>, 3> seen_pids;
  using FlowKey = std::pair<std::uint32_t, Direction>;
  std::map<FlowKey, std::uint64_t> max_seq;
  std::map<FlowKey, std::set<std::uint64_t>> emitted;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto fail = [&](std::string msg) {
      return ValidationResult{false, i, "record " + std::to_string(i) + ": " + std::move(msg)};
    };
    if (r.len < 0) return fail("negative payload length " + std::to_string(r.len));
    if (r.marker == Marker::FRAME_BOUNDARY && r.len == 0)
      return fail("frame boundary marker without payload");
    if (!seen_pids[index_of(r.tap)].insert(r.pid).second)
      return fail("duplicate pid " + std::to_string(r.pid) + " at tap " +
                  std::string(to_string(r.tap)));
    if (r.is_data() && r.tap == origin_tap(r.dir)) {
      FlowKey key{r.flow, r.dir};
      auto& prev = emitted[key];
      auto it = max_seq.find(key);
      if (it != max_seq.end() && r.seq < it->second && !prev.count(r.seq))
        return fail("seq regression on flow " + std::to_string(r.flow) + ": " +
                    std::to_string(r.seq) + " after " + std::to_string(it->second));
      prev.insert(r.seq);
      max_seq[key] = std::max(it == max_seq.end() ? std::uint64_t{0} : it->second, r.seq);
    }
  }
  return {};
}

// ClockModel ------------------------------------------------------------------

/// Per-node clock offset and offset-estimation noise, indexed by Tap.
struct ClockModel {
  std::array<double, 3> offset_ms{0.0, 0.0, 0.0};
  std::array<double, 3> sigma_ms{0.387, 0.317, 0.117};
  double resync_interval_s = 10.0;

  static ClockModel perfect() {
    ClockModel c;
    c.sigma_ms = {0.0, 0.0, 0.0};
    return c;
  }

  void validate() const {
    static constexpr const char* kSigmaKeys[] = {"sigma_a", "sigma_b", "sigma_c"};
    for (std::size_t i = 0; i < sigma_ms.size(); ++i) {
      if (!(sigma_ms[i] >= 0.0) || !std::isfinite(sigma_ms[i]))
        throw ValidationError(std::string(kSigmaKeys[i]) + " must be >= 0");
    }
    for (double o : offset_ms) {
      if (!std::isfinite(o)) throw ValidationError("clock offset must be finite");
    }
    if (!(resync_interval_s > 0.0)) throw ValidationError("resync_interval must be > 0");
  }
};

// Scenario --------------------------------------------------------------------

inline constexpr double kFiveGCapMbps = 54.6;
inline constexpr double kFourGCapMbps = 32.2;
inline constexpr double kUncapped = std::numeric_limits<double>::infinity();

/// One-way delay added on the core interface for a given range.
constexpr double added_owd_ms(Range range) {
  switch (range) {
    case Range::EDGE: return 0.0;
    case Range::REGIONAL: return 2.0;
    case Range::NATIONAL: return 4.0;
  }
  return 0.0;
}

struct Scenario {
  Tech tech = Tech::FIVE_G;
  Range range = Range::EDGE;
  double base_owd_up_ms = 8.0;
  double base_owd_down_ms = 4.0;
  double jitter_std_ms = 0.0;
  double loss_prob = 0.0;
  double bandwidth_cap_mbps = kFiveGCapMbps;  // infinity disables the cap
  bool retransmit = false;

  /// Scenario with the technology's default access latencies and cap.
  static Scenario make(Tech tech, Range range) {
    Scenario s;
    s.tech = tech;
    s.range = range;
    if (tech == Tech::FIVE_G) {
      s.base_owd_up_ms = 8.0;
      s.base_owd_down_ms = 4.0;
      s.bandwidth_cap_mbps = kFiveGCapMbps;
    } else {
      s.base_owd_up_ms = 20.0;
      s.base_owd_down_ms = 10.0;
      s.bandwidth_cap_mbps = kFourGCapMbps;
    }
    s.validate();
    return s;
  }

  double added_owd() const { return added_owd_ms(range); }

  std::string label() const {
    std::string t = tech == Tech::FIVE_G ? "5G" : "4G";
    std::string r = range == Range::EDGE       ? "Edge"
                    : range == Range::REGIONAL ? "Regional"
                                               : "National";
    return t + " " + r;
  }

  void validate() const {
    if (range == Range::EDGE && tech != Tech::FIVE_G)
      throw ValidationError("unsupported scenario: EDGE range requires FIVE_G");
    if (!(base_owd_up_ms >= 0.0) || !(base_owd_down_ms >= 0.0))
      throw ValidationError("base_owd_up and base_owd_down must be >= 0");
    if (!(jitter_std_ms >= 0.0)) throw ValidationError("jitter_std must be >= 0");
    if (!(loss_prob >= 0.0 && loss_prob <= 1.0))
      throw ValidationError("loss_prob must be in [0,1]");
    if (!(bandwidth_cap_mbps > 0.0)) throw ValidationError("bandwidth_cap must be > 0");
  }
};

// VideoConfig -----------------------------------------------------------------

constexpr std::pair<int, int> pixels(Resolution r) {
  switch (r) {
    case Resolution::VGA: return {640, 480};
    case Resolution::D1: return {720, 576};
    case Resolution::HD: return {1280, 720};
  }
  return {0, 0};
}

/// Default mean frame size in bytes. H264 frames are a quarter of MJPEG.
constexpr double default_frame_bytes(Encoder enc, Resolution res) {
  double mjpeg = res == Resolution::VGA ? 120000.0 : res == Resolution::D1 ? 220000.0 : 340000.0;
  return enc == Encoder::MJPEG ? mjpeg : mjpeg / 4.0;
}

struct VideoConfig {
  Encoder encoder = Encoder::MJPEG;
  Resolution resolution = Resolution::VGA;
  double fps = 20.0;
  double mean_frame_bytes = default_frame_bytes(Encoder::MJPEG, Resolution::VGA);
  double frame_size_cv = 0.1;

  static VideoConfig defaults(Encoder enc, Resolution res) {
    VideoConfig v;
    v.encoder = enc;
    v.resolution = res;
    v.mean_frame_bytes = default_frame_bytes(enc, res);
    return v;
  }

  void validate() const {
    if (!(fps > 0.0)) throw ValidationError("fps must be > 0");
    if (!(mean_frame_bytes > 0.0)) throw ValidationError("mean_frame_bytes must be > 0");
    if (!(frame_size_cv >= 0.0)) throw ValidationError("frame_size_cv must be >= 0");
  }
};

// ProcessingModel -------------------------------------------------------------

/// Application processing time per frame, split into blob transform,
/// detection, interpretation and command creation.
class ProcessingModel {
 public:
  static constexpr std::array<double, 4> kDefaultFractions{0.25, 0.60, 0.10, 0.05};

  ProcessingModel() : ProcessingModel(20.3, kDefaultFractions, 64) {}

  ProcessingModel(double tau_total_ms, std::array<double, 4> stage_fractions,
                  std::int64_t response_bytes)
      : tau_total_ms_(tau_total_ms),
        fractions_(stage_fractions),
        response_bytes_(response_bytes) {
    if (!(tau_total_ms >= 0.0) || !std::isfinite(tau_total_ms))
      throw ValidationError("tau_total must be >= 0");
    double sum = 0.0;
    for (double f : stage_fractions) {
      if (!(f >= 0.0)) throw ValidationError("stage fractions must be non-negative");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("stage fractions must sum to 1 (got " + std::to_string(sum) + ")");
    if (response_bytes <= 0) throw ValidationError("response_bytes must be > 0");
  }

  double tau_total_ms() const { return tau_total_ms_; }
  const std::array<double, 4>& stage_fractions() const { return fractions_; }
  double stage_ms(std::size_t stage) const { return tau_total_ms_ * fractions_.at(stage); }
  std::int64_t response_bytes() const { return response_bytes_; }

  friend bool operator==(const ProcessingModel&, const ProcessingModel&) = default;

 private:
  double tau_total_ms_;
  std::array<double, 4> fractions_;
  std::int64_t response_bytes_;
};

// FrameObservation ------------------------------------------------------------

/// One video frame's timing across the UE and APP taps, clock-corrected.
struct FrameObservation {
  std::size_t frame_idx = 0;
  std::uint64_t byte_len = 0;
  double t_first_ue = 0.0;
  double t_last_ue = 0.0;
  std::optional<double> t_ack_ue;
  std::optional<double> t_first_app;
  std::optional<double> t_last_app;
  bool complete = false;
};

// NtpSample -------------------------------------------------------------------

/// One clock-offset measurement of one node, taken at a resync instant.
struct NtpSample {
  Tap node = Tap::UE;
  TimeUs t_us = 0;  // true time of the measurement
  double offset_ms = 0.0;

  friend bool operator==(const NtpSample&, const NtpSample&) = default;
};

/// The three tap streams plus the clock-offset trace observed during a run.
struct CaptureSet {
  std::vector<CaptureRecord> ue;
  std::vector<CaptureRecord> core;
  std::vector<CaptureRecord> app;
  std::vector<NtpSample> ntp;

  const std::vector<CaptureRecord>& at(Tap tap) const {
    return tap == Tap::UE ? ue : tap == Tap::CORE ? core : app;
  }
  std::vector<CaptureRecord>& at(Tap tap) {
    return tap == Tap::UE ? ue : tap == Tap::CORE ? core : app;
  }
};

// Helpers ---------------------------------------------------------------------

inline TimeUs ms_to_us(double ms) { return static_cast<TimeUs>(std::llround(ms * 1000.0)); }
constexpr double us_to_ms(double us) { return us / 1000.0; }

}  // namespace edgelat
