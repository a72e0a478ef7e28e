#pragma once

// Reconstructs flows from tap captures and extracts raw latency samples:
// control RTT, per-segment TCP RTT, SRTT, clock-corrected OWD and per-frame
// service latency. Everything here is a pure function of capture data; the
// emulator's ground-truth log is never consulted.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgelat/model.hpp"

namespace edgelat::analyzer {

enum class MatchMode : std::uint8_t { BY_PID, BY_SEQ };
enum class FrameEndpoints : std::uint8_t { FIRST_TO_LAST, FIRST_TO_FIRST };

struct AnalyzerConfig {
  double alpha = 0.125;
  MatchMode match = MatchMode::BY_PID;
  FrameEndpoints endpoints = FrameEndpoints::FIRST_TO_LAST;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("SRTT gain alpha must be in (0,1)");
  }
};

/// One latency observation. `idx` is the ordinal within its series (or the
/// frame index for per-frame series).
struct Sample {
  std::size_t idx = 0;
  Pid pid = 0;
  double value_ms = 0.0;
};

inline std::vector<double> values(const std::vector<Sample>& samples) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.value_ms);
  return v;
}

// Reassembly ------------------------------------------------------------------

struct Segment {
  std::uint64_t seq = 0;
  std::int64_t len = 0;
  Marker marker = Marker::NONE;
  Pid pid = 0;
  TimeUs t_us = 0;
  std::size_t pos = 0;  // index of the record in the tap's capture

  std::uint64_t end() const { return seq + static_cast<std::uint64_t>(len); }
};

struct Gap {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  friend bool operator==(const Gap&, const Gap&) = default;
};

struct StreamView {
  std::vector<Segment> segments;  // seq order, duplicates collapsed to their first capture
  std::vector<Gap> gaps;
  std::uint64_t total_bytes = 0;
  std::size_t duplicates = 0;
};

/// Orders one tap's payload-carrying segments of (flow, dir) by seq.
inline StreamView reassemble(const std::vector<CaptureRecord>& records, std::uint32_t flow,
                             Direction dir = Direction::UPLINK) {
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.flow != flow || r.dir != dir || !r.is_data()) continue;
    segs.push_back({r.seq, r.len, r.marker, r.pid, r.t_us, i});
  }
  std::stable_sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.seq < b.seq; });

  StreamView view;
  std::uint64_t covered = 0;
  for (const auto& s : segs) {
    if (!view.segments.empty()) {
      const auto& prev = view.segments.back();
      if (s.seq == prev.seq) {
        if (s.len != prev.len)
          throw MalformedCapture("conflicting segment lengths at seq " + std::to_string(s.seq) + " on flow " +
                                 std::to_string(flow));
        ++view.duplicates;
        continue;
      }
      if (s.seq < prev.end())
        throw MalformedCapture("overlapping segments at seq " + std::to_string(s.seq) + " on flow " +
                               std::to_string(flow));
    }
    if (s.seq > covered) view.gaps.push_back({covered, s.seq});
    covered = s.end();
    view.total_bytes += static_cast<std::uint64_t>(s.len);
    view.segments.push_back(s);
  }
  return view;
}

// Frame segmentation ----------------------------------------------------------

struct FrameExtent {
  std::size_t idx = 0;
  std::uint64_t begin = 0;  // first byte after the opening delimiter
  std::uint64_t end = 0;    // seq of the closing delimiter
  std::vector<std::size_t> segments;  // indices into StreamView::segments
  std::uint64_t data_bytes = 0;
  bool complete = false;
};

struct FrameSegmentation {
  std::vector<FrameExtent> frames;
  std::size_t boundaries = 0;
  std::vector<std::string> warnings;

  std::size_t complete_count() const {
    return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](const auto& f) { return f.complete; }));
  }
};

/// A frame is the run of data segments strictly between two consecutive
/// boundary markers. A trailing group with no closing marker is reported
/// incomplete; a frame with missing bytes is also incomplete.
inline FrameSegmentation segment_frames(const StreamView& view) {
  FrameSegmentation out;
  std::optional<FrameExtent> open;
  for (std::size_t i = 0; i < view.segments.size(); ++i) {
    const auto& s = view.segments[i];
    if (s.marker == Marker::FRAME_BOUNDARY) {
      ++out.boundaries;
      if (open) {
        open->end = s.seq;
        open->complete = open->end >= open->begin && open->data_bytes == open->end - open->begin;
        out.frames.push_back(std::move(*open));
      }
      open = FrameExtent{};
      open->idx = out.frames.size();
      open->begin = s.end();
    } else if (open) {
      open->segments.push_back(i);
      open->data_bytes += static_cast<std::uint64_t>(s.len);
    }
  }
  if (open && !open->segments.empty()) {
    open->end = view.segments[open->segments.back()].end();
    open->complete = false;
    out.frames.push_back(std::move(*open));
  }
  if (out.boundaries == 0) out.warnings.emplace_back("no frame boundary markers found");
  return out;
}

// ACK lookup --------------------------------------------------------------------

namespace detail {

/// Downlink acknowledgments of one flow at the UE tap, in capture order, with
/// a running maximum so "first ACK at or after position p covering byte e"
/// is a binary search.
class AckIndex {
 public:
  AckIndex(const std::vector<CaptureRecord>& ue, std::uint32_t flow) {
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < ue.size(); ++i) {
      const auto& r = ue[i];
      if (r.flow != flow || r.dir != Direction::DOWNLINK || r.ack == 0) continue;
      running = std::max(running, r.ack);
      pos_.push_back(i);
      t_.push_back(r.t_us);
      ack_.push_back(r.ack);
      max_.push_back(running);
    }
  }

  /// Capture time of the first ACK after record position `after` with
  /// ack >= `end`.
  std::optional<TimeUs> first_covering(std::size_t after, std::uint64_t end) const {
    auto j0 = static_cast<std::size_t>(std::upper_bound(pos_.begin(), pos_.end(), after) - pos_.begin());
    if (j0 >= pos_.size()) return std::nullopt;
    if (j0 > 0 && max_[j0 - 1] >= end) {
      for (std::size_t j = j0; j < ack_.size(); ++j) {
        if (ack_[j] >= end) return t_[j];
      }
      return std::nullopt;
    }
    auto it = std::partition_point(max_.begin() + static_cast<std::ptrdiff_t>(j0), max_.end(),
                                   [end](std::uint64_t m) { return m < end; });
    if (it == max_.end()) return std::nullopt;
    return t_[static_cast<std::size_t>(it - max_.begin())];
  }

 private:
  std::vector<std::size_t> pos_;
  std::vector<TimeUs> t_;
  std::vector<std::uint64_t> ack_;
  std::vector<std::uint64_t> max_;
};

}  // namespace detail

// RTT -------------------------------------------------------------------------

struct RttResult {
  std::vector<Sample> samples;
  std::size_t unmatched = 0;      // requests without reply, or segments never covered
  std::size_t retransmitted = 0;  // segments excluded by Karn's rule
};

/// Ping RTT at the UE tap. Both stamps come from the same clock, so no offset
/// correction applies.
inline RttResult rtt_control(const std::vector<CaptureRecord>& ue) {
  std::unordered_map<Pid, TimeUs> replies;
  for (const auto& r : ue) {
    if (r.proto == Proto::CTRL && r.dir == Direction::DOWNLINK && is_reply_pid(r.pid))
      replies.emplace(request_pid_of(r.pid), r.t_us);
  }
  RttResult out;
  for (const auto& r : ue) {
    if (r.proto != Proto::CTRL || r.dir != Direction::UPLINK) continue;
    auto it = replies.find(r.pid);
    if (it == replies.end()) {
      ++out.unmatched;
      continue;
    }
    out.samples.push_back({out.samples.size(), r.pid, us_to_ms(static_cast<double>(it->second - r.t_us))});
  }
  return out;
}

/// Per-segment RTT: time from a data segment to the first later ACK covering
/// its last byte. Segments whose seq was sent more than once are excluded.
inline RttResult rtt_tcp(const std::vector<CaptureRecord>& ue, std::uint32_t flow) {
  std::unordered_map<std::uint64_t, int> copies;
  for (const auto& r : ue) {
    if (r.flow == flow && r.dir == Direction::UPLINK && r.is_data()) ++copies[r.seq];
  }
  detail::AckIndex acks(ue, flow);
  RttResult out;
  for (std::size_t i = 0; i < ue.size(); ++i) {
    const auto& r = ue[i];
    if (r.flow != flow || r.dir != Direction::UPLINK || !r.is_data()) continue;
    if (copies[r.seq] > 1) {
      ++out.retransmitted;
      continue;
    }
    auto t_ack = acks.first_covering(i, r.end());
    if (!t_ack) {
      ++out.unmatched;
      continue;
    }
    out.samples.push_back({out.samples.size(), r.pid, us_to_ms(static_cast<double>(*t_ack - r.t_us))});
  }
  return out;
}

/// Exponentially smoothed RTT: the first value seeds the series, then
/// SRTT_k = (1 - alpha) * SRTT_{k-1} + alpha * R_k.
inline std::vector<double> srtt(std::span<const double> samples, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("SRTT gain alpha must be in (0,1]");
  std::vector<double> out;
  out.reserve(samples.size());
  for (double r : samples) {
    out.push_back(out.empty() ? r : (1.0 - alpha) * out.back() + alpha * r);
  }
  return out;
}

// Clock offsets -----------------------------------------------------------------

struct OffsetEstimate {
  std::array<double, 3> offset_ms{0.0, 0.0, 0.0};
  std::array<double, 3> sigma_ms{0.0, 0.0, 0.0};
  std::array<std::size_t, 3> count{0, 0, 0};

  double offset(Tap tap) const { return offset_ms[index_of(tap)]; }
  double sigma(Tap tap) const { return sigma_ms[index_of(tap)]; }
  double corrected_us(const CaptureRecord& r) const {
    return static_cast<double>(r.t_us) - offset_ms[index_of(r.tap)] * 1000.0;
  }
};

/// Batch estimate over the whole trace: per-node sample mean and sample
/// standard deviation (n - 1 denominator).
inline OffsetEstimate estimate_offsets(const std::vector<NtpSample>& trace) {
  std::array<std::vector<double>, 3> per_node;
  for (const auto& s : trace) per_node[index_of(s.node)].push_back(s.offset_ms);
  OffsetEstimate est;
  for (Tap tap : kAllTaps) {
    const auto& v = per_node[index_of(tap)];
    if (v.size() < 2)
      throw InsufficientData("need at least 2 offset samples for node " + std::string(to_string(tap)) + ", got " +
                             std::to_string(v.size()));
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    est.offset_ms[index_of(tap)] = mean;
    est.sigma_ms[index_of(tap)] = std::sqrt(ss / (n - 1.0));
    est.count[index_of(tap)] = v.size();
  }
  return est;
}

// OWD -------------------------------------------------------------------------

struct OwdResult {
  std::vector<Sample> samples;
  std::size_t unmatched = 0;
};

/// Clock-corrected one-way delay between the origin tap and the far tap.
/// Uplink: (t_app - offset_app) - (t_ue - offset_ue). BY_SEQ matches payload
/// segments on (flow, seq, len), first occurrence on each side; packets
/// without a seq identity (control, pure ACKs) are skipped in that mode.
inline OwdResult owd_packet(const std::vector<CaptureRecord>& ue, const std::vector<CaptureRecord>& app,
                            const OffsetEstimate& offsets, MatchMode mode = MatchMode::BY_PID,
                            Direction dir = Direction::UPLINK, std::optional<Proto> proto = std::nullopt) {
  const auto& src = dir == Direction::UPLINK ? ue : app;
  const auto& dst = dir == Direction::UPLINK ? app : ue;
  auto wanted = [&](const CaptureRecord& r) {
    if (r.dir != dir) return false;
    if (proto && r.proto != *proto) return false;
    if (mode == MatchMode::BY_SEQ && !r.is_data()) return false;
    return true;
  };

  OwdResult out;
  auto emit = [&](const CaptureRecord& s, const CaptureRecord& d) {
    const double us = offsets.corrected_us(d) - offsets.corrected_us(s);
    out.samples.push_back({out.samples.size(), s.pid, us_to_ms(us)});
  };

  if (mode == MatchMode::BY_PID) {
    std::unordered_map<Pid, std::size_t> at_dst;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (wanted(dst[i])) at_dst.emplace(dst[i].pid, i);
    }
    for (const auto& s : src) {
      if (!wanted(s)) continue;
      auto it = at_dst.find(s.pid);
      if (it == at_dst.end()) {
        ++out.unmatched;
        continue;
      }
      emit(s, dst[it->second]);
    }
  } else {
    using Key = std::tuple<std::uint32_t, std::uint64_t, std::int64_t>;
    std::map<Key, std::size_t> at_dst;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (wanted(dst[i])) at_dst.emplace(Key{dst[i].flow, dst[i].seq, dst[i].len}, i);
    }
    std::map<Key, bool> used;
    for (const auto& s : src) {
      if (!wanted(s)) continue;
      Key k{s.flow, s.seq, s.len};
      if (!used.emplace(k, true).second) continue;
      auto it = at_dst.find(k);
      if (it == at_dst.end()) {
        ++out.unmatched;
        continue;
      }
      emit(s, dst[it->second]);
    }
  }
  return out;
}

// Frames ------------------------------------------------------------------------

struct FrameSample {
  std::size_t idx = 0;
  std::uint64_t bytes = 0;
  double value_ms = 0.0;
};

struct FrameResult {
  std::vector<FrameSample> samples;
  std::size_t excluded = 0;
};

inline std::vector<double> values(const std::vector<FrameSample>& samples) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.value_ms);
  return v;
}

namespace detail {

struct TapFrames {
  StreamView view;
  FrameSegmentation frames;

  TapFrames(const std::vector<CaptureRecord>& records, std::uint32_t flow)
      : view(reassemble(records, flow, Direction::UPLINK)), frames(segment_frames(view)) {}

  const Segment& first(const FrameExtent& f) const { return view.segments[f.segments.front()]; }

  const Segment& latest(const FrameExtent& f) const {
    const Segment* best = &view.segments[f.segments.front()];
    for (auto i : f.segments) {
      if (view.segments[i].pos > best->pos) best = &view.segments[i];
    }
    return *best;
  }
};

}  // namespace detail

/// Service latency per frame at the UE tap: from the frame's first data
/// segment to the first ACK after its last data segment that covers its final
/// byte.
inline FrameResult frame_latency(const std::vector<CaptureRecord>& ue, std::uint32_t flow = flows::kVideo) {
  detail::TapFrames tf(ue, flow);
  detail::AckIndex acks(ue, flow);
  FrameResult out;
  for (const auto& f : tf.frames.frames) {
    if (!f.complete || f.segments.empty()) {
      ++out.excluded;
      continue;
    }
    auto t_ack = acks.first_covering(tf.latest(f).pos, f.end);
    if (!t_ack) {
      ++out.excluded;
      continue;
    }
    out.samples.push_back({f.idx, f.data_bytes, us_to_ms(static_cast<double>(*t_ack - tf.first(f).t_us))});
  }
  return out;
}

/// Uplink OWD per frame. Frames are matched across taps by their starting
/// byte offset. FIRST_TO_LAST runs from the first data segment at the UE to
/// the last data segment at the APP and so includes serialization.
inline FrameResult frame_owd(const std::vector<CaptureRecord>& ue, const std::vector<CaptureRecord>& app,
                             const OffsetEstimate& offsets,
                             FrameEndpoints endpoints = FrameEndpoints::FIRST_TO_LAST,
                             std::uint32_t flow = flows::kVideo) {
  detail::TapFrames at_ue(ue, flow);
  detail::TapFrames at_app(app, flow);
  std::map<std::uint64_t, const FrameExtent*> app_by_begin;
  for (const auto& f : at_app.frames.frames) app_by_begin.emplace(f.begin, &f);

  FrameResult out;
  for (const auto& f : at_ue.frames.frames) {
    if (!f.complete || f.segments.empty()) {
      ++out.excluded;
      continue;
    }
    auto it = app_by_begin.find(f.begin);
    if (it == app_by_begin.end() || !it->second->complete || it->second->end != f.end ||
        it->second->segments.empty()) {
      ++out.excluded;
      continue;
    }
    const auto& fa = *it->second;
    const double t0 = offsets.corrected_us(ue[at_ue.first(f).pos]);
    const auto& end_seg = endpoints == FrameEndpoints::FIRST_TO_LAST ? at_app.latest(fa) : at_app.first(fa);
    const double t1 = offsets.corrected_us(app[end_seg.pos]);
    out.samples.push_back({f.idx, f.data_bytes, us_to_ms(t1 - t0)});
  }
  return out;
}

/// Full per-frame timing record across both taps (clock-corrected µs).
inline std::vector<FrameObservation> observe_frames(const std::vector<CaptureRecord>& ue,
                                                    const std::vector<CaptureRecord>& app,
                                                    const OffsetEstimate& offsets,
                                                    std::uint32_t flow = flows::kVideo) {
  detail::TapFrames at_ue(ue, flow);
  detail::TapFrames at_app(app, flow);
  detail::AckIndex acks(ue, flow);
  std::map<std::uint64_t, const FrameExtent*> app_by_begin;
  for (const auto& f : at_app.frames.frames) app_by_begin.emplace(f.begin, &f);

  std::vector<FrameObservation> out;
  for (const auto& f : at_ue.frames.frames) {
    if (f.segments.empty()) continue;
    FrameObservation o;
    o.frame_idx = f.idx;
    o.byte_len = f.data_bytes;
    o.t_first_ue = offsets.corrected_us(ue[at_ue.first(f).pos]);
    o.t_last_ue = offsets.corrected_us(ue[at_ue.latest(f).pos]);
    if (auto t = acks.first_covering(at_ue.latest(f).pos, f.end); t && f.complete) {
      o.t_ack_ue = static_cast<double>(*t) - offsets.offset(Tap::UE) * 1000.0;
    }
    auto it = app_by_begin.find(f.begin);
    bool app_complete = false;
    if (it != app_by_begin.end() && !it->second->segments.empty()) {
      o.t_first_app = offsets.corrected_us(app[at_app.first(*it->second).pos]);
      o.t_last_app = offsets.corrected_us(app[at_app.latest(*it->second).pos]);
      app_complete = it->second->complete && it->second->end == f.end;
    }
    o.complete = f.complete && app_complete && o.t_ack_ue.has_value();
    out.push_back(o);
  }
  return out;
}

// Delivery and throughput ---------------------------------------------------------

struct DeliveryCount {
  std::size_t sent = 0;
  std::size_t delivered = 0;
};

/// Uplink packets seen at the UE tap versus those that reached the APP tap.
inline DeliveryCount delivery(const std::vector<CaptureRecord>& ue, const std::vector<CaptureRecord>& app,
                              std::optional<Proto> proto = std::nullopt) {
  std::unordered_map<Pid, bool> arrived;
  for (const auto& r : app) {
    if (r.dir == Direction::UPLINK) arrived.emplace(r.pid, true);
  }
  DeliveryCount c;
  for (const auto& r : ue) {
    if (r.dir != Direction::UPLINK || (proto && r.proto != *proto)) continue;
    ++c.sent;
    if (arrived.count(r.pid)) ++c.delivered;
  }
  return c;
}

/// Payload goodput (Mbit/s) of an uplink flow at a receiving tap, measured
/// from `warmup_s` after the first arrival to the last arrival.
inline std::optional<double> goodput_mbps(const std::vector<CaptureRecord>& records, std::uint32_t flow,
                                          double warmup_s = 0.5) {
  std::optional<TimeUs> first;
  TimeUs last = 0;
  for (const auto& r : records) {
    if (r.flow != flow || r.dir != Direction::UPLINK || !r.is_data()) continue;
    if (!first) first = r.t_us;
    last = r.t_us;
  }
  if (!first) return std::nullopt;
  const TimeUs from = *first + std::llround(warmup_s * 1e6);
  if (last <= from) return std::nullopt;
  std::uint64_t bytes = 0;
  std::unordered_map<std::uint64_t, bool> counted;
  for (const auto& r : records) {
    if (r.flow != flow || r.dir != Direction::UPLINK || !r.is_data() || r.t_us <= from) continue;
    if (counted.emplace(r.seq, true).second) bytes += static_cast<std::uint64_t>(r.len);
  }
  return static_cast<double>(bytes) * 8.0 / static_cast<double>(last - from);
}

/// Demanded video rate estimated from a capture: mean frame size times the
/// frame rate implied by the median spacing of boundary markers.
inline std::optional<VideoConfig> estimate_video(const std::vector<CaptureRecord>& ue,
                                                 std::uint32_t flow = flows::kVideo) {
  detail::TapFrames tf(ue, flow);
  std::vector<TimeUs> marker_times;
  for (const auto& s : tf.view.segments) {
    if (s.marker == Marker::FRAME_BOUNDARY) marker_times.push_back(s.t_us);
  }
  double bytes = 0.0;
  std::size_t n = 0;
  for (const auto& f : tf.frames.frames) {
    if (!f.complete) continue;
    bytes += static_cast<double>(f.data_bytes);
    ++n;
  }
  if (n == 0 || marker_times.size() < 2) return std::nullopt;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < marker_times.size(); ++i)
    gaps.push_back(static_cast<double>(marker_times[i] - marker_times[i - 1]));
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  const double gap = gaps[gaps.size() / 2];
  if (gap <= 0.0) return std::nullopt;
  VideoConfig v;
  v.fps = 1e6 / gap;
  v.mean_frame_bytes = bytes / static_cast<double>(n);
  return v;
}

// Whole capture set -----------------------------------------------------------

/// Every raw sample series the KPI engine consumes, extracted in one pass.
struct Analysis {
  AnalyzerConfig config;
  OffsetEstimate offsets;
  bool offsets_from_trace = false;
  RttResult control_rtt;
  RttResult stream_rtt;
  std::uint32_t stream_flow = flows::kVideo;
  FrameResult frame_latency;
  FrameResult frame_owd;
  OwdResult owd_up;
  OwdResult owd_command_down;
  DeliveryCount delivery;
  std::size_t boundaries = 0;
  std::optional<double> bulk_goodput_mbps;
  std::optional<VideoConfig> video_estimate;
};

inline bool has_flow_data(const std::vector<CaptureRecord>& records, std::uint32_t flow) {
  return std::any_of(records.begin(), records.end(),
                     [flow](const CaptureRecord& r) { return r.flow == flow && r.is_data(); });
}

inline Analysis analyze(const CaptureSet& captures, const AnalyzerConfig& config = {}) {
  config.validate();
  Analysis a;
  a.config = config;
  if (!captures.ntp.empty()) {
    a.offsets = estimate_offsets(captures.ntp);
    a.offsets_from_trace = true;
  }
  a.control_rtt = rtt_control(captures.ue);
  const bool video = has_flow_data(captures.ue, flows::kVideo);
  a.stream_flow = video || !has_flow_data(captures.ue, flows::kBulk) ? flows::kVideo : flows::kBulk;
  a.stream_rtt = rtt_tcp(captures.ue, a.stream_flow);
  if (video) {
    a.frame_latency = frame_latency(captures.ue, flows::kVideo);
    a.frame_owd = frame_owd(captures.ue, captures.app, a.offsets, config.endpoints, flows::kVideo);
    a.boundaries = segment_frames(reassemble(captures.ue, flows::kVideo)).boundaries;
    a.video_estimate = estimate_video(captures.ue, flows::kVideo);
  }
  a.owd_up = owd_packet(captures.ue, captures.app, a.offsets, config.match, Direction::UPLINK);
  a.owd_command_down = owd_packet(captures.ue, captures.app, a.offsets, MatchMode::BY_PID, Direction::DOWNLINK);
  // Only command packets count toward the response OWD.
  {
    std::unordered_map<Pid, bool> commands;
    for (const auto& r : captures.app) {
      if (r.flow == flows::kCommand && r.dir == Direction::DOWNLINK) commands.emplace(r.pid, true);
    }
    std::vector<Sample> kept;
    for (const auto& s : a.owd_command_down.samples) {
      if (commands.count(s.pid)) kept.push_back({kept.size(), s.pid, s.value_ms});
    }
    a.owd_command_down.samples = std::move(kept);
  }
  a.delivery = delivery(captures.ue, captures.app);
  if (has_flow_data(captures.app, flows::kBulk)) a.bulk_goodput_mbps = goodput_mbps(captures.app, flows::kBulk);
  return a;
}

}  // namespace edgelat::analyzer
