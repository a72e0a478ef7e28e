#pragma once

// Deterministic discrete-event emulation of the measurement testbed.
//
//   UE ==access link==> CORE --core delay--> APP     (uplink)
//   UE <==access link== CORE <--core delay-- APP     (downlink)
//
// The access link carries the technology's base one-way latency, Gaussian
// jitter, Bernoulli loss and a rate cap with an unbounded FIFO queue. The core
// interface adds the range delay (0 / 2 / 4 ms) in each direction. Every packet
// is recorded at each tap it passes, stamped with that node's local clock.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgelat/model.hpp"
#include "edgelat/ndjson.hpp"

namespace edgelat {

inline constexpr std::int64_t kBoundaryBytes = 72;    // "--Boundary" delimiter plus part headers
inline constexpr TimeUs kDelayedAckUs = 5000;
inline constexpr TimeUs kInitialRtoUs = 1'000'000;
inline constexpr int kMaxRetransmits = 8;
inline constexpr std::int64_t kSendBufferBytes = 64 * 1024;

// Workload --------------------------------------------------------------------

struct PingWorkload {
  double interval_ms = 100.0;
  int count = 0;  // 0 disables control pings
  double start_ms = 0.0;
  std::int64_t payload_bytes = 56;
};

struct VideoWorkload {
  VideoConfig video;
  double duration_s = 10.0;
  bool terminate = true;  // send a closing delimiter after the last frame
};

struct BulkWorkload {
  double duration_s = 3.0;
  double rate_mbps = 1000.0;  // generator rate; the path cap usually binds first
};

struct Workload {
  PingWorkload pings;
  std::optional<VideoWorkload> video;
  std::optional<BulkWorkload> bulk;

  void validate() const {
    if (pings.count < 0) throw ValidationError("ping count must be >= 0");
    if (pings.count > 0 && !(pings.interval_ms > 0.0)) throw ValidationError("ping interval must be > 0");
    if (pings.payload_bytes <= 0) throw ValidationError("ping payload must be > 0");
    if (pings.count == 0 && !video && !bulk) throw ValidationError("workload has no generator enabled");
    if (video && bulk) throw ValidationError("bulk probe is exclusive with video");
    if (video) {
      video->video.validate();
      if (!(video->duration_s > 0.0)) throw ValidationError("video duration must be > 0");
    }
    if (bulk) {
      if (!(bulk->duration_s > 0.0)) throw ValidationError("bulk duration must be > 0");
      if (!(bulk->rate_mbps > 0.0)) throw ValidationError("bulk rate must be > 0");
    }
  }
};

struct EmulationRun {
  Scenario scenario;
  Workload workload;
  ClockModel clocks;
  ProcessingModel processing;
  std::uint64_t seed = 1;
  std::int64_t mss = 1400;

  void validate() const {
    scenario.validate();
    workload.validate();
    clocks.validate();
    if (mss <= 0) throw ValidationError("mss must be > 0");
  }
};

// Ground truth ----------------------------------------------------------------

struct TruthPacket {
  Pid pid = 0;
  std::uint32_t flow = 0;
  Direction dir = Direction::UPLINK;
  Proto proto = Proto::CTRL;
  std::uint64_t seq = 0;
  std::int64_t len = 0;
  bool retransmission = false;
  TimeUs t_emit_us = 0;
  std::optional<TimeUs> t_ue_us, t_core_us, t_app_us;
  bool lost = false;

  std::optional<TimeUs> one_way_us() const {
    auto dst = dir == Direction::UPLINK ? t_app_us : t_ue_us;
    if (!dst) return std::nullopt;
    return *dst - t_emit_us;
  }
};

struct TruthFrame {
  std::size_t idx = 0;
  std::int64_t bytes = 0;
  std::uint64_t begin_seq = 0;  // first image byte, after the delimiter
  TimeUs t_first_emit_us = 0;
  std::optional<TimeUs> t_complete_app_us;
  std::optional<TimeUs> t_ack_ue_us;
  std::optional<TimeUs> t_processed_us;
  std::optional<Pid> command_pid;

  std::optional<TimeUs> owd_up_us() const {
    if (!t_complete_app_us) return std::nullopt;
    return *t_complete_app_us - t_first_emit_us;
  }
};

struct TruthLog {
  std::vector<TruthPacket> packets;
  std::vector<TruthFrame> frames;
  std::size_t retransmissions = 0;

  const TruthPacket* find(Pid pid) const {
    if (index_.empty()) {
      for (std::size_t i = 0; i < packets.size(); ++i) index_.emplace(packets[i].pid, i);
    }
    auto it = index_.find(pid);
    return it == index_.end() ? nullptr : &packets[it->second];
  }

 private:
  mutable std::unordered_map<Pid, std::size_t> index_;
};

struct EmulationResult {
  CaptureSet captures;
  TruthLog truth;
};

// Random streams --------------------------------------------------------------

namespace rng_stream {
inline constexpr std::uint32_t kClock = 1;
inline constexpr std::uint32_t kFrameSize = 2;
inline constexpr std::uint32_t kUplink = 3;
inline constexpr std::uint32_t kDownlink = 4;
}  // namespace rng_stream

/// Independent generator per purpose, so changing one impairment does not
/// perturb the draws of another.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                    0x5eedu};
  return std::mt19937_64(seq);
}

inline double gaussian(std::mt19937_64& rng, double mean, double stddev) {
  if (stddev <= 0.0) return mean;
  return std::normal_distribution<double>(mean, stddev)(rng);
}

// Generators ------------------------------------------------------------------

/// Request emission times for `count` pings spaced `interval_ms` apart.
inline std::vector<TimeUs> gen_control_pings(double interval_ms, int count, double start_ms = 0.0) {
  if (count < 1) throw ValidationError("ping count must be >= 1");
  std::vector<TimeUs> times;
  times.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) times.push_back(ms_to_us(start_ms + i * interval_ms));
  return times;
}

struct FramePlan {
  std::size_t idx = 0;
  TimeUs t_emit_us = 0;
  std::int64_t bytes = 0;
  std::vector<std::int64_t> segment_lens;  // data segments, excluding the delimiter
};

struct VideoSchedule {
  std::vector<FramePlan> frames;
  std::optional<TimeUs> close_at_us;  // closing delimiter, when terminated

  std::size_t boundary_markers() const { return frames.size() + (close_at_us ? 1 : 0); }
};

inline std::int64_t draw_frame_bytes(const VideoConfig& cfg, std::mt19937_64& rng) {
  if (cfg.frame_size_cv <= 0.0) return std::max<std::int64_t>(1, std::llround(cfg.mean_frame_bytes));
  const double s2 = std::log1p(cfg.frame_size_cv * cfg.frame_size_cv);
  const double mu = std::log(cfg.mean_frame_bytes) - s2 / 2.0;
  std::lognormal_distribution<double> dist(mu, std::sqrt(s2));
  return std::max<std::int64_t>(1, std::llround(dist(rng)));
}

/// One frame every 1/fps seconds; each frame is split into ceil(bytes/mss)
/// data segments.
inline VideoSchedule gen_video_stream(const VideoConfig& cfg, double duration_s, std::int64_t mss,
                                      std::mt19937_64& rng, bool terminate = true) {
  cfg.validate();
  if (!(duration_s > 0.0)) throw ValidationError("video duration must be > 0");
  if (mss <= 0) throw ValidationError("mss must be > 0");
  VideoSchedule sched;
  const auto n = static_cast<std::size_t>(std::floor(duration_s * cfg.fps + 1e-9));
  const double period_us = 1e6 / cfg.fps;
  for (std::size_t i = 0; i < n; ++i) {
    FramePlan f;
    f.idx = i;
    f.t_emit_us = std::llround(static_cast<double>(i) * period_us);
    f.bytes = draw_frame_bytes(cfg, rng);
    for (std::int64_t left = f.bytes; left > 0; left -= mss) f.segment_lens.push_back(std::min(left, mss));
    sched.frames.push_back(std::move(f));
  }
  if (terminate) sched.close_at_us = std::llround(static_cast<double>(n) * period_us);
  return sched;
}

struct BulkSchedule {
  TimeUs start_us = 0;
  TimeUs end_us = 0;
  double gap_us = 0.0;  // generator spacing between back-to-back segments
};

inline BulkSchedule gen_bulk_probe(double duration_s, double rate_mbps = 1000.0, std::int64_t mss = 1400) {
  if (!(duration_s > 0.0)) throw ValidationError("bulk duration must be > 0");
  if (!(rate_mbps > 0.0)) throw ValidationError("bulk rate must be > 0");
  return {0, std::llround(duration_s * 1e6), static_cast<double>(mss) * 8.0 / rate_mbps};
}

/// Produces one offset sample per node per resync interval: the node's true
/// offset plus zero-mean Gaussian noise with the node's sigma. Between
/// resyncs a node's clock deviates from true time by its latest sample.
class NtpSampler {
 public:
  NtpSampler(const ClockModel& clocks, std::mt19937_64 rng) : clocks_(clocks), rng_(std::move(rng)) {
    clocks_.validate();
  }

  TimeUs interval_us() const { return std::llround(clocks_.resync_interval_s * 1e6); }
  std::size_t size() const { return rounds_.size(); }

  const std::array<double, 3>& round(std::size_t k) {
    while (rounds_.size() <= k) {
      std::array<double, 3> r{};
      for (Tap tap : kAllTaps) {
        r[index_of(tap)] = gaussian(rng_, clocks_.offset_ms[index_of(tap)], clocks_.sigma_ms[index_of(tap)]);
      }
      rounds_.push_back(r);
    }
    return rounds_[k];
  }

  std::vector<NtpSample> trace() const {
    std::vector<NtpSample> out;
    out.reserve(rounds_.size() * 3);
    for (std::size_t k = 0; k < rounds_.size(); ++k) {
      for (Tap tap : kAllTaps) {
        out.push_back({tap, static_cast<TimeUs>(k) * interval_us(), rounds_[k][index_of(tap)]});
      }
    }
    return out;
  }

 private:
  ClockModel clocks_;
  std::mt19937_64 rng_;
  std::vector<std::array<double, 3>> rounds_;
};

inline std::vector<NtpSample> sample_ntp_trace(const ClockModel& clocks, double duration_s,
                                               std::mt19937_64 rng) {
  clocks.validate();
  if (duration_s < clocks.resync_interval_s)
    throw ValidationError("trace duration must cover at least one resync interval");
  NtpSampler sampler(clocks, std::move(rng));
  const auto rounds = static_cast<std::size_t>(std::floor(duration_s / clocks.resync_interval_s + 1e-9));
  if (rounds > 0) sampler.round(rounds - 1);
  return sampler.trace();
}

// Emulator --------------------------------------------------------------------

namespace detail {

class EventQueue {
 public:
  void at(TimeUs t, std::function<void()> fn) { heap_.push({t, order_++, std::move(fn)}); }

  void run() {
    while (!heap_.empty()) {
      // Moving out of the top element is safe: it is popped before use.
      auto ev = std::move(const_cast<Event&>(heap_.top()));
      heap_.pop();
      now_ = ev.t;
      ev.fn();
    }
  }

  TimeUs now() const { return now_; }

 private:
  struct Event {
    TimeUs t;
    std::uint64_t order;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.t != b.t ? a.t > b.t : a.order > b.order;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t order_ = 0;
  TimeUs now_ = 0;
};

/// Access link in one direction: rate-capped FIFO, then propagation with
/// jitter; arrivals never overtake each other.
class AccessLink {
 public:
  AccessLink(double prop_ms, double jitter_ms, double loss, double cap_mbps, std::mt19937_64 rng)
      : prop_us_(prop_ms * 1000.0), jitter_us_(jitter_ms * 1000.0), loss_(loss), cap_(cap_mbps),
        rng_(std::move(rng)) {}

  /// Arrival time at the far end, or nullopt when the packet is lost.
  std::optional<TimeUs> transit(TimeUs now, std::int64_t bytes) {
    const double start = std::max(static_cast<double>(now), free_at_);
    const double tx = std::isinf(cap_) ? 0.0 : static_cast<double>(bytes) * 8.0 / cap_;
    free_at_ = start + tx;
    const double prop = std::max(0.0, prop_us_ + gaussian(rng_, 0.0, jitter_us_));
    bool lost = false;
    if (loss_ > 0.0) lost = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < loss_;
    if (lost) return std::nullopt;
    TimeUs arrival = std::max(static_cast<TimeUs>(std::llround(free_at_ + prop)), last_arrival_);
    last_arrival_ = arrival;
    return arrival;
  }

  double free_at() const { return free_at_; }
  double cap_mbps() const { return cap_; }

 private:
  double prop_us_;
  double jitter_us_;
  double loss_;
  double cap_;
  std::mt19937_64 rng_;
  double free_at_ = 0.0;
  TimeUs last_arrival_ = std::numeric_limits<TimeUs>::min();
};

}  // namespace detail

class Emulator {
 public:
  explicit Emulator(EmulationRun run)
      : cfg_(std::move(run)),
        up_(cfg_.scenario.base_owd_up_ms, cfg_.scenario.jitter_std_ms, cfg_.scenario.loss_prob,
            cfg_.scenario.bandwidth_cap_mbps, make_rng(cfg_.seed, rng_stream::kUplink)),
        down_(cfg_.scenario.base_owd_down_ms, cfg_.scenario.jitter_std_ms, cfg_.scenario.loss_prob,
              cfg_.scenario.bandwidth_cap_mbps, make_rng(cfg_.seed, rng_stream::kDownlink)),
        ntp_(cfg_.clocks, make_rng(cfg_.seed, rng_stream::kClock)),
        core_delay_us_(ms_to_us(cfg_.scenario.added_owd())) {
    cfg_.validate();
  }

  EmulationResult run() {
    schedule_pings();
    schedule_video();
    schedule_bulk();
    q_.run();
    ntp_.round(1);  // at least two rounds so offsets can always be estimated
    out_.captures.ntp = ntp_.trace();
    return std::move(out_);
  }

 private:
  struct Packet {
    Pid pid = 0;
    std::uint32_t flow = 0;
    Direction dir = Direction::UPLINK;
    Proto proto = Proto::CTRL;
    std::uint64_t seq = 0;
    std::uint64_t ack = 0;
    std::int64_t len = 0;
    Marker marker = Marker::NONE;
    std::int64_t frame = -1;  // owning frame, -1 for none
    int seg_index = -1;       // data segment index within the frame, -1 for the delimiter
    bool frame_last = false;
  };

  struct Outstanding {
    Packet pkt;
    TimeUs sent = 0;
    int retries = 0;
  };

  struct SenderFlow {
    std::uint64_t next_seq = 0;
    std::uint64_t acked = 0;
    std::optional<double> srtt_us;
    std::map<std::uint64_t, Outstanding> outstanding;  // retransmit mode only
  };

  struct ReceiverFlow {
    std::uint64_t cum = 0;
    std::map<std::uint64_t, std::uint64_t> ranges;  // start -> end
    int pending = 0;
    std::uint64_t timer_gen = 0;
    bool timer_armed = false;
  };

  struct FrameState {
    std::vector<bool> got;
    std::size_t remaining = 0;
    std::uint64_t end_seq = 0;
  };

  // Clocks -------------------------------------------------------------------

  TimeUs local_time(Tap tap, TimeUs true_t) {
    const auto k = static_cast<std::size_t>(std::max<TimeUs>(0, true_t) / ntp_.interval_us());
    return true_t + ms_to_us(ntp_.round(k)[index_of(tap)]);
  }

  void observe(Tap tap, const Packet& p, TimeUs true_t) {
    CaptureRecord r{tap, local_time(tap, true_t), p.flow, p.dir, p.proto, p.seq, p.ack, p.len, p.marker, p.pid};
    out_.captures.at(tap).push_back(r);
    auto& tp = out_.truth.packets[truth_index_.at(p.pid)];
    (tap == Tap::UE ? tp.t_ue_us : tap == Tap::CORE ? tp.t_core_us : tp.t_app_us) = true_t;
  }

  Pid next_pid() { return next_pid_++; }

  void add_truth(const Packet& p, bool retransmission) {
    TruthPacket t;
    t.pid = p.pid;
    t.flow = p.flow;
    t.dir = p.dir;
    t.proto = p.proto;
    t.seq = p.seq;
    t.len = p.len;
    t.retransmission = retransmission;
    t.t_emit_us = q_.now();
    truth_index_.emplace(p.pid, out_.truth.packets.size());
    out_.truth.packets.push_back(t);
  }

  // Paths --------------------------------------------------------------------

  void emit_uplink(const Packet& p, bool retransmission = false) {
    const TimeUs now = q_.now();
    add_truth(p, retransmission);
    observe(Tap::UE, p, now);
    auto at_core = up_.transit(now, p.len);
    if (!at_core) {
      out_.truth.packets[truth_index_.at(p.pid)].lost = true;
      return;
    }
    q_.at(*at_core, [this, p] {
      observe(Tap::CORE, p, q_.now());
      q_.at(q_.now() + core_delay_us_, [this, p] {
        observe(Tap::APP, p, q_.now());
        on_app_receive(p);
      });
    });
  }

  void emit_downlink(const Packet& p) {
    const TimeUs now = q_.now();
    add_truth(p, false);
    observe(Tap::APP, p, now);
    q_.at(now + core_delay_us_, [this, p] {
      observe(Tap::CORE, p, q_.now());
      auto at_ue = down_.transit(q_.now(), p.len);
      if (!at_ue) {
        out_.truth.packets[truth_index_.at(p.pid)].lost = true;
        return;
      }
      q_.at(*at_ue, [this, p] {
        observe(Tap::UE, p, q_.now());
        on_ue_receive(p);
      });
    });
  }

  // Generators -------------------------------------------------------------------

  void schedule_pings() {
    const auto& w = cfg_.workload.pings;
    if (w.count <= 0) return;
    for (TimeUs t : gen_control_pings(w.interval_ms, w.count, w.start_ms)) {
      q_.at(t, [this, len = w.payload_bytes] {
        Packet p;
        p.pid = next_pid();
        p.flow = flows::kControl;
        p.dir = Direction::UPLINK;
        p.proto = Proto::CTRL;
        p.len = len;
        emit_uplink(p);
      });
    }
  }

  void schedule_video() {
    if (!cfg_.workload.video) return;
    const auto& w = *cfg_.workload.video;
    auto rng = make_rng(cfg_.seed, rng_stream::kFrameSize);
    auto sched = gen_video_stream(w.video, w.duration_s, cfg_.mss, rng, w.terminate);
    auto& sender = senders_[flows::kVideo];
    // Sequence space is fixed up front: delimiter, then the frame's data.
    std::uint64_t seq = 0;
    for (const auto& f : sched.frames) {
      TruthFrame tf;
      tf.idx = f.idx;
      tf.bytes = f.bytes;
      tf.begin_seq = seq + kBoundaryBytes;
      tf.t_first_emit_us = f.t_emit_us;
      out_.truth.frames.push_back(tf);
      FrameState st;
      st.got.assign(f.segment_lens.size(), false);
      st.remaining = f.segment_lens.size();
      st.end_seq = tf.begin_seq + static_cast<std::uint64_t>(f.bytes);
      frames_.push_back(std::move(st));

      std::vector<Packet> pkts;
      Packet marker;
      marker.flow = flows::kVideo;
      marker.proto = Proto::STREAM;
      marker.seq = seq;
      marker.len = kBoundaryBytes;
      marker.marker = Marker::FRAME_BOUNDARY;
      marker.frame = static_cast<std::int64_t>(f.idx);
      pkts.push_back(marker);
      seq += kBoundaryBytes;
      for (std::size_t s = 0; s < f.segment_lens.size(); ++s) {
        Packet d;
        d.flow = flows::kVideo;
        d.proto = Proto::STREAM;
        d.seq = seq;
        d.len = f.segment_lens[s];
        d.frame = static_cast<std::int64_t>(f.idx);
        d.seg_index = static_cast<int>(s);
        d.frame_last = s + 1 == f.segment_lens.size();
        seq += static_cast<std::uint64_t>(d.len);
        pkts.push_back(d);
      }
      q_.at(f.t_emit_us, [this, pkts = std::move(pkts)]() mutable {
        for (auto& p : pkts) send_data(p);
      });
    }
    if (sched.close_at_us) {
      Packet close;
      close.flow = flows::kVideo;
      close.proto = Proto::STREAM;
      close.seq = seq;
      close.len = kBoundaryBytes;
      close.marker = Marker::FRAME_BOUNDARY;
      close.frame_last = true;
      q_.at(*sched.close_at_us, [this, close]() mutable { send_data(close); });
      seq += kBoundaryBytes;
    }
    sender.next_seq = seq;
  }

  void schedule_bulk() {
    if (!cfg_.workload.bulk) return;
    bulk_ = gen_bulk_probe(cfg_.workload.bulk->duration_s, cfg_.workload.bulk->rate_mbps, cfg_.mss);
    bulk_ideal_us_ = static_cast<double>(bulk_.start_us);
    q_.at(bulk_.start_us, [this] { bulk_tick(); });
  }

  void bulk_tick() {
    auto& sender = senders_[flows::kBulk];
    Packet p;
    p.flow = flows::kBulk;
    p.proto = Proto::STREAM;
    p.seq = sender.next_seq;
    p.len = cfg_.mss;
    sender.next_seq += static_cast<std::uint64_t>(p.len);
    send_data(p);
    // Pace at the generator rate, but never let more than a send buffer's
    // worth of bytes wait in the access queue.
    bulk_ideal_us_ += bulk_.gap_us;
    if (!std::isinf(up_.cap_mbps())) {
      const double buffer_us = static_cast<double>(kSendBufferBytes) * 8.0 / up_.cap_mbps();
      bulk_ideal_us_ = std::max(bulk_ideal_us_, up_.free_at() - buffer_us);
    }
    const auto next = static_cast<TimeUs>(std::ceil(bulk_ideal_us_ - 1e-9));
    if (next < bulk_.end_us) q_.at(std::max(next, q_.now()), [this] { bulk_tick(); });
  }

  // Transport ----------------------------------------------------------------

  void send_data(Packet p, bool retransmission = false, int retries = 0) {
    p.pid = next_pid();
    p.dir = Direction::UPLINK;
    emit_uplink(p, retransmission);
    if (retransmission) ++out_.truth.retransmissions;
    if (!cfg_.scenario.retransmit) return;
    auto& sender = senders_[p.flow];
    sender.outstanding[p.seq] = {p, q_.now(), retries};
    const TimeUs rto = sender.srtt_us ? std::max<TimeUs>(1000, std::llround(*sender.srtt_us)) : kInitialRtoUs;
    q_.at(q_.now() + rto, [this, flow = p.flow, seq = p.seq, end = p.seq + static_cast<std::uint64_t>(p.len)] {
      auto& s = senders_[flow];
      if (s.acked >= end) return;
      auto it = s.outstanding.find(seq);
      if (it == s.outstanding.end() || it->second.retries >= kMaxRetransmits) return;
      send_data(it->second.pkt, true, it->second.retries + 1);
    });
  }

  void on_app_receive(const Packet& p) {
    if (p.proto == Proto::CTRL) {
      Packet reply = p;
      reply.pid = reply_pid_for(p.pid);
      reply.dir = Direction::DOWNLINK;
      emit_downlink(reply);
      return;
    }
    if (p.len <= 0) return;
    auto& rx = receivers_[p.flow];
    const std::uint64_t end = p.seq + static_cast<std::uint64_t>(p.len);
    bool duplicate = false;
    if (cfg_.scenario.retransmit) {
      auto it = rx.ranges.upper_bound(p.seq);
      if (it != rx.ranges.begin() && std::prev(it)->second >= end) duplicate = true;
      if (!duplicate) {
        auto [pos, inserted] = rx.ranges.emplace(p.seq, end);
        if (!inserted) pos->second = std::max(pos->second, end);
        // Merge with neighbours.
        if (pos != rx.ranges.begin()) {
          auto prev = std::prev(pos);
          if (prev->second >= pos->first) {
            prev->second = std::max(prev->second, pos->second);
            rx.ranges.erase(pos);
            pos = prev;
          }
        }
        for (auto next = std::next(pos); next != rx.ranges.end() && next->first <= pos->second;
             next = rx.ranges.erase(next)) {
          pos->second = std::max(pos->second, next->second);
        }
        auto head = rx.ranges.find(0);
        rx.cum = head == rx.ranges.end() ? 0 : head->second;
      }
    } else {
      duplicate = end <= rx.cum;
      rx.cum = std::max(rx.cum, end);
    }

    if (p.frame >= 0 && p.seg_index >= 0) {
      auto& fs = frames_[static_cast<std::size_t>(p.frame)];
      auto i = static_cast<std::size_t>(p.seg_index);
      if (!fs.got[i]) {
        fs.got[i] = true;
        if (--fs.remaining == 0) frame_received(static_cast<std::size_t>(p.frame));
      }
    }

    if (duplicate) {
      send_ack(p.flow);
      return;
    }
    ++rx.pending;
    if (rx.pending >= 2 || p.frame_last) {
      send_ack(p.flow);
    } else if (!rx.timer_armed) {
      rx.timer_armed = true;
      q_.at(q_.now() + kDelayedAckUs, [this, flow = p.flow, gen = rx.timer_gen] {
        auto& r = receivers_[flow];
        if (r.timer_gen == gen && r.pending > 0) send_ack(flow);
      });
    }
  }

  void send_ack(std::uint32_t flow) {
    auto& rx = receivers_[flow];
    rx.pending = 0;
    rx.timer_armed = false;
    ++rx.timer_gen;
    if (rx.cum == 0) return;
    Packet a;
    a.pid = next_pid();
    a.flow = flow;
    a.dir = Direction::DOWNLINK;
    a.proto = Proto::STREAM;
    a.ack = rx.cum;
    emit_downlink(a);
  }

  void frame_received(std::size_t idx) {
    const TimeUs now = q_.now();
    auto& tf = out_.truth.frames[idx];
    tf.t_complete_app_us = now;
    const TimeUs start = std::max(now, processor_free_us_);
    const TimeUs done = start + ms_to_us(cfg_.processing.tau_total_ms());
    processor_free_us_ = done;
    q_.at(done, [this, idx] {
      Packet cmd;
      cmd.pid = next_pid();
      cmd.flow = flows::kCommand;
      cmd.dir = Direction::DOWNLINK;
      cmd.proto = Proto::STREAM;
      cmd.seq = command_seq_;
      cmd.len = cfg_.processing.response_bytes();
      command_seq_ += static_cast<std::uint64_t>(cmd.len);
      auto& f = out_.truth.frames[idx];
      f.t_processed_us = q_.now();
      f.command_pid = cmd.pid;
      emit_downlink(cmd);
    });
  }

  void on_ue_receive(const Packet& p) {
    if (p.proto != Proto::STREAM || p.ack == 0) return;
    auto& sender = senders_[p.flow];
    if (p.ack > sender.acked) {
      sender.acked = p.ack;
      if (p.flow == flows::kVideo) {
        while (next_unacked_frame_ < frames_.size() && frames_[next_unacked_frame_].end_seq <= p.ack) {
          out_.truth.frames[next_unacked_frame_].t_ack_ue_us = q_.now();
          ++next_unacked_frame_;
        }
      }
    }
    if (!cfg_.scenario.retransmit) return;
    // Karn: only segments never retransmitted feed the sender's SRTT.
    for (auto it = sender.outstanding.begin();
         it != sender.outstanding.end() && it->first + static_cast<std::uint64_t>(it->second.pkt.len) <= p.ack;
         it = sender.outstanding.erase(it)) {
      if (it->second.retries == 0) {
        const double sample = static_cast<double>(q_.now() - it->second.sent);
        sender.srtt_us = sender.srtt_us ? 0.875 * *sender.srtt_us + 0.125 * sample : sample;
      }
    }
  }

  EmulationRun cfg_;
  detail::EventQueue q_;
  detail::AccessLink up_;
  detail::AccessLink down_;
  NtpSampler ntp_;
  TimeUs core_delay_us_;

  EmulationResult out_;
  std::unordered_map<Pid, std::size_t> truth_index_;
  Pid next_pid_ = 1;
  std::map<std::uint32_t, SenderFlow> senders_;
  std::map<std::uint32_t, ReceiverFlow> receivers_;
  std::vector<FrameState> frames_;
  std::size_t next_unacked_frame_ = 0;
  TimeUs processor_free_us_ = 0;
  std::uint64_t command_seq_ = 0;
  BulkSchedule bulk_;
  double bulk_ideal_us_ = 0.0;
};

inline EmulationResult run(const EmulationRun& cfg) { return Emulator(cfg).run(); }

// Truth log output -------------------------------------------------------------

namespace detail {
inline std::string opt_int(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : "null";
}
}  // namespace detail

inline std::string encode_truth(const TruthPacket& t) {
  std::string s = "{\"kind\":\"packet\",\"pid\":" + std::to_string(t.pid) + ",\"flow\":" + std::to_string(t.flow) +
                  ",\"dir\":\"" + std::string(to_string(t.dir)) + "\",\"proto\":\"" +
                  std::string(to_string(t.proto)) + "\",\"seq\":" + std::to_string(t.seq) +
                  ",\"len\":" + std::to_string(t.len) +
                  ",\"retransmission\":" + (t.retransmission ? "true" : "false") +
                  ",\"t_emit_us\":" + std::to_string(t.t_emit_us) + ",\"t_ue_us\":" + detail::opt_int(t.t_ue_us) +
                  ",\"t_core_us\":" + detail::opt_int(t.t_core_us) + ",\"t_app_us\":" + detail::opt_int(t.t_app_us) +
                  ",\"lost\":" + (t.lost ? "true" : "false") + ",\"owd_us\":" + detail::opt_int(t.one_way_us()) + "}";
  return s;
}

inline std::string encode_truth(const TruthFrame& f) {
  std::optional<std::int64_t> cmd;
  if (f.command_pid) cmd = static_cast<std::int64_t>(*f.command_pid);
  return "{\"kind\":\"frame\",\"idx\":" + std::to_string(f.idx) + ",\"bytes\":" + std::to_string(f.bytes) +
         ",\"begin_seq\":" + std::to_string(f.begin_seq) + ",\"t_first_emit_us\":" + std::to_string(f.t_first_emit_us) +
         ",\"t_complete_app_us\":" + detail::opt_int(f.t_complete_app_us) +
         ",\"t_ack_ue_us\":" + detail::opt_int(f.t_ack_ue_us) + ",\"t_processed_us\":" + detail::opt_int(f.t_processed_us) +
         ",\"command_pid\":" + detail::opt_int(cmd) + ",\"owd_up_us\":" + detail::opt_int(f.owd_up_us()) + "}";
}

inline void write_truth(const std::filesystem::path& path, const TruthLog& truth) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& p : truth.packets) out << encode_truth(p) << '\n';
  for (const auto& f : truth.frames) out << encode_truth(f) << '\n';
}

}  // namespace edgelat
