#include <gtest/gtest.h>

#include <map>
#include <random>

#include "edgelat/analyzer.hpp"
#include "edgelat/emulator.hpp"
#include "edgelat/selftest.hpp"
#include "support.hpp"

using namespace edgelat;
using namespace edgelat::analyzer;
using edgelat::fixture::ping_run;
using edgelat::fixture::video_run;

namespace {

struct Builder {
  std::vector<CaptureRecord> recs;
  Pid next = 1;

  Builder& seg(double t_ms, std::uint64_t seq, std::int64_t len, bool marker = false, Tap tap = Tap::UE) {
    CaptureRecord r;
    r.tap = tap;
    r.t_us = ms_to_us(t_ms);
    r.flow = flows::kVideo;
    r.proto = Proto::STREAM;
    r.seq = seq;
    r.len = len;
    r.marker = marker ? Marker::FRAME_BOUNDARY : Marker::NONE;
    r.pid = next++;
    recs.push_back(r);
    return *this;
  }
  Builder& ack(double t_ms, std::uint64_t ack, Tap tap = Tap::UE) {
    CaptureRecord r;
    r.tap = tap;
    r.t_us = ms_to_us(t_ms);
    r.flow = flows::kVideo;
    r.dir = Direction::DOWNLINK;
    r.proto = Proto::STREAM;
    r.ack = ack;
    r.pid = next++;
    recs.push_back(r);
    return *this;
  }
};

// One 1928-byte frame between two 72-byte delimiters, acknowledged in two steps.
std::vector<CaptureRecord> one_frame_ue() {
  Builder b;
  b.seg(0, 0, 72, true).seg(0, 72, 1400).seg(1, 1472, 528).ack(10, 1472).ack(15, 2000);
  b.seg(50, 2000, 72, true).ack(60, 2072);
  return b.recs;
}

CaptureRecord ctrl(Tap tap, double t_ms, Pid pid, Direction dir = Direction::UPLINK) {
  CaptureRecord r;
  r.tap = tap;
  r.t_us = ms_to_us(t_ms);
  r.flow = flows::kControl;
  r.dir = dir;
  r.len = 56;
  r.pid = pid;
  return r;
}

}  // namespace

TEST(Reassembly, OrdersCollapsesAndReportsGaps) {
  Builder b;
  b.seg(0, 1400, 1400).seg(1, 0, 1400).seg(2, 1400, 1400).seg(3, 4200, 100);
  auto v = reassemble(b.recs, flows::kVideo);
  ASSERT_EQ(v.segments.size(), 3u);
  EXPECT_EQ(v.segments[0].seq, 0u);
  EXPECT_EQ(v.segments[1].t_us, 0);  // first capture kept
  EXPECT_EQ(v.duplicates, 1u);
  EXPECT_EQ(v.gaps, (std::vector<Gap>{{2800, 4200}}));
  EXPECT_EQ(v.total_bytes, 2900u);
}

TEST(Reassembly, LeadingGapAndMalformedInput) {
  Builder b;
  b.seg(0, 100, 10);
  EXPECT_EQ(reassemble(b.recs, flows::kVideo).gaps, (std::vector<Gap>{{0, 100}}));
  Builder conflict;
  conflict.seg(0, 0, 10).seg(1, 0, 20);
  EXPECT_THROW(reassemble(conflict.recs, flows::kVideo), MalformedCapture);
  Builder overlap;
  overlap.seg(0, 0, 10).seg(1, 5, 10);
  EXPECT_THROW(reassemble(overlap.recs, flows::kVideo), MalformedCapture);
}

TEST(FrameSegmentation, CompleteAndTrailingFrames) {
  auto recs = one_frame_ue();
  Builder tail;
  tail.next = 100;
  tail.seg(51, 2072, 500);
  recs.insert(recs.end(), tail.recs.begin(), tail.recs.end());
  auto fs = segment_frames(reassemble(recs, flows::kVideo));
  EXPECT_EQ(fs.boundaries, 2u);
  ASSERT_EQ(fs.frames.size(), 2u);
  EXPECT_TRUE(fs.frames[0].complete);
  EXPECT_EQ(fs.frames[0].begin, 72u);
  EXPECT_EQ(fs.frames[0].end, 2000u);
  EXPECT_EQ(fs.frames[0].data_bytes, 1928u);
  EXPECT_FALSE(fs.frames[1].complete);
  EXPECT_EQ(fs.complete_count(), 1u);
}

TEST(FrameSegmentation, MissingBytesMakeFrameIncomplete) {
  Builder b;
  b.seg(0, 0, 72, true).seg(0, 72, 1400).seg(50, 2000, 72, true);
  auto fs = segment_frames(reassemble(b.recs, flows::kVideo));
  ASSERT_EQ(fs.frames.size(), 1u);
  EXPECT_FALSE(fs.frames[0].complete);
}

TEST(FrameSegmentation, NoMarkersWarns) {
  Builder b;
  b.seg(0, 0, 100);
  auto fs = segment_frames(reassemble(b.recs, flows::kVideo));
  EXPECT_TRUE(fs.frames.empty());
  ASSERT_EQ(fs.warnings.size(), 1u);
}

TEST(Rtt, ControlPairsRequestAndReply) {
  std::vector<CaptureRecord> ue{ctrl(Tap::UE, 0, 1), ctrl(Tap::UE, 100, 2),
                                ctrl(Tap::UE, 15, reply_pid_for(1), Direction::DOWNLINK)};
  auto r = rtt_control(ue);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(r.samples[0].value_ms, 15.0);
  EXPECT_EQ(r.unmatched, 1u);
}

TEST(Rtt, StreamSegmentToCoveringAck) {
  auto r = rtt_tcp(one_frame_ue(), flows::kVideo);
  std::vector<double> got = values(r.samples);
  EXPECT_EQ(got, (std::vector<double>{10.0, 10.0, 14.0, 10.0}));
  EXPECT_EQ(r.unmatched, 0u);
}

TEST(Rtt, KarnExcludesRetransmittedSegments) {
  Builder b;
  b.seg(0, 0, 100).seg(300, 0, 100).seg(301, 100, 100).ack(310, 200);
  auto r = rtt_tcp(b.recs, flows::kVideo);
  EXPECT_EQ(r.retransmitted, 2u);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(r.samples[0].value_ms, 9.0);
}

TEST(Rtt, UncoveredSegmentIsUnmatched) {
  Builder b;
  b.seg(0, 0, 100).ack(5, 50);
  auto r = rtt_tcp(b.recs, flows::kVideo);
  EXPECT_TRUE(r.samples.empty());
  EXPECT_EQ(r.unmatched, 1u);
}

TEST(Srtt, FrozenFixtureSeries) {
  auto s = srtt(selftest::kSrttFixture, 0.125);
  ASSERT_EQ(s.size(), 10u);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], selftest::kSrttExpected[i], 1e-9);
}

TEST(Srtt, IndependentRecurrenceInFractions) {
  // 8 * SRTT_k = 7 * SRTT_{k-1} + R_k, tracked as numerator over 8^k.
  long double num = selftest::kSrttFixture[0];
  long double den = 1;
  auto s = srtt(selftest::kSrttFixture, 0.125);
  for (std::size_t k = 1; k < 10; ++k) {
    num = 7 * num + selftest::kSrttFixture[k] * den;
    den *= 8;
    EXPECT_NEAR(s[k], static_cast<double>(num / den), 1e-12);
  }
  EXPECT_NEAR(s[1], 45.0 / 4, 1e-15);
  EXPECT_NEAR(s[9], 845797405.0 / 67108864, 1e-12);
}

TEST(Srtt, NegativeControlWrongGain) {
  EXPECT_FALSE(selftest::srtt_recurrence(0.5).pass);
  EXPECT_TRUE(selftest::srtt_recurrence(0.125).pass);
}

TEST(Srtt, RejectsGainOutsideRange) {
  std::vector<double> v{1.0};
  EXPECT_THROW(srtt(v, 0.0), ValidationError);
  EXPECT_THROW(srtt(v, 1.5), ValidationError);
  EXPECT_EQ(srtt(v, 1.0), v);
  EXPECT_TRUE(srtt(std::vector<double>{}, 0.5).empty());
}

TEST(SrttProperty, StaysWithinRunningBounds) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> val(0.5, 200.0), gain(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + rng() % 100);
    for (auto& v : x) v = val(rng);
    auto s = srtt(x, gain(rng));
    double lo = x[0], hi = x[0];
    for (std::size_t i = 0; i < x.size(); ++i) {
      lo = std::min(lo, x[i]);
      hi = std::max(hi, x[i]);
      EXPECT_GE(s[i], lo - 1e-12);
      EXPECT_LE(s[i], hi + 1e-12);
    }
  }
}

TEST(Offsets, BatchMeanAndSampleSigma) {
  std::vector<NtpSample> t;
  for (Tap tap : kAllTaps) {
    t.push_back({tap, 0, 1.0});
    t.push_back({tap, 1, 3.0});
  }
  auto e = estimate_offsets(t);
  EXPECT_DOUBLE_EQ(e.offset(Tap::CORE), 2.0);
  EXPECT_DOUBLE_EQ(e.sigma(Tap::APP), std::sqrt(2.0));
  t.pop_back();
  EXPECT_THROW(estimate_offsets(t), InsufficientData);
}

TEST(Owd, MatchByPidAndBySeq) {
  Builder ue, app;
  ue.seg(0, 0, 100).seg(300, 0, 100);  // original pid 1, retransmission pid 2
  app.next = 2;
  app.seg(310, 0, 100, false, Tap::APP);  // only the retransmission arrived
  OffsetEstimate zero;
  auto by_pid = owd_packet(ue.recs, app.recs, zero, MatchMode::BY_PID);
  ASSERT_EQ(by_pid.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(by_pid.samples[0].value_ms, 10.0);
  EXPECT_EQ(by_pid.unmatched, 1u);
  auto by_seq = owd_packet(ue.recs, app.recs, zero, MatchMode::BY_SEQ);
  ASSERT_EQ(by_seq.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(by_seq.samples[0].value_ms, 310.0);
}

TEST(Owd, CorrectsClockOffsets) {
  std::vector<CaptureRecord> ue{ctrl(Tap::UE, 1.0, 1)}, app{ctrl(Tap::APP, 8.0, 1)};
  OffsetEstimate off;
  off.offset_ms = {1.0, 0.0, -2.0};
  auto r = owd_packet(ue, app, off);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_NEAR(r.samples[0].value_ms, 10.0, 1e-12);
}

TEST(FrameMetrics, LatencyAndOwdEndpoints) {
  auto ue = one_frame_ue();
  Builder app;
  app.seg(8, 0, 72, true, Tap::APP).seg(9, 72, 1400, false, Tap::APP).seg(12, 1472, 528, false, Tap::APP);
  app.seg(58, 2000, 72, true, Tap::APP);
  OffsetEstimate zero;
  auto lat = frame_latency(ue);
  ASSERT_EQ(lat.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(lat.samples[0].value_ms, 15.0);
  EXPECT_EQ(lat.samples[0].bytes, 1928u);
  auto last = frame_owd(ue, app.recs, zero, FrameEndpoints::FIRST_TO_LAST);
  auto first = frame_owd(ue, app.recs, zero, FrameEndpoints::FIRST_TO_FIRST);
  ASSERT_EQ(last.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(last.samples[0].value_ms, 12.0);
  EXPECT_DOUBLE_EQ(first.samples[0].value_ms, 9.0);
}

TEST(FrameMetrics, IncompleteFrameAtAppIsExcluded) {
  auto ue = one_frame_ue();
  Builder app;
  app.seg(8, 0, 72, true, Tap::APP).seg(9, 72, 1400, false, Tap::APP).seg(58, 2000, 72, true, Tap::APP);
  auto r = frame_owd(ue, app.recs, OffsetEstimate{});
  EXPECT_TRUE(r.samples.empty());
  EXPECT_EQ(r.excluded, 1u);
}

TEST(Delivery, CountsUplinkArrivals) {
  std::vector<CaptureRecord> ue{ctrl(Tap::UE, 0, 1), ctrl(Tap::UE, 1, 2), ctrl(Tap::UE, 2, 3)};
  std::vector<CaptureRecord> app{ctrl(Tap::APP, 5, 1), ctrl(Tap::APP, 7, 3)};
  auto d = delivery(ue, app);
  EXPECT_EQ(d.sent, 3u);
  EXPECT_EQ(d.delivered, 2u);
}

TEST(Analyze, NoControlTraffic) {
  auto res = run(video_run(Tech::FIVE_G, Range::EDGE, Resolution::VGA, 1.0));
  auto a = analyze(res.captures);
  EXPECT_TRUE(a.control_rtt.samples.empty());
  EXPECT_EQ(a.frame_owd.samples.size(), 20u);
  EXPECT_EQ(a.frame_latency.samples.size(), 20u);
  EXPECT_EQ(a.owd_command_down.samples.size(), 20u);
  EXPECT_EQ(a.boundaries, 21u);
  ASSERT_TRUE(a.video_estimate);
  EXPECT_NEAR(a.video_estimate->fps, 20.0, 0.01);
}

TEST(Analyze, PacketOwdMatchesTruthWithin1us) {
  auto cfg = video_run(Tech::FIVE_G, Range::REGIONAL, Resolution::VGA, 1.0);
  cfg.scenario.jitter_std_ms = 2.0;
  cfg.workload.pings.count = 50;
  auto res = run(cfg);
  auto a = analyze(res.captures);
  ASSERT_FALSE(a.owd_up.samples.empty());
  for (const auto& s : a.owd_up.samples) {
    const auto* t = res.truth.find(s.pid);
    ASSERT_NE(t, nullptr);
    EXPECT_NEAR(s.value_ms * 1000.0, static_cast<double>(*t->one_way_us()), 1.0);
  }
  for (const auto& s : a.owd_command_down.samples) {
    EXPECT_NEAR(s.value_ms * 1000.0, static_cast<double>(*res.truth.find(s.pid)->one_way_us()), 1.0);
  }
}

TEST(AnalyzeProperty, RoundTripBoundsOneWay) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto cfg = video_run(Tech::FOUR_G, Range::NATIONAL, Resolution::VGA, 1.0);
    cfg.scenario.jitter_std_ms = 1.5;
    cfg.seed = seed;
    auto res = run(cfg);
    auto a = analyze(res.captures);
    std::map<Pid, double> owd;
    for (const auto& s : a.owd_up.samples) owd[s.pid] = s.value_ms;
    ASSERT_FALSE(a.stream_rtt.samples.empty());
    for (const auto& s : a.stream_rtt.samples) EXPECT_GE(s.value_ms, owd.at(s.pid));

    std::map<std::size_t, double> frame_owd;
    for (const auto& f : a.frame_owd.samples) frame_owd[f.idx] = f.value_ms;
    for (const auto& f : a.frame_latency.samples) EXPECT_GE(f.value_ms, frame_owd.at(f.idx));
  }
}

TEST(AnalyzeProperty, FrameOwdMatchesTruth) {
  auto res = run(video_run(Tech::FIVE_G, Range::NATIONAL, Resolution::D1, 1.0));
  auto a = analyze(res.captures);
  ASSERT_EQ(a.frame_owd.samples.size(), res.truth.frames.size());
  for (const auto& f : a.frame_owd.samples) {
    EXPECT_NEAR(f.value_ms * 1000.0, static_cast<double>(*res.truth.frames[f.idx].owd_up_us()), 1.0);
  }
}

TEST(Analyze, RetransmissionsAreExcludedFromStreamRtt) {
  auto cfg = video_run(Tech::FIVE_G, Range::REGIONAL, Resolution::VGA, 2.0);
  cfg.scenario.loss_prob = 0.02;
  cfg.scenario.retransmit = true;
  auto res = run(cfg);
  auto a = analyze(res.captures);
  EXPECT_GT(a.stream_rtt.retransmitted, 0u);
  EXPECT_EQ(a.frame_owd.samples.size(), 40u);
}

TEST(Analyze, BulkGoodput) {
  EmulationRun cfg;
  cfg.scenario = Scenario::make(Tech::FOUR_G, Range::REGIONAL);
  cfg.clocks = ClockModel::perfect();
  cfg.workload.bulk = BulkWorkload{};
  auto a = analyze(run(cfg).captures);
  ASSERT_TRUE(a.bulk_goodput_mbps);
  EXPECT_EQ(a.stream_flow, flows::kBulk);
  EXPECT_FALSE(a.stream_rtt.samples.empty());
}

TEST(Analyze, RejectsBadAlpha) {
  AnalyzerConfig c;
  c.alpha = 0.0;
  EXPECT_THROW(analyze(CaptureSet{}, c), ValidationError);
}

TEST(Analyze, ControlRttRecoversConfiguredDelay) {
  auto a = analyze(run(ping_run(10.0, 5.0, 100)).captures);
  ASSERT_EQ(a.control_rtt.samples.size(), 100u);
  for (const auto& s : a.control_rtt.samples) EXPECT_NEAR(s.value_ms, 15.0, 1e-3);
}
