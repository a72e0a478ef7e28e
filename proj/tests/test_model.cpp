#include <gtest/gtest.h>

#include <random>

#include "edgelat/model.hpp"
#include "edgelat/ndjson.hpp"
#include "support.hpp"

using namespace edgelat;

namespace {

CaptureRecord data(Pid pid, std::uint64_t seq, std::int64_t len, Tap tap = Tap::UE) {
  CaptureRecord r;
  r.tap = tap;
  r.flow = flows::kVideo;
  r.proto = Proto::STREAM;
  r.seq = seq;
  r.len = len;
  r.pid = pid;
  return r;
}

CaptureRecord random_record(std::mt19937_64& rng) {
  CaptureRecord r;
  r.tap = static_cast<Tap>(rng() % 3);
  r.t_us = static_cast<TimeUs>(rng() >> 4) - (TimeUs{1} << 58);
  r.flow = static_cast<std::uint32_t>(rng());
  r.dir = static_cast<Direction>(rng() % 2);
  r.proto = static_cast<Proto>(rng() % 2);
  r.seq = rng();
  r.ack = rng();
  r.len = static_cast<std::int64_t>(rng() >> 2);
  r.marker = static_cast<Marker>(rng() % 2);
  r.pid = rng();
  return r;
}

}  // namespace

TEST(Enums, RoundTripThroughNames) {
  for (auto [v, name] : EnumNames<Range>::table) EXPECT_EQ(parse_enum<Range>(name), v);
  EXPECT_EQ(to_string(Tech::FIVE_G), "FIVE_G");
  EXPECT_EQ(to_string(Marker::FRAME_BOUNDARY), "FRAME_BOUNDARY");
  EXPECT_FALSE(parse_enum<Tap>("ue").has_value());
}

TEST(ReplyPid, TagRoundTrip) {
  EXPECT_TRUE(is_reply_pid(reply_pid_for(42)));
  EXPECT_FALSE(is_reply_pid(42));
  EXPECT_EQ(request_pid_of(reply_pid_for(42)), 42u);
}

TEST(CaptureValidation, AcceptsRetransmittedSeq) {
  std::vector<CaptureRecord> v{data(1, 0, 1400), data(2, 1400, 1400), data(3, 0, 1400)};
  EXPECT_TRUE(validate(v));
}

TEST(CaptureValidation, RejectsSeqRegressionAtOrigin) {
  std::vector<CaptureRecord> v{data(1, 2800, 1400), data(2, 1400, 1400)};
  auto res = validate(v);
  EXPECT_FALSE(res);
  EXPECT_EQ(res.index, 1u);
  EXPECT_NE(res.message.find("regression"), std::string::npos);
}

TEST(CaptureValidation, ReorderingAtFarTapIsFine) {
  std::vector<CaptureRecord> v{data(1, 2800, 1400, Tap::APP), data(2, 1400, 1400, Tap::APP)};
  EXPECT_TRUE(validate(v));
}

TEST(CaptureValidation, RejectsDuplicatePidNegativeLenAndEmptyMarker) {
  EXPECT_FALSE(validate({data(1, 0, 10), data(1, 10, 10)}));
  EXPECT_FALSE(validate({data(1, 0, -1)}));
  auto m = data(1, 0, 0);
  m.marker = Marker::FRAME_BOUNDARY;
  EXPECT_FALSE(validate({m}));
}

TEST(CaptureValidation, SamePidOnDifferentTapsIsFine) {
  EXPECT_TRUE(validate({data(1, 0, 10, Tap::UE), data(1, 0, 10, Tap::APP)}));
}

TEST(Scenario, TechnologyDefaults) {
  auto s5 = Scenario::make(Tech::FIVE_G, Range::EDGE);
  EXPECT_DOUBLE_EQ(s5.base_owd_up_ms, 8.0);
  EXPECT_DOUBLE_EQ(s5.base_owd_down_ms, 4.0);
  EXPECT_DOUBLE_EQ(s5.bandwidth_cap_mbps, 54.6);
  auto s4 = Scenario::make(Tech::FOUR_G, Range::NATIONAL);
  EXPECT_DOUBLE_EQ(s4.bandwidth_cap_mbps, 32.2);
  EXPECT_DOUBLE_EQ(s4.added_owd(), 4.0);
  EXPECT_EQ(s4.label(), "4G National");
  EXPECT_DOUBLE_EQ(Scenario::make(Tech::FIVE_G, Range::REGIONAL).added_owd(), 2.0);
}

TEST(Scenario, EdgeRequiresFiveG) {
  EXPECT_THROW(Scenario::make(Tech::FOUR_G, Range::EDGE), ValidationError);
  try {
    Scenario::make(Tech::FOUR_G, Range::EDGE);
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported scenario"), std::string::npos);
  }
}

TEST(Scenario, RejectsBadParameters) {
  auto s = Scenario::make(Tech::FIVE_G, Range::EDGE);
  s.loss_prob = 1.5;
  EXPECT_THROW(s.validate(), ValidationError);
  s.loss_prob = 0.0;
  s.jitter_std_ms = -1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s.jitter_std_ms = 0.0;
  s.bandwidth_cap_mbps = 0.0;
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(VideoConfig, DefaultFrameSizes) {
  EXPECT_DOUBLE_EQ(VideoConfig::defaults(Encoder::MJPEG, Resolution::VGA).mean_frame_bytes, 120000.0);
  EXPECT_DOUBLE_EQ(VideoConfig::defaults(Encoder::MJPEG, Resolution::HD).mean_frame_bytes, 340000.0);
  EXPECT_DOUBLE_EQ(VideoConfig::defaults(Encoder::H264, Resolution::D1).mean_frame_bytes, 55000.0);
  EXPECT_EQ(pixels(Resolution::HD), std::make_pair(1280, 720));
  VideoConfig v;
  v.fps = 0;
  EXPECT_THROW(v.validate(), ValidationError);
}

TEST(ProcessingModel, DefaultStages) {
  ProcessingModel p;
  EXPECT_DOUBLE_EQ(p.tau_total_ms(), 20.3);
  EXPECT_EQ(p.response_bytes(), 64);
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) sum += p.stage_ms(i);
  EXPECT_NEAR(sum, 20.3, 1e-12);
}

TEST(ProcessingModel, RejectsFractionsNotSummingToOne) {
  EXPECT_THROW(ProcessingModel(20.3, {0.5, 0.5, 0.5, 0.0}, 64), ValidationError);
  EXPECT_THROW(ProcessingModel(-1.0, ProcessingModel::kDefaultFractions, 64), ValidationError);
  EXPECT_THROW(ProcessingModel(20.3, ProcessingModel::kDefaultFractions, 0), ValidationError);
}

TEST(ClockModel, Validation) {
  ClockModel c;
  EXPECT_NO_THROW(c.validate());
  c.sigma_ms[1] = -0.1;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_EQ(ClockModel::perfect().sigma_ms, (std::array<double, 3>{0, 0, 0}));
}

TEST(Ndjson, EncodesFixedKeyOrder) {
  CaptureRecord r = data(9, 72, 1400);
  r.t_us = 308;
  EXPECT_EQ(ndjson::encode(r),
            "{\"tap\":\"UE\",\"t_us\":308,\"flow\":2,\"dir\":\"UPLINK\",\"proto\":\"STREAM\",\"seq\":72,"
            "\"ack\":0,\"len\":1400,\"marker\":\"NONE\",\"pid\":9}");
}

TEST(Ndjson, FormatDouble) {
  EXPECT_EQ(ndjson::format_double(3.0), "3.0");
  EXPECT_EQ(ndjson::format_double(0.1), "0.1");
  EXPECT_EQ(ndjson::format_double(1e300), "1e+300");
}

TEST(NdjsonProperty, RecordRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto r = random_record(rng);
    EXPECT_EQ(ndjson::decode_record(ndjson::encode(r)), r);
  }
}

TEST(NdjsonProperty, NtpRoundTrip) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> off(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    NtpSample s{static_cast<Tap>(rng() % 3), static_cast<TimeUs>(rng() >> 8), off(rng)};
    EXPECT_EQ(ndjson::decode_ntp(ndjson::encode(s)), s);
  }
}

TEST(Ndjson, DecodeRejectsMissingKeysAndBadEnums) {
  EXPECT_THROW(ndjson::decode_record("{\"tap\":\"UE\"}"), MalformedCapture);
  auto good = ndjson::encode(data(1, 0, 10));
  auto bad = good;
  bad.replace(bad.find("\"UE\""), 4, "\"XX\"");
  EXPECT_THROW(ndjson::decode_record(bad), MalformedCapture);
  EXPECT_THROW(ndjson::decode_record("not json"), MalformedCapture);
}

TEST(Ndjson, ReadReportsLineNumber) {
  fixture::TempDir dir("ndjson");
  auto line = ndjson::encode(data(1, 0, 10));
  fixture::spit(dir / "ue.ndjson", line + "\n" + line + "\n{broken\n");
  try {
    ndjson::read_captures(dir / "ue.ndjson");
    FAIL() << "expected MalformedCapture";
  } catch (const MalformedCapture& e) {
    EXPECT_NE(std::string(e.what()).find("ue.ndjson:3:"), std::string::npos) << e.what();
  }
}

TEST(Ndjson, CaptureSetRoundTripAndMissingFile) {
  fixture::TempDir dir("set");
  CaptureSet set;
  set.ue = {data(1, 0, 10, Tap::UE)};
  set.core = {data(1, 0, 10, Tap::CORE)};
  set.app = {data(1, 0, 10, Tap::APP)};
  set.ntp = {{Tap::UE, 0, 0.25}, {Tap::APP, 0, -0.5}};
  ndjson::write_capture_set(dir.path(), set);
  auto back = ndjson::read_capture_set(dir.path());
  EXPECT_EQ(back.ue, set.ue);
  EXPECT_EQ(back.app, set.app);
  EXPECT_EQ(back.ntp, set.ntp);

  std::filesystem::remove(dir / "core.ndjson");
  try {
    ndjson::read_capture_set(dir.path());
    FAIL() << "expected missing file error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("core.ndjson"), std::string::npos);
  }
}

TEST(Ndjson, TapFieldMustMatchFile) {
  fixture::TempDir dir("tapmismatch");
  CaptureSet set;
  set.ue = {data(1, 0, 10, Tap::APP)};
  ndjson::write_capture_set(dir.path(), set);
  EXPECT_THROW(ndjson::read_capture_set(dir.path()), MalformedCapture);
}
