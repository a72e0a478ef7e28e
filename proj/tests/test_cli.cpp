#include <gtest/gtest.h>

#include <sstream>

#include "edgelat/cli.hpp"
#include "support.hpp"

using namespace edgelat;
using fixture::slurp;
using fixture::spit;
using fixture::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "edgelat");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kSmallConfig = R"([scenario]
tech = FIVE_G
range = REGIONAL
jitter_std = 0.5

[video]
duration = 1

[workload]
ping_count = 20
ping_interval = 50
)";

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"simulate", "--out", "x"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
}

TEST(Cli, SimulateWritesCapturesAndManifest) {
  TempDir dir("cli-sim");
  spit(dir / "run.ini", kSmallConfig);
  auto r = run_cli({"simulate", "--config", (dir / "run.ini").string(), "--seed", "3", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"ue.ndjson", "core.ndjson", "app.ndjson", "truth.ndjson", "ntp.ndjson", "manifest.ini"})
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
  const auto manifest = slurp(dir / "out" / "manifest.ini");
  EXPECT_NE(manifest.find("seed = 3"), std::string::npos);
  EXPECT_NE(manifest.find("sigma_a = 0.387"), std::string::npos);
  EXPECT_NE(manifest.find("bandwidth_cap = 54.6"), std::string::npos);
}

TEST(Cli, SimulateRejectsEdgeOnFourG) {
  TempDir dir("cli-edge");
  spit(dir / "bad.ini", "[scenario]\ntech = FOUR_G\nrange = EDGE\n");
  auto r = run_cli({"simulate", "--config", (dir / "bad.ini").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("unsupported scenario"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(Cli, SimulateReportsConfigLine) {
  TempDir dir("cli-line");
  spit(dir / "bad.ini", "[scenario]\ntech = FIVE_G\n\n[video]\nfps = fast\n");
  auto r = run_cli({"simulate", "--config", (dir / "bad.ini").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("bad.ini: line 5"), std::string::npos) << r.err;
}

TEST(Cli, SimulateIsDeterministicAndManifestReproduces) {
  TempDir dir("cli-det");
  spit(dir / "run.ini", kSmallConfig);
  const auto cfg = (dir / "run.ini").string();
  ASSERT_EQ(run_cli({"simulate", "--config", cfg, "--seed", "9", "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "--config", cfg, "--seed", "9", "--out", (dir / "b").string()}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "--config", (dir / "a" / "manifest.ini").string(), "--out", (dir / "c").string()}).code,
            0);
  for (const char* f : {"ue.ndjson", "core.ndjson", "app.ndjson", "truth.ndjson", "ntp.ndjson", "manifest.ini"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "c" / f)) << f;
  }
}

TEST(Cli, RefusesToOverwriteWithoutFlag) {
  TempDir dir("cli-over");
  spit(dir / "run.ini", kSmallConfig);
  const auto cfg = (dir / "run.ini").string();
  const auto out = (dir / "out").string();
  ASSERT_EQ(run_cli({"simulate", "--config", cfg, "--out", out}).code, 0);
  auto again = run_cli({"simulate", "--config", cfg, "--out", out});
  EXPECT_EQ(again.code, cli::kUsage);
  EXPECT_NE(again.err.find("--overwrite"), std::string::npos);
  EXPECT_EQ(run_cli({"simulate", "--config", cfg, "--out", out, "--overwrite"}).code, 0);
}

TEST(Cli, AnalyzeProducesReportsIdempotently) {
  TempDir dir("cli-ana");
  spit(dir / "run.ini", kSmallConfig);
  const auto cap = (dir / "cap").string();
  ASSERT_EQ(run_cli({"simulate", "--config", (dir / "run.ini").string(), "--out", cap}).code, 0);
  auto r = run_cli({"analyze", "--in", cap, "--out", (dir / "r1").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(run_cli({"analyze", "--in", cap, "--out", (dir / "r2").string()}).code, 0);
  for (const char* f : {"samples.ndjson", "report.csv", "report.ndjson"})
    EXPECT_EQ(slurp(dir / "r1" / f), slurp(dir / "r2" / f)) << f;
  const auto csv = slurp(dir / "r1" / "report.csv");
  for (const char* cls : {",CTRL,median,", ",STREAM_PACKET,median,", ",STREAM_FRAME,median,", ",OWD_FRAME_UP,p95,"})
    EXPECT_NE(csv.find(cls), std::string::npos) << cls;
  EXPECT_EQ(csv.find("absent"), std::string::npos);
}

TEST(Cli, AnalyzeFlagsChangeOutputs) {
  TempDir dir("cli-flags");
  spit(dir / "run.ini", kSmallConfig);
  const auto cap = (dir / "cap").string();
  ASSERT_EQ(run_cli({"simulate", "--config", (dir / "run.ini").string(), "--out", cap}).code, 0);
  ASSERT_EQ(run_cli({"analyze", "--in", cap, "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run_cli({"analyze", "--in", cap, "--out", (dir / "b").string(), "--alpha", "0.5", "--match", "seq",
                 "--frame-owd", "first-first"})
                .code,
            0);
  EXPECT_NE(slurp(dir / "a" / "report.csv"), slurp(dir / "b" / "report.csv"));
  EXPECT_EQ(run_cli({"analyze", "--in", cap, "--match", "bytes"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"analyze", "--in", cap, "--alpha", "0", "--overwrite"}).code, cli::kUsage);
}

TEST(Cli, AnalyzeWithoutControlTraffic) {
  TempDir dir("cli-noctrl");
  spit(dir / "run.ini", "[video]\nduration = 1\n[workload]\nping_count = 0\n");
  const auto cap = (dir / "cap").string();
  ASSERT_EQ(run_cli({"simulate", "--config", (dir / "run.ini").string(), "--out", cap}).code, 0);
  auto r = run_cli({"analyze", "--in", cap});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir / "cap" / "report.csv").find("CTRL,status,absent"), std::string::npos);
}

TEST(Cli, AnalyzeReportsCorruptLineAndMissingFile) {
  TempDir dir("cli-bad");
  spit(dir / "run.ini", kSmallConfig);
  const auto cap = dir / "cap";
  ASSERT_EQ(run_cli({"simulate", "--config", (dir / "run.ini").string(), "--out", cap.string()}).code, 0);

  const auto original = slurp(cap / "ue.ndjson");
  auto ue = lines_of(original);
  ue[6] = "{\"tap\":\"UE\",\"t_us\":oops}";
  std::string text;
  for (const auto& l : ue) text += l + "\n";
  spit(cap / "ue.ndjson", text);
  auto r = run_cli({"analyze", "--in", cap.string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("ue.ndjson:7"), std::string::npos) << r.err;

  spit(cap / "ue.ndjson", original);
  std::filesystem::remove(cap / "app.ndjson");
  r = run_cli({"analyze", "--in", cap.string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("app.ndjson"), std::string::npos) << r.err;
}

TEST(Cli, SweepWritesComparisonTable) {
  TempDir dir("cli-sweep");
  spit(dir / "run.ini", "[video]\nduration = 2\n[workload]\nping_count = 20\n");
  auto r = run_cli({"sweep", "--config", (dir / "run.ini").string(), "--out", (dir / "sw").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = lines_of(slurp(dir / "sw" / "comparison.csv"));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].substr(0, rows[0].find(',', rows[0].find(',') + 1)), "scenario,tech");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].find("absent"), std::string::npos) << rows[i];
  for (const char* sub : {"5g-edge", "5g-regional", "5g-national", "4g-regional", "4g-national"})
    EXPECT_TRUE(std::filesystem::exists(dir / "sw" / sub / "report.csv")) << sub;
  EXPECT_TRUE(std::filesystem::exists(dir / "sw" / "sweep_samples.ndjson"));
}

TEST(Cli, PlotKinds) {
  TempDir dir("cli-plot");
  std::string samples;
  for (int i = 1; i <= 100; ++i)
    samples += "{\"class\":\"OWD_FRAME_UP\",\"idx\":" + std::to_string(i) + ",\"value_ms\":" + std::to_string(i) + "}\n";
  spit(dir / "s.ndjson", samples);
  const auto in = (dir / "s.ndjson").string();

  EXPECT_EQ(run_cli({"plot", "--kind", "cdf", "--in", in, "--out", (dir / "cdf.svg").string()}).code, 0);
  EXPECT_NE(slurp(dir / "cdf.svg").find("class=\"cdf\""), std::string::npos);
  EXPECT_EQ(run_cli({"plot", "--kind", "box", "--in", in, "--out", (dir / "box.svg").string()}).code, 0);
  const auto box = slurp(dir / "box.svg");
  EXPECT_EQ(box.find("class=\"box\""), box.rfind("class=\"box\""));
  EXPECT_EQ(run_cli({"plot", "--kind", "throughput", "--out", (dir / "tp.svg").string()}).code, 0);
  const auto tp = slurp(dir / "tp.svg");
  EXPECT_NE(tp.find("data-cap=\"32.2\""), std::string::npos);
  EXPECT_NE(tp.find("data-cap=\"54.6\""), std::string::npos);
  EXPECT_EQ(run_cli({"plot", "--kind", "cdf", "--in", in, "--out", (dir / "cdf.txt").string(), "--ascii"}).code, 0);
  EXPECT_EQ(slurp(dir / "cdf.txt").find("<svg"), std::string::npos);

  auto bad = run_cli({"plot", "--kind", "pie", "--in", in, "--out", (dir / "pie.svg").string()});
  EXPECT_EQ(bad.code, cli::kUsage);
  EXPECT_NE(bad.err.find("unknown plot kind"), std::string::npos);
  EXPECT_EQ(run_cli({"plot", "--kind", "cdf", "--in", in, "--out", (dir / "cdf.svg").string()}).code, cli::kUsage);
}

TEST(Cli, SelftestPasses) {
  auto r = run_cli({"selftest"});
  EXPECT_EQ(r.code, cli::kOk) << r.out;
  EXPECT_NE(r.out.find("6/6 oracles passed"), std::string::npos) << r.out;
}

TEST(Cli, SelftestOutputNamesFailures) {
  std::ostringstream out;
  auto results = selftest::run_all({0.5, 7});
  cli::print_selftest(results, out);
  EXPECT_FALSE(selftest::all_pass(results));
  EXPECT_NE(out.str().find("FAIL srtt-recurrence"), std::string::npos);
}
