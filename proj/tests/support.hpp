#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>
#include <string>

#include "edgelat/emulator.hpp"

namespace edgelat::fixture {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("edgelat-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& f) const { return path_ / f; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Pings only, no jitter, no loss, no cap, perfect clocks.
inline EmulationRun ping_run(double up_ms, double down_ms, int count, double interval_ms = 10.0) {
  EmulationRun run;
  run.scenario = Scenario::make(Tech::FIVE_G, Range::EDGE);
  run.scenario.base_owd_up_ms = up_ms;
  run.scenario.base_owd_down_ms = down_ms;
  run.scenario.bandwidth_cap_mbps = kUncapped;
  run.clocks = ClockModel::perfect();
  run.workload.pings.count = count;
  run.workload.pings.interval_ms = interval_ms;
  return run;
}

inline EmulationRun video_run(Tech tech, Range range, Resolution res, double duration_s) {
  EmulationRun run;
  run.scenario = Scenario::make(tech, range);
  run.clocks = ClockModel::perfect();
  run.workload.video = VideoWorkload{VideoConfig::defaults(Encoder::MJPEG, res), duration_s, true};
  return run;
}

}  // namespace edgelat::fixture
