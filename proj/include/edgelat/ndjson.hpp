#pragma once

// Canonical NDJSON encoding of capture records and clock-offset samples.
//
// One JSON object per line. Capture records carry exactly the keys
// tap, t_us, flow, dir, proto, seq, ack, len, marker, pid in that order, with
// enums as uppercase strings. Writers format by hand so that output bytes are
// a pure function of the values.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "edgelat/model.hpp"
#include "json.hpp"

namespace edgelat::ndjson {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "null";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string out(buf, res.ptr);
  // Keep JSON numbers recognizably floating point.
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

inline std::string encode(const CaptureRecord& r) {
  std::string s;
  s.reserve(160);
  s += "{\"tap\":\"";
  s += to_string(r.tap);
  s += "\",\"t_us\":";
  s += std::to_string(r.t_us);
  s += ",\"flow\":";
  s += std::to_string(r.flow);
  s += ",\"dir\":\"";
  s += to_string(r.dir);
  s += "\",\"proto\":\"";
  s += to_string(r.proto);
  s += "\",\"seq\":";
  s += std::to_string(r.seq);
  s += ",\"ack\":";
  s += std::to_string(r.ack);
  s += ",\"len\":";
  s += std::to_string(r.len);
  s += ",\"marker\":\"";
  s += to_string(r.marker);
  s += "\",\"pid\":";
  s += std::to_string(r.pid);
  s += "}";
  return s;
}

inline std::string encode(const NtpSample& n) {
  return "{\"node\":\"" + std::string(to_string(n.node)) + "\",\"t_us\":" + std::to_string(n.t_us) +
         ",\"offset_ms\":" + format_double(n.offset_ms) + "}";
}

namespace detail {

template <typename E>
E enum_field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw MalformedCapture(std::string("field '") + key + "' must be a string");
  auto parsed = parse_enum<E>(v.get<std::string>());
  if (!parsed)
    throw MalformedCapture(std::string("field '") + key + "' has unknown value '" +
                           v.get<std::string>() + "'");
  return *parsed;
}

template <typename I>
I int_field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw MalformedCapture(std::string("field '") + key + "' must be an integer");
  if constexpr (std::is_unsigned_v<I>) {
    if (v.is_number_unsigned()) return static_cast<I>(v.get<std::uint64_t>());
    auto s = v.get<std::int64_t>();
    if (s < 0) throw MalformedCapture(std::string("field '") + key + "' must be non-negative");
    return static_cast<I>(s);
  } else {
    return static_cast<I>(v.get<std::int64_t>());
  }
}

inline nlohmann::json parse_object(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw MalformedCapture("invalid JSON");
  if (!j.is_object()) throw MalformedCapture("expected a JSON object");
  return j;
}

}  // namespace detail

inline CaptureRecord decode_record(std::string_view line) {
  auto j = detail::parse_object(line);
  static constexpr const char* kKeys[] = {"tap", "t_us", "flow", "dir", "proto",
                                          "seq", "ack",  "len",  "marker", "pid"};
  for (const char* k : kKeys) {
    if (!j.contains(k)) throw MalformedCapture(std::string("missing field '") + k + "'");
  }
  CaptureRecord r;
  r.tap = detail::enum_field<Tap>(j, "tap");
  r.t_us = detail::int_field<TimeUs>(j, "t_us");
  r.flow = detail::int_field<std::uint32_t>(j, "flow");
  r.dir = detail::enum_field<Direction>(j, "dir");
  r.proto = detail::enum_field<Proto>(j, "proto");
  r.seq = detail::int_field<std::uint64_t>(j, "seq");
  r.ack = detail::int_field<std::uint64_t>(j, "ack");
  r.len = detail::int_field<std::int64_t>(j, "len");
  r.marker = detail::enum_field<Marker>(j, "marker");
  r.pid = detail::int_field<Pid>(j, "pid");
  return r;
}

inline NtpSample decode_ntp(std::string_view line) {
  auto j = detail::parse_object(line);
  NtpSample n;
  n.node = detail::enum_field<Tap>(j, "node");
  n.t_us = detail::int_field<TimeUs>(j, "t_us");
  const auto& off = j.at("offset_ms");
  if (!off.is_number()) throw MalformedCapture("field 'offset_ms' must be a number");
  n.offset_ms = off.get<double>();
  return n;
}

/// Applies `decode` to every non-blank line of a file. Errors carry
/// "<file>:<line>:" so a corrupted capture can be located.
template <typename Decode>
auto read_lines(const std::filesystem::path& path, Decode decode) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<decltype(decode(std::string_view{}))> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(decode(line));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedCapture(path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const MalformedCapture& e) {
      throw MalformedCapture(path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<CaptureRecord> read_captures(const std::filesystem::path& path) {
  return read_lines(path, [](std::string_view l) { return decode_record(l); });
}

inline std::vector<NtpSample> read_ntp(const std::filesystem::path& path) {
  return read_lines(path, [](std::string_view l) { return decode_ntp(l); });
}

template <typename T>
void write_lines(const std::filesystem::path& path, const std::vector<T>& items) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& item : items) {
    out << encode(item) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

inline constexpr const char* kUeFile = "ue.ndjson";
inline constexpr const char* kCoreFile = "core.ndjson";
inline constexpr const char* kAppFile = "app.ndjson";
inline constexpr const char* kNtpFile = "ntp.ndjson";
inline constexpr const char* kTruthFile = "truth.ndjson";

inline const char* tap_file(Tap tap) {
  return tap == Tap::UE ? kUeFile : tap == Tap::CORE ? kCoreFile : kAppFile;
}

inline void write_capture_set(const std::filesystem::path& dir, const CaptureSet& set) {
  for (Tap tap : kAllTaps) write_lines(dir / tap_file(tap), set.at(tap));
  write_lines(dir / kNtpFile, set.ntp);
}

/// Reads the three tap files (each required) and the clock-offset trace
/// (optional). Every record's tap field must match the file it came from.
inline CaptureSet read_capture_set(const std::filesystem::path& dir) {
  CaptureSet set;
  for (Tap tap : kAllTaps) {
    auto path = dir / tap_file(tap);
    if (!std::filesystem::exists(path)) throw Error("missing tap file: " + path.string());
    set.at(tap) = read_captures(path);
    for (std::size_t i = 0; i < set.at(tap).size(); ++i) {
      if (set.at(tap)[i].tap != tap)
        throw MalformedCapture(std::string(tap_file(tap)) + ": record " + std::to_string(i) +
                               " has tap " + std::string(to_string(set.at(tap)[i].tap)));
    }
  }
  if (std::filesystem::exists(dir / kNtpFile)) set.ntp = read_ntp(dir / kNtpFile);
  return set;
}

}  // namespace edgelat::ndjson
