#pragma once

// Run manifest written alongside every CLI output: command, stable content
// digests of the config and inputs, the effective seed, tool version, and
// timestamps. The manifest lands on disk before the primary outputs do.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "structreward/errors.hpp"

namespace structreward {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64-bit; stable across platforms, good enough to fingerprint inputs
inline std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return "fnv1a64:" + out.str();
}

struct RunManifest {
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;  // path -> digest
  std::string tool_version = kToolVersion;
  std::string started_at;
  std::string finished_at;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config_digest"] = config_digest;
    j["seed"] = seed;
    j["input_digests"] = input_digests;
    j["tool_version"] = tool_version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    return j;
  }
};

inline std::string iso_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace structreward
