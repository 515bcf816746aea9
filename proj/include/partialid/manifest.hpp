// Copyright 2026 the partial-id authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "json.hpp"
#include "partialid/errors.hpp"

namespace partialid {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << std::setfill('0') << std::setw(16) << fnv1a64(buf.str());
  return out.str();
}

// Every output artifact carries the fully resolved run configuration, so a
// run can be replayed byte-identically from its own output. Execution-only
// knobs (worker pool width) are excluded: they must not change results.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::string library_version = kVersion;
  std::string input_digest;  // empty when the run reads no input file

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["library_version"] = library_version;
    if (!input_digest.empty()) j["input_digest"] = input_digest;
    return j;
  }
};

}  // namespace partialid
