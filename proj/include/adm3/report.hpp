#pragma once

#include <string>

#include "json.hpp"

namespace adm3::io {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "adm3 0.1.0";

// Sorted keys, two-space indent, floating-point numbers with 17 significant
// digits. Non-finite numbers become null.
std::string dump_json(const Json& j);

struct Report {
  std::string command;
  Json inputs = Json::object();   // every parameter and tolerance used
  Json results = Json::object();
  std::string version = kToolVersion;

  // FNV-1a 64 of dump_json(inputs), as 16 hex digits.
  std::string digest() const;
  Json to_json() const;
  static Report from_json(const Json& j);
};

std::string write_report(const Report& r);
// Throws nlohmann::json::exception on malformed text or missing keys.
Report parse_report(const std::string& text);

}  // namespace adm3::io
