#pragma once

#include <charconv>
#include <string>

namespace concept_bridge::detail {

/// Shortest decimal that round-trips the double exactly.
inline std::string full_precision(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// CSV field quoting for ids that may contain commas or quotes.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace concept_bridge::detail
