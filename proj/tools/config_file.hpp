#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace concept_bridge::cli {

/// Bad flags or config file; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// One `key = value` per line; `#` starts a comment; blank lines ignored.
/// Keys are flag names without the leading dashes. Throws UsageError on a
/// malformed line or a repeated key.
std::vector<ConfigEntry> parse_config_text(const std::string& text, const std::string& source);
std::vector<ConfigEntry> read_config_file(const std::string& path);

}  // namespace concept_bridge::cli
