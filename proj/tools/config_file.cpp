#include "config_file.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace concept_bridge::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<ConfigEntry> parse_config_text(const std::string& text, const std::string& source) {
  std::vector<ConfigEntry> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(number) + ": expected `key = value`");
    }
    ConfigEntry entry{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), number};
    if (entry.key.starts_with("--")) entry.key.erase(0, 2);
    if (entry.key.empty()) throw UsageError(source + ":" + std::to_string(number) + ": empty key");
    if (!seen.insert(entry.key).second) {
      throw UsageError(source + ":" + std::to_string(number) + ": key '" + entry.key + "' repeated");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace concept_bridge::cli
