#pragma once

#include <string>
#include <utility>
#include <vector>

namespace normnet {

// Ordered line-oriented config: `[section]` headers and `key = value` pairs.
// Parsing then serializing is a fixed point.
struct Config {
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };
  std::vector<Section> sections;

  const std::string* find(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
};

Config parse_config(const std::string& text);
std::string serialize_config(const Config& c);

std::string config_str(const Config& c, const std::string& section, const std::string& key,
                       const std::string& fallback);
long config_int(const Config& c, const std::string& section, const std::string& key,
                long fallback);
double config_double(const Config& c, const std::string& section, const std::string& key,
                     double fallback);
bool config_bool(const Config& c, const std::string& section, const std::string& key,
                 bool fallback);

}  // namespace normnet
