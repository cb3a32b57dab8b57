#include "normnet/config.hpp"

#include <sstream>

#include "normnet/errors.hpp"
#include "normnet/io.hpp"

namespace normnet {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::string* Config::find(const std::string& section, const std::string& key) const {
  for (const Section& s : sections) {
    if (s.name != section) continue;
    for (const auto& [k, v] : s.entries) {
      if (k == key) return &v;
    }
  }
  return nullptr;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  for (Section& s : sections) {
    if (s.name != section) continue;
    for (auto& [k, v] : s.entries) {
      if (k == key) {
        v = value;
        return;
      }
    }
    s.entries.emplace_back(key, value);
    return;
  }
  sections.push_back(Section{section, {{key, value}}});
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw DataError("config line " + std::to_string(lineno) + ": malformed section header");
      }
      current = trim(t.substr(1, t.size() - 2));
      if (current.empty()) {
        throw DataError("config line " + std::to_string(lineno) + ": empty section name");
      }
      // Register the section even if it stays empty.
      bool seen = false;
      for (const auto& s : cfg.sections) seen = seen || s.name == current;
      if (!seen) cfg.sections.push_back(Config::Section{current, {}});
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw DataError("config line " + std::to_string(lineno) + ": empty key");
    }
    cfg.set(current, key, value);
  }
  return cfg;
}

std::string serialize_config(const Config& c) {
  std::ostringstream out;
  bool first = true;
  for (const Config::Section& s : c.sections) {
    if (!first) out << "\n";
    first = false;
    if (!s.name.empty()) out << "[" << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
  }
  return out.str();
}

std::string config_str(const Config& c, const std::string& section, const std::string& key,
                       const std::string& fallback) {
  const std::string* v = c.find(section, key);
  return v ? *v : fallback;
}

long config_int(const Config& c, const std::string& section, const std::string& key,
                long fallback) {
  const std::string* v = c.find(section, key);
  if (!v) return fallback;
  try {
    return parse_long(*v);
  } catch (const DataError&) {
    throw DataError("config [" + section + "] " + key + ": not an integer: " + *v);
  }
}

double config_double(const Config& c, const std::string& section, const std::string& key,
                     double fallback) {
  const std::string* v = c.find(section, key);
  if (!v) return fallback;
  try {
    return parse_double(*v);
  } catch (const DataError&) {
    throw DataError("config [" + section + "] " + key + ": not a number: " + *v);
  }
}

bool config_bool(const Config& c, const std::string& section, const std::string& key,
                 bool fallback) {
  const std::string* v = c.find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw DataError("config [" + section + "] " + key + ": not a boolean: " + *v);
}

}  // namespace normnet
