#include "pilotwave/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pw {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty section name");
      c.entries_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": key outside any section");
    if (c.entries_[section].count(key))
      throw ConfigError("config: duplicate key " + section + "." + key);
    c.entries_[section][key] = value;
  }
  return c;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = entries_.find(section);
  return s != entries_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  const auto s = entries_.find(section);
  if (s != entries_.end()) {
    const auto k = s->second.find(key);
    if (k != s->second.end()) return k->second;
  }
  throw ConfigError("config: missing required key " + section + "." + key);
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (trim(v.substr(used)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + section + "." + key + " is not a number: " + v);
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long Config::get_int(const std::string& section, const std::string& key) const {
  const std::string v = get(section, key);
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (trim(v.substr(used)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: " + section + "." + key + " is not an integer: " + v);
}

long long Config::get_int_or(const std::string& section, const std::string& key,
                             long long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool_or(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: " + section + "." + key + " is not a boolean: " + v);
}

std::vector<std::string> Config::get_strings(const std::string& section,
                                             const std::string& key) const {
  std::istringstream is(get(section, key));
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<double> Config::get_doubles(const std::string& section,
                                        const std::string& key) const {
  std::vector<double> out;
  for (const std::string& tok : get_strings(section, key)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("config: " + section + "." + key +
                        " has a non-numeric element: " + tok);
    }
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  entries_[section][key] = value;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  if (section.empty() || key.empty())
    throw ConfigError("override must look like section.key=value: " + assignment);
  set(section, key, trim(assignment.substr(eq + 1)));
}

void Config::validate(
    const std::map<std::string, std::set<std::string>>& allowed) const {
  for (const auto& [section, kv] : entries_) {
    const auto s = allowed.find(section);
    if (s == allowed.end())
      throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : kv) {
      (void)value;
      if (!s->second.count(key))
        throw ConfigError("config: unknown key " + section + "." + key);
    }
  }
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Config::hash() const {
  std::ostringstream canon;
  for (const auto& [section, kv] : entries_)
    for (const auto& [key, value] : kv)
      canon << section << "." << key << "=" << value << "\n";
  return fnv1a64(canon.str());
}

std::string Config::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash()));
  return buf;
}

}  // namespace pw
