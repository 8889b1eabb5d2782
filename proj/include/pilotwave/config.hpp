#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pilotwave/errors.hpp"

namespace pw {

// Flat [section] / key = value text configuration. Values are stored raw;
// list-valued keys are whitespace separated. '#' starts a comment.
class Config {
 public:
  static Config parse_string(const std::string& text);
  static Config parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int_or(const std::string& section, const std::string& key,
                       long long fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const;
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& section,
                                       const std::string& key) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);
  // "section.key=value" form used for command-line overrides.
  void apply_override(const std::string& assignment);

  // Rejects any (section, key) pair absent from `allowed`, which maps a
  // section name to its permitted keys.
  void validate(const std::map<std::string, std::set<std::string>>& allowed) const;

  // FNV-1a over the canonical sorted "section.key=value" lines; recorded in
  // output manifests so artifacts can be traced to an exact configuration.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  const std::map<std::string, std::map<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> entries_;
};

std::uint64_t fnv1a64(const std::string& data);

}  // namespace pw
