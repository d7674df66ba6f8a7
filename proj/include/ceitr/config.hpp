#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace ceitr::config {

// Sectioned key-value configuration, e.g.
//   [ce]
//   lambda = 50000    # currency per life-year
// Lookups take "section.key" paths; CLI flags override file values by
// calling set() after load.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& path) const;
  void set(const std::string& path, const std::string& value);

  std::string get_string(const std::string& path,
                         const std::string& fallback) const;
  double get_double(const std::string& path, double fallback) const;
  std::int64_t get_int(const std::string& path, std::int64_t fallback) const;
  bool get_bool(const std::string& path, bool fallback) const;

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> value
};

}  // namespace ceitr::config
