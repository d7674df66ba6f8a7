#include "ceitr/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ceitr/csv.hpp"

namespace ceitr::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty key");
    }
    if (section.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": key outside any [section]");
    }
    cfg.values_[section + "." + key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& path) const {
  return values_.count(path) > 0;
}

void Config::set(const std::string& path, const std::string& value) {
  values_[path] = value;
}

std::string Config::get_string(const std::string& path,
                               const std::string& fallback) const {
  const auto it = values_.find(path);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& path, double fallback) const {
  const auto it = values_.find(path);
  return it == values_.end() ? fallback : csv::parse_double(it->second);
}

std::int64_t Config::get_int(const std::string& path,
                             std::int64_t fallback) const {
  const auto it = values_.find(path);
  return it == values_.end() ? fallback : csv::parse_int(it->second);
}

bool Config::get_bool(const std::string& path, bool fallback) const {
  const auto it = values_.find(path);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config value '" + v + "' at " + path +
                           " is not a boolean");
}

}  // namespace ceitr::config
