#include "hctn/config.hpp"

#include <fstream>
#include <sstream>

#include "hctn/errors.hpp"

namespace hctn {

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line is not key=value", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("config line has empty key", line_no);
    cfg.values_[key] = value;
  }
  return cfg;
}

const std::string& ConfigFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string ConfigFile::get_or(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const std::invalid_argument&) {
    throw ConfigError("config key '" + key + "' is not numeric");
  }
}

long long ConfigFile::get_int(const std::string& key) const {
  try {
    return std::stoll(get(key));
  } catch (const std::invalid_argument&) {
    throw ConfigError("config key '" + key + "' is not an integer");
  }
}

}  // namespace hctn
