#pragma once

#include <map>
#include <string>

namespace hctn {

/// Flat "key=value" config text with '#' comments and blank lines.
/// Values stay strings; callers convert. Duplicate keys keep the last.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile load(const std::string& path);
  static ConfigFile parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  const std::map<std::string, std::string>& all() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace hctn
