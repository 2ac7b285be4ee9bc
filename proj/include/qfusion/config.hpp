#pragma once
// Flat key = value configuration text.
//
//   # comment
//   m = 20
//   p_fa_grid = 0.05, 0.1, 0.2
//
// Keys are unique; lists are comma separated; an empty value is an empty list.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace qfusion {

/// Any configuration problem; key() names the offending key (empty for syntax errors).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message);
  [[nodiscard]] const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

using KeyValues = std::vector<ConfigEntry>;

KeyValues parse_config(std::istream& is);
KeyValues load_config(const std::filesystem::path& path);
void write_config(std::ostream& os, const KeyValues& entries);

namespace config {

std::vector<std::string> split_list(const std::string& value);

double to_double(const ConfigEntry& e);
long long to_int(const ConfigEntry& e);
std::uint64_t to_u64(const ConfigEntry& e);
std::vector<double> to_doubles(const ConfigEntry& e);

}  // namespace config

}  // namespace qfusion
