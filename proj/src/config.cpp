#include "qfusion/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "qfusion/csv.hpp"

namespace qfusion {

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(key.empty() ? message : "'" + key + "': " + message), key_(std::move(key)) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues parse_config(std::istream& is) {
  KeyValues out;
  std::set<std::string> seen;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line) + ": expected 'key = value'");
    }
    ConfigEntry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError("", "line " + std::to_string(line) + ": missing key");
    if (!seen.insert(e.key).second) throw ConfigError(e.key, "duplicate key");
    out.push_back(std::move(e));
  }
  return out;
}

KeyValues load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path.string() + "'");
  return parse_config(in);
}

void write_config(std::ostream& os, const KeyValues& entries) {
  for (const auto& e : entries) os << e.key << " = " << e.value << '\n';
}

namespace config {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(trim(value.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const ConfigEntry& e) {
  try {
    return csv::parse_double(e.value);
  } catch (const std::exception&) {
    throw ConfigError(e.key, "expected a number, got '" + e.value + "'");
  }
}

long long to_int(const ConfigEntry& e) {
  long long v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec == std::errc() && ptr == end && !e.value.empty()) return v;
  // Accept integral values in floating notation ("1e5").
  double d = 0.0;
  try {
    d = csv::parse_double(e.value);
  } catch (const std::exception&) {
    throw ConfigError(e.key, "expected an integer, got '" + e.value + "'");
  }
  if (!(std::fabs(d) < 9.0e15) || d != std::floor(d)) {
    throw ConfigError(e.key, "expected an integer, got '" + e.value + "'");
  }
  return static_cast<long long>(d);
}

std::uint64_t to_u64(const ConfigEntry& e) {
  std::uint64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end || e.value.empty()) {
    throw ConfigError(e.key, "expected a nonnegative integer, got '" + e.value + "'");
  }
  return v;
}

std::vector<double> to_doubles(const ConfigEntry& e) {
  std::vector<double> out;
  for (const auto& item : split_list(e.value)) {
    try {
      out.push_back(csv::parse_double(item));
    } catch (const std::exception&) {
      throw ConfigError(e.key, "expected a list of numbers, got '" + e.value + "'");
    }
  }
  return out;
}

}  // namespace config

}  // namespace qfusion
