#include "lccal/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lccal {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig config;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
    config.values_[key] = trim(line.substr(eq + 1));
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string KeyValueConfig::toString() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

void KeyValueConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << toString();
}

void KeyValueConfig::set(const std::string& key, double value) {
  std::ostringstream out;
  out << std::setprecision(17) << value;
  values_[key] = out.str();
}

void KeyValueConfig::set(const std::string& key, std::int64_t value) {
  values_[key] = std::to_string(value);
}

void KeyValueConfig::merge(const KeyValueConfig& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

std::optional<std::string> KeyValueConfig::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::getString(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double KeyValueConfig::getDouble(const std::string& key, double fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v->c_str(), &end);
  if (v->empty() || end != v->c_str() + v->size() || errno == ERANGE) {
    throw ConfigError("config key '" + key + "': expected a real, got '" + *v + "'");
  }
  return x;
}

std::int64_t KeyValueConfig::getInt(const std::string& key, std::int64_t fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  errno = 0;
  const long long x = std::strtoll(v->c_str(), &end, 10);
  if (v->empty() || end != v->c_str() + v->size() || errno == ERANGE) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + *v + "'");
  }
  return x;
}

bool KeyValueConfig::getBool(const std::string& key, bool fallback) const {
  auto v = find(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<double> KeyValueConfig::getDoubles(const std::string& key,
                                               const std::vector<double>& fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  std::string s = *v;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    const double x = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      throw ConfigError("config key '" + key + "': malformed list value '" + token + "'");
    }
    out.push_back(x);
  }
  return out;
}

CameraIntrinsics intrinsicsFromConfig(const KeyValueConfig& config) {
  CameraIntrinsics k;
  k.fx = config.getDouble("fx", k.fx);
  k.fy = config.getDouble("fy", k.fy);
  k.width = static_cast<int>(config.getInt("width", k.width));
  k.height = static_cast<int>(config.getInt("height", k.height));
  k.cx = config.getDouble("cx", k.width / 2.0);
  k.cy = config.getDouble("cy", k.height / 2.0);
  try {
    k.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("intrinsics: ") + e.what());
  }
  return k;
}

void intrinsicsToConfig(const CameraIntrinsics& intr, KeyValueConfig& config) {
  config.set("fx", intr.fx);
  config.set("fy", intr.fy);
  config.set("cx", intr.cx);
  config.set("cy", intr.cy);
  config.set("width", std::int64_t{intr.width});
  config.set("height", std::int64_t{intr.height});
}

}  // namespace lccal
