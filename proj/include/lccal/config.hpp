#pragma once

#include "lccal/projection.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lccal {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text; `#` starts a comment; later keys override
/// earlier ones. Keys are case-sensitive.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string toString() const;

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void merge(const KeyValueConfig& overrides);

  std::optional<std::string> find(const std::string& key) const;
  std::string getString(const std::string& key, const std::string& fallback) const;
  double getDouble(const std::string& key, double fallback) const;
  std::int64_t getInt(const std::string& key, std::int64_t fallback) const;
  bool getBool(const std::string& key, bool fallback) const;
  /// Comma- or whitespace-separated reals.
  std::vector<double> getDoubles(const std::string& key, const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Reads `fx fy cx cy width height` keys (defaults: the 256x512, f = 600
/// virtual camera).
CameraIntrinsics intrinsicsFromConfig(const KeyValueConfig& config);
void intrinsicsToConfig(const CameraIntrinsics& intr, KeyValueConfig& config);

}  // namespace lccal
