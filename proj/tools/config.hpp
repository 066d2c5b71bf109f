#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace menshov::cli {

// Bad or unknown configuration; carries the dotted key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : "config key '" + key + "': " + message),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Read-tracking view of one JSON object. finish() rejects every key that
// was never read, so a typo cannot silently fall back to a default.
class Config {
 public:
  Config(nlohmann::json object, std::string path = "")
      : j_(std::move(object)), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  bool empty() const { return j_.empty(); }
  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return require<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError(key_path(key), "missing");
    const auto& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key_path(key), "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ConfigError(key_path(key), "expected a non-negative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
    }
    return v.get<T>();
  }

  // Raw value, marked as read; validation is the caller's.
  nlohmann::json raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError(key_path(key), "missing");
    return j_.at(key);
  }

  Config child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return Config(nlohmann::json::object(), key_path(key));
    return Config(j_.at(key), key_path(key));
  }

  std::pair<double, double> interval(const std::string& key) {
    const auto v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(key_path(key), "expected [a, b]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.count(key)) throw ConfigError(key_path(key), "unknown key");
    }
  }

  const nlohmann::json& json() const { return j_; }

 private:
  nlohmann::json j_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace menshov::cli
