#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "ptk/common/error.hpp"

namespace ptk {

/// Strict reader over one JSON object: every key must be consumed by read()/child(),
/// otherwise finish() raises ConfigError naming the dotted path of the first stray key.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& object, std::string path);

  template <typename T>
  void read(const std::string& key, T& target) {
    seen_.insert(key);
    if (!object_.contains(key)) return;
    try {
      target = object_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(qualified(key), "wrong type");
    }
  }

  /// Nested object reader; an absent key yields an empty object.
  ConfigReader child(const std::string& key);
  void finish() const;

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  nlohmann::json object_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace ptk
