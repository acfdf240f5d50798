#include "ptk/common/config_reader.hpp"

namespace ptk {

ConfigReader::ConfigReader(const nlohmann::json& object, std::string path)
    : object_(object.is_null() ? nlohmann::json::object() : object), path_(std::move(path)) {
  if (!object_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
}

ConfigReader ConfigReader::child(const std::string& key) {
  seen_.insert(key);
  return ConfigReader(object_.contains(key) ? object_.at(key) : nlohmann::json::object(), qualified(key));
}

void ConfigReader::finish() const {
  for (const auto& [key, value] : object_.items()) {
    if (!seen_.count(key)) throw ConfigError(qualified(key), "unknown key");
  }
}

}  // namespace ptk
