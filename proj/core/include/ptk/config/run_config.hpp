#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptk/audio/stage2.hpp"
#include "ptk/metrics/metrics.hpp"
#include "ptk/prior/stage1.hpp"
#include "ptk/vae/vae.hpp"

namespace ptk::config {

struct GenerateSettings {
  int n_samples = 1;
  double tau = 1.0;
};

/// Everything a command needs besides paths. Defaults are the full-size settings.
///
/// Layout (all sections optional, unknown keys rejected):
///   seed, prior, train_prior, stage2, train_stage2, vae, train_vae1, train_vae2, generate, eval
struct RunConfig {
  std::uint64_t seed = 0;

  prior::PriorConfig prior;
  prior::Stage1Options train_prior;

  audio::Stage2Config stage2;
  audio::Stage2Options train_stage2;

  vae::VaeConfig vae;
  vae::VaeStage1Options train_vae1;
  audio::Stage2Options train_vae2;

  GenerateSettings generate;
  metrics::EvalOptions eval;

  /// Range and consistency checks; throws ConfigError with the dotted key.
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  /// Fingerprint of the canonical JSON form.
  std::string hash() const;
};

/// Loads `path` (empty means defaults only), then applies `key.path=value` overrides in order.
/// Values parse as JSON when possible and fall back to plain strings.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Sets a dotted key inside a JSON object, creating intermediate objects.
void apply_override(nlohmann::json& root, const std::string& assignment);

}  // namespace ptk::config
