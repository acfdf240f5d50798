#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "ptk/nn/tensor.hpp"

namespace ptk::nn {

/// Weight container on disk:
///
///   bytes 0..3   magic "PTC1"
///   bytes 4..11  uint64 LE length L of the JSON header
///   next L bytes UTF-8 JSON:
///                  { "format": "ptk-checkpoint/1",
///                    "metadata": { ...config, seeds... },
///                    "tensors": { name: { "dtype": "f32", "shape": [rows, cols], "offset": bytes } } }
///   remainder    concatenated little-endian float32 tensors, row-major; offsets are relative
///                to the first byte after the header
///
/// Loading also accepts "f64" entries.
struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  std::map<std::string, Matrix> tensors;

  static Checkpoint from_parameters(const ParameterList& params, nlohmann::json metadata);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  /// Copies stored tensors into `params` by name. Throws FormatError on a missing name or
  /// shape mismatch; extra stored tensors are ignored only when `allow_extra` is set.
  void restore(const ParameterList& params, bool allow_extra = false) const;
};

/// FNV-1a over names, shapes and raw double bytes of every parameter.
std::string parameter_hash(const ParameterList& params);

}  // namespace ptk::nn
