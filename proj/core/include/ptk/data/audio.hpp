#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ptk::data {

struct AudioClip {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  double sample_rate = 16000.0;
  std::string id;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

inline constexpr double kMinClipSeconds = 0.1;
inline constexpr double kMaxClipSeconds = 60.0;

/// Throws ValueError unless sample_rate > 0 and the duration lies in [0.1 s, 60 s].
void validate_pipeline_clip(const AudioClip& clip);

/// 16-bit PCM mono RIFF/WAVE. Samples are clipped to [-1, 1] and rounded to the nearest code.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);
/// Accepts PCM-16 mono only; throws FormatError otherwise. The id is the file stem.
AudioClip read_wav(const std::filesystem::path& path);

}  // namespace ptk::data
