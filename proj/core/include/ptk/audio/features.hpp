#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "ptk/common/config_reader.hpp"
#include "ptk/data/audio.hpp"
#include "ptk/nn/tensor.hpp"

namespace ptk::audio {

using nn::Index;
using nn::Matrix;

/// Turns a mono clip into a T x C feature sequence.
class SpeechFeatureExtractor {
 public:
  virtual ~SpeechFeatureExtractor() = default;
  /// Throws ValueError on empty audio or a sample rate below 8 kHz.
  virtual Matrix extract(const data::AudioClip& clip) const = 0;
  virtual Index dim() const = 0;
  virtual nlohmann::json describe() const = 0;
};

struct LogMelOptions {
  Index n_mels = 80;
  double hop_ms = 20.0;
  double window_ms = 25.0;
  /// Raised to the next power of two above the window length when too small.
  Index n_fft = 512;
  double f_min = 0.0;
  /// <= 0 means Nyquist.
  double f_max = 0.0;
};

/// Hann-windowed STFT power spectrum -> triangular HTK-mel filterbank -> log(max(e, 1e-10)).
/// Frame t covers samples [t*hop, t*hop + window) (zero padded at the end); T = max(1, floor(N / hop)).
class LogMelExtractor final : public SpeechFeatureExtractor {
 public:
  explicit LogMelExtractor(LogMelOptions options = {});

  Matrix extract(const data::AudioClip& clip) const override;
  Index dim() const override { return options_.n_mels; }
  nlohmann::json describe() const override;

  /// n_mels x (n_fft/2 + 1) filter weights for a given sample rate.
  Matrix filterbank(double sample_rate, Index n_fft) const;
  const LogMelOptions& options() const { return options_; }

 private:
  LogMelOptions options_;
};

/// Reads "<dir>/<clip id>.ptf" feature files written by an external speech encoder.
class PrecomputedFeatures final : public SpeechFeatureExtractor {
 public:
  PrecomputedFeatures(std::filesystem::path dir, Index dim);

  Matrix extract(const data::AudioClip& clip) const override;
  Index dim() const override { return dim_; }
  nlohmann::json describe() const override;

 private:
  std::filesystem::path dir_;
  Index dim_;
};

struct FeatureConfig {
  std::string kind = "logmel";  // "logmel" | "precomputed"
  LogMelOptions logmel;
  std::string directory;  // precomputed only
  Index dim = 80;         // precomputed only

  Index feature_dim() const { return kind == "logmel" ? logmel.n_mels : dim; }
  nlohmann::json to_json() const;
  static FeatureConfig from_json(ConfigReader reader);
};

std::unique_ptr<SpeechFeatureExtractor> make_extractor(const FeatureConfig& config);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Linear interpolation of T input frames onto `frames` output frames at position
/// f * T / frames (clamped to the last input frame): equal lengths give the identity and a
/// 2:1 ratio picks every other input frame exactly.
Matrix align_to_motion_rate(const Matrix& features, Index frames);

}  // namespace ptk::audio
