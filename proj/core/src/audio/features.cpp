#include "ptk/audio/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "ptk/common/error.hpp"
#include "ptk/data/motion.hpp"

namespace ptk::audio {

using nlohmann::json;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

void check_clip(const data::AudioClip& clip) {
  if (clip.samples.empty()) throw ValueError("empty audio clip" + (clip.id.empty() ? "" : " " + clip.id));
  if (clip.sample_rate < 8000.0) {
    throw ValueError("sample rate " + std::to_string(clip.sample_rate) + " Hz is below 8 kHz");
  }
}

Index round_samples(double ms, double sample_rate) {
  return std::max<Index>(1, static_cast<Index>(std::lround(ms * 1e-3 * sample_rate)));
}

}  // namespace

LogMelExtractor::LogMelExtractor(LogMelOptions options) : options_(options) {
  if (options_.n_mels < 1) throw ConfigError("features.logmel.n_mels", "must be >= 1");
  if (!(options_.hop_ms > 0.0)) throw ConfigError("features.logmel.hop_ms", "must be > 0");
  if (!(options_.window_ms > 0.0)) throw ConfigError("features.logmel.window_ms", "must be > 0");
  if (options_.n_fft < 2) throw ConfigError("features.logmel.n_fft", "must be >= 2");
}

Matrix LogMelExtractor::filterbank(double sample_rate, Index n_fft) const {
  const Index bins = n_fft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double f_max = options_.f_max > 0.0 ? std::min(options_.f_max, nyquist) : nyquist;
  const double m_lo = hz_to_mel(options_.f_min);
  const double m_hi = hz_to_mel(f_max);
  std::vector<double> edges(static_cast<std::size_t>(options_.n_mels + 2));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(edges.size() - 1));
  }
  Matrix fb = Matrix::Zero(options_.n_mels, bins);
  for (Index m = 0; m < options_.n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (Index b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / static_cast<double>(n_fft);
      if (f > lo && f <= mid) {
        fb(m, b) = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        fb(m, b) = (hi - f) / (hi - mid);
      }
    }
  }
  return fb;
}

Matrix LogMelExtractor::extract(const data::AudioClip& clip) const {
  check_clip(clip);
  const double sr = clip.sample_rate;
  const Index hop = round_samples(options_.hop_ms, sr);
  const Index win = round_samples(options_.window_ms, sr);
  Index n_fft = options_.n_fft;
  while (n_fft < win) n_fft *= 2;
  const Index n = static_cast<Index>(clip.samples.size());
  const Index frames = std::max<Index>(1, n / hop);

  std::vector<double> window(static_cast<std::size_t>(win));
  for (Index i = 0; i < win; ++i) {
    window[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(win));
  }
  const Matrix fb = filterbank(sr, n_fft);
  const Index bins = n_fft / 2 + 1;

  Eigen::FFT<double> fft;
  std::vector<double> buffer(static_cast<std::size_t>(n_fft));
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(bins);
  Matrix out(frames, options_.n_mels);
  for (Index t = 0; t < frames; ++t) {
    std::fill(buffer.begin(), buffer.end(), 0.0);
    for (Index i = 0; i < win; ++i) {
      const Index s = t * hop + i;
      if (s >= n) break;
      buffer[static_cast<std::size_t>(i)] = clip.samples[static_cast<std::size_t>(s)] * window[static_cast<std::size_t>(i)];
    }
    fft.fwd(spectrum, buffer);
    for (Index b = 0; b < bins; ++b) power(b) = std::norm(spectrum[static_cast<std::size_t>(b)]);
    out.row(t) = (fb * power).cwiseMax(1e-10).array().log().matrix().transpose();
  }
  return out;
}

json LogMelExtractor::describe() const {
  return {{"kind", "logmel"},       {"n_mels", options_.n_mels}, {"hop_ms", options_.hop_ms},
          {"window_ms", options_.window_ms}, {"n_fft", options_.n_fft},   {"f_min", options_.f_min},
          {"f_max", options_.f_max}};
}

PrecomputedFeatures::PrecomputedFeatures(std::filesystem::path dir, Index dim) : dir_(std::move(dir)), dim_(dim) {
  if (dim_ < 1) throw ConfigError("features.dim", "must be >= 1");
}

Matrix PrecomputedFeatures::extract(const data::AudioClip& clip) const {
  check_clip(clip);
  const auto path = dir_ / (clip.id + ".ptf");
  if (!std::filesystem::exists(path)) throw FormatError("missing precomputed features: " + path.string());
  return data::read_frame_file(path, data::kFeatureMagic, dim_).frames;
}

json PrecomputedFeatures::describe() const {
  return {{"kind", "precomputed"}, {"directory", dir_.string()}, {"dim", dim_}};
}

json FeatureConfig::to_json() const {
  json j = {{"kind", kind}};
  if (kind == "logmel") {
    j["logmel"] = LogMelExtractor(logmel).describe();
    j["logmel"].erase("kind");
  } else {
    j["directory"] = directory;
    j["dim"] = dim;
  }
  return j;
}

FeatureConfig FeatureConfig::from_json(ConfigReader r) {
  FeatureConfig c;
  r.read("kind", c.kind);
  if (c.kind != "logmel" && c.kind != "precomputed") {
    throw ConfigError(r.qualified("kind"), "expected \"logmel\" or \"precomputed\"");
  }
  ConfigReader lm = r.child("logmel");
  lm.read("n_mels", c.logmel.n_mels);
  lm.read("hop_ms", c.logmel.hop_ms);
  lm.read("window_ms", c.logmel.window_ms);
  lm.read("n_fft", c.logmel.n_fft);
  lm.read("f_min", c.logmel.f_min);
  lm.read("f_max", c.logmel.f_max);
  lm.finish();
  r.read("directory", c.directory);
  r.read("dim", c.dim);
  r.finish();
  return c;
}

std::unique_ptr<SpeechFeatureExtractor> make_extractor(const FeatureConfig& c) {
  if (c.kind == "logmel") return std::make_unique<LogMelExtractor>(c.logmel);
  if (c.kind == "precomputed") return std::make_unique<PrecomputedFeatures>(c.directory, c.dim);
  throw ConfigError("features.kind", "unknown extractor '" + c.kind + "'");
}

Matrix align_to_motion_rate(const Matrix& features, Index frames) {
  if (frames < 1) throw ValueError("align_to_motion_rate: target frame count must be >= 1");
  const Index t_in = features.rows();
  if (t_in < 1) throw ValueError("align_to_motion_rate: empty feature sequence");
  if (t_in == frames) return features;
  Matrix out(frames, features.cols());
  const double ratio = static_cast<double>(t_in) / static_cast<double>(frames);
  for (Index f = 0; f < frames; ++f) {
    const double pos = std::min(static_cast<double>(f) * ratio, static_cast<double>(t_in - 1));
    const Index i0 = static_cast<Index>(std::floor(pos));
    const Index i1 = std::min(i0 + 1, t_in - 1);
    const double w = pos - static_cast<double>(i0);
    if (w == 0.0) {
      out.row(f) = features.row(i0);
    } else {
      out.row(f) = (1.0 - w) * features.row(i0) + w * features.row(i1);
    }
  }
  return out;
}

}  // namespace ptk::audio
