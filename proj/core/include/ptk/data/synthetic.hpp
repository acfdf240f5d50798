#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptk/data/manifest.hpp"

namespace ptk::data {

/// Desk-scale stand-in for an emotional talking-face corpus.
///
/// Audio is a harmonic carrier plus low-passed noise, gated by a syllable-like amplitude
/// envelope. Motion follows the same envelope (mouth-opening coefficient and jaw pitch),
/// plus per-subject offsets and per-emotion offsets scaled by intensity, so both the
/// audio->motion and the style->motion mappings are learnable.
struct SyntheticOptions {
  std::uint64_t seed = 0;
  int n_subjects = 4;           // training-role subjects
  int n_heldout_subjects = 0;   // extra subjects with the held-out role
  int n_sentences = 4;          // per emotion and intensity
  int n_neutral_sentences = -1; // < 0: same as n_sentences
  std::vector<std::string> emotions{kEmotions.begin(), kEmotions.end()};
  double fps = kDefaultFps;
  double sample_rate = 16000.0;
  double min_seconds = 1.0;
  double max_seconds = 2.0;
  std::filesystem::path out_dir;

  static constexpr double kDefaultFps = 25.0;
};

/// Writes motion/<id>.ptm, audio/<id>.wav and manifest.json under out_dir and returns the
/// manifest (absolute paths, unsplit). Output bytes depend only on the options.
DatasetManifest generate_synthetic_dataset(const SyntheticOptions& options);

/// Smooth syllable envelope shared by the audio and motion generators, exposed for tests.
struct SyllableEnvelope {
  std::vector<double> centers;
  std::vector<double> widths;
  std::vector<double> amplitudes;

  double operator()(double t) const;
};

}  // namespace ptk::data
