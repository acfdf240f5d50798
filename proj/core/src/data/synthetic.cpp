#include "ptk/data/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ptk/common/error.hpp"
#include "ptk/data/audio.hpp"
#include "ptk/data/motion.hpp"

namespace ptk::data {

namespace fs = std::filesystem;
using nn::Index;
using nn::Matrix;

double SyllableEnvelope::operator()(double t) const {
  double e = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = (t - centers[i]) / widths[i];
    e += amplitudes[i] * std::exp(-0.5 * d * d);
  }
  return e;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct SubjectTraits {
  double f0 = 150.0;
  Matrix offset;  // 1 x 53
};

struct EmotionTraits {
  double pitch = 1.0;
  Matrix offset;  // 1 x 53, zero for neutral
};

double intensity_scale(std::string_view intensity) {
  if (intensity == "weak") return 0.5;
  if (intensity == "medium") return 1.0;
  if (intensity == "strong") return 1.5;
  return 0.0;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

SyllableEnvelope make_envelope(std::mt19937_64& rng, double duration) {
  SyllableEnvelope env;
  double c = uniform(rng, 0.08, 0.16);
  while (c < duration - 0.08) {
    env.centers.push_back(c);
    env.widths.push_back(uniform(rng, 0.035, 0.06));
    env.amplitudes.push_back(uniform(rng, 0.45, 1.0));
    c += uniform(rng, 0.17, 0.3);
  }
  return env;
}

struct SequenceSpec {
  const SubjectTraits* subject;
  const EmotionTraits* emotion;
  double intensity;
  std::uint64_t stream[5];
};

void synthesize(const SyntheticOptions& opt, const SequenceSpec& spec, MotionSequence& motion, AudioClip& audio) {
  std::seed_seq seq{spec.stream[0], spec.stream[1], spec.stream[2], spec.stream[3], spec.stream[4]};
  std::mt19937_64 rng(seq);

  const double duration_draw = uniform(rng, opt.min_seconds, opt.max_seconds);
  const auto frames = std::max<Index>(1, static_cast<Index>(std::lround(duration_draw * opt.fps)));
  const double duration = static_cast<double>(frames) / opt.fps;
  const SyllableEnvelope env = make_envelope(rng, duration);

  // Audio.
  const auto n_samples = static_cast<std::size_t>(std::lround(duration * opt.sample_rate));
  const double f0 = spec.subject->f0 * (1.0 + (spec.emotion->pitch - 1.0) * spec.intensity);
  double phases[4];
  for (double& p : phases) p = uniform(rng, 0.0, kTwoPi);
  audio.samples.assign(n_samples, 0.0);
  audio.sample_rate = opt.sample_rate;
  double lowpass = 0.0;
  for (std::size_t n = 0; n < n_samples; ++n) {
    const double t = static_cast<double>(n) / opt.sample_rate;
    double harm = 0.0;
    for (int h = 0; h < 4; ++h) harm += std::sin(kTwoPi * (h + 1) * f0 * t + phases[h]) / (h + 1);
    lowpass = 0.7 * lowpass + 0.3 * uniform(rng, -1.0, 1.0);
    audio.samples[n] = 0.45 * env(t) * (0.45 * harm + 0.55 * lowpass) + 0.002 * uniform(rng, -1.0, 1.0);
  }

  // Motion.
  double lags[10];
  double gains[10];
  for (int k = 0; k < 10; ++k) {
    lags[k] = k == 0 ? 0.0 : uniform(rng, 0.0, 0.08);
    gains[k] = k == 0 ? 1.5 : uniform(rng, -0.8, 0.8);
  }
  double drift_freq[kMotionDims];
  double drift_phase[kMotionDims];
  for (Index k = 0; k < kMotionDims; ++k) {
    drift_freq[k] = uniform(rng, 0.2, 1.2);
    drift_phase[k] = uniform(rng, 0.0, kTwoPi);
  }
  motion.fps = opt.fps;
  motion.frames.resize(frames, kMotionDims);
  for (Index f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / opt.fps;
    auto row = motion.frames.row(f);
    row = spec.subject->offset + spec.emotion->offset * spec.intensity;
    for (Index k = 0; k < kExpressionDims; ++k) {
      const double drift = std::sin(kTwoPi * drift_freq[k] * t + drift_phase[k]);
      if (k < 10) {
        row(k) += gains[k] * env(t - lags[k]) + 0.03 * drift;
      } else {
        row(k) += 0.05 * drift;
      }
    }
    row(kExpressionDims + 0) += 0.2 * env(t) + 0.02;
    row(kExpressionDims + 1) += 0.01 * std::sin(kTwoPi * drift_freq[51] * t + drift_phase[51]);
    row(kExpressionDims + 2) += 0.01 * std::sin(kTwoPi * drift_freq[52] * t + drift_phase[52]);
  }
}

}  // namespace

DatasetManifest generate_synthetic_dataset(const SyntheticOptions& opt) {
  if (opt.n_subjects < 1) throw ValueError("synthetic dataset needs n_subjects >= 1");
  if (opt.n_heldout_subjects < 0) throw ValueError("n_heldout_subjects must be >= 0");
  if (opt.n_sentences < 1) throw ValueError("synthetic dataset needs n_sentences >= 1");
  if (!(opt.fps > 0.0) || !(opt.sample_rate >= 8000.0)) throw ValueError("bad fps or sample rate");
  if (!(opt.min_seconds >= kMinClipSeconds) || opt.max_seconds < opt.min_seconds || opt.max_seconds > kMaxClipSeconds) {
    throw ValueError("clip duration range must lie within [0.1, 60] s");
  }
  for (const auto& e : opt.emotions) {
    if (!emotion_index(e)) throw ValueError("unknown emotion '" + e + "'");
  }

  const fs::path root = fs::absolute(opt.out_dir).lexically_normal();
  std::error_code ec;
  fs::create_directories(root / "motion", ec);
  fs::create_directories(root / "audio", ec);
  if (ec || !fs::is_directory(root / "motion") || !fs::is_directory(root / "audio")) {
    throw FormatError("cannot create dataset directory " + root.string());
  }

  std::mt19937_64 master(opt.seed);
  const int total_subjects = opt.n_subjects + opt.n_heldout_subjects;
  std::vector<SubjectTraits> subjects(static_cast<std::size_t>(total_subjects));
  for (auto& s : subjects) {
    s.f0 = uniform(master, 100.0, 230.0);
    s.offset = Matrix::Zero(1, kMotionDims);
    for (Index k = 0; k < kExpressionDims; ++k) s.offset(k) = uniform(master, -0.15, 0.15) / (1.0 + 0.05 * k);
  }
  std::vector<EmotionTraits> emotions(kEmotions.size());
  for (std::size_t i = 0; i < emotions.size(); ++i) {
    auto& e = emotions[i];
    e.offset = Matrix::Zero(1, kMotionDims);
    const double pitch = uniform(master, 0.9, 1.12);
    for (Index k = 0; k < kExpressionDims; ++k) {
      const double v = uniform(master, -0.5, 0.5) / (1.0 + 0.05 * k);
      if (i != 0) e.offset(k) = v;
    }
    e.pitch = i == 0 ? 1.0 : pitch;
  }

  DatasetManifest manifest;
  for (int s = 0; s < total_subjects; ++s) {
    char name[16];
    std::snprintf(name, sizeof(name), "S%02d", s);
    manifest.subjects.push_back({name, s < opt.n_subjects ? SubjectRole::Train : SubjectRole::Heldout});
  }

  const int neutral_sentences = opt.n_neutral_sentences < 0 ? opt.n_sentences : opt.n_neutral_sentences;
  for (int s = 0; s < total_subjects; ++s) {
    const std::string& subject = manifest.subjects[static_cast<std::size_t>(s)].name;
    for (const auto& emotion : opt.emotions) {
      const int emo = *emotion_index(emotion);
      const bool neutral = emo == 0;
      const std::vector<std::string> levels =
          neutral ? std::vector<std::string>{std::string(kNoIntensity)}
                  : std::vector<std::string>{kIntensities.begin(), kIntensities.end()};
      const int count = neutral ? neutral_sentences : opt.n_sentences;
      for (const auto& level : levels) {
        for (int sentence = 0; sentence < count; ++sentence) {
          char id[96];
          std::snprintf(id, sizeof(id), "%s_%s_%s_%03d", subject.c_str(), emotion.c_str(), level.c_str(), sentence);
          SequenceSpec spec{&subjects[static_cast<std::size_t>(s)],
                            &emotions[static_cast<std::size_t>(emo)],
                            intensity_scale(level),
                            {opt.seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(emo),
                             static_cast<std::uint64_t>(*intensity_index(level)) + (neutral ? 7u : 0u),
                             static_cast<std::uint64_t>(sentence)}};
          MotionSequence motion;
          AudioClip audio;
          synthesize(opt, spec, motion, audio);
          motion.id = id;
          audio.id = id;

          ManifestEntry entry;
          entry.id = id;
          entry.subject = subject;
          entry.emotion = emotion;
          entry.intensity = level;
          entry.sentence = sentence;
          entry.motion = root / "motion" / (std::string(id) + ".ptm");
          entry.audio = root / "audio" / (std::string(id) + ".wav");
          write_motion(motion, entry.motion);
          write_wav(audio, entry.audio);
          manifest.entries.push_back(std::move(entry));
        }
      }
    }
  }
  save_manifest(manifest, root / "manifest.json");
  return manifest;
}

}  // namespace ptk::data
