#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptk/audio/features.hpp"
#include "ptk/data/manifest.hpp"
#include "ptk/data/motion.hpp"
#include "ptk/data/style.hpp"
#include "ptk/nn/training.hpp"
#include "ptk/prior/motion_prior.hpp"

namespace ptk::audio {

using nn::Var;

/// Audio encoder architecture. d_model always equals the prior's latent width.
struct Stage2Config {
  Index n_heads = 4;
  Index d_ff = 1024;
  double dropout = 0.1;
  Index n_layers = 12;
  Index conv_kernel = 5;
  /// Number of training subjects in the identity block of the style vector.
  int n_subjects = 32;
  /// false removes the style embedding and the fusion step entirely.
  bool use_style = true;
  FeatureConfig features;

  void validate(const std::string& prefix = "stage2") const;
  nlohmann::json to_json() const;
  static Stage2Config from_json(ConfigReader reader);
};

/// Linear map from the one-hot style vector to a d_model embedding row.
class StyleEmbedder {
 public:
  StyleEmbedder() = default;
  StyleEmbedder(int n_subjects, Index d_model, std::mt19937_64& rng);

  /// Validates the indices, then embeds one_hot(style): 1 x d_model.
  Var embed(const data::StyleCondition& style) const;
  void collect(const std::string& prefix, nn::ParameterList& out) const;
  int n_subjects() const { return n_subjects_; }
  nn::Linear& projection() { return proj_; }

 private:
  int n_subjects_ = 0;
  nn::Linear proj_;
};

/// hidden (F x d) multiplied element-wise by the embedding row, broadcast over frames.
Var fuse_style(const Var& hidden, const Var& style_embedding);

/// Inference quantization: tau == 0 is argmin; tau > 0 samples from the distance softmax with `rng`.
struct Sampling {
  double tau = 0.0;
  std::mt19937_64* rng = nullptr;
};

struct Stage2Output {
  Var z_a;
  prior::QuantizeResult quantized;
  Var reconstruction;
};

struct Stage2Weights {
  double lat = 1.0;
  double exp = 0.15;
  double jaw = 0.1;

  void validate() const;
};

struct Stage2Loss {
  Var total;
  double lat = 0.0;
  double exp = 0.0;
  double jaw = 0.0;

  nn::LossValue as_loss_value() const;
};

/// total = w.lat * L1(z'_m, z'_a) + w.exp * L1(expression) + w.jaw * L1(jaw).
Stage2Loss stage2_loss(const Var& zq_motion, const Var& zq_audio, const Var& x, const Var& x_hat,
                       const Stage2Weights& weights);

/// features (aligned, F x C) -> Linear -> [* style embedding] -> Conv1d -> +PE -> transformer -> F x d_model
class AudioEncoder {
 public:
  AudioEncoder() = default;
  AudioEncoder(const Stage2Config& config, Index d_model, std::mt19937_64& rng);

  Var forward(const nn::Matrix& features, const data::StyleCondition& style, const nn::Mode& mode) const;
  /// "audio.*" and, unless style is ablated, "style.*".
  void collect(nn::ParameterList& out) const;
  StyleEmbedder& style_embedder() { return style_; }

 private:
  int n_subjects_ = 0;
  bool use_style_ = true;
  nn::Linear in_proj_;
  StyleEmbedder style_;
  nn::Conv1d conv_;
  nn::TransformerStack stack_;
};

/// Audio encoder in front of a frozen prior: z_a -> frozen codebook -> frozen decoder -> x_hat.
class Stage2Model {
 public:
  Stage2Model(const Stage2Config& config, prior::MotionPrior prior, std::mt19937_64& rng);

  /// `features` must already be aligned to the motion frame rate.
  Var encode(const nn::Matrix& features, const data::StyleCondition& style, const nn::Mode& mode) const;
  Stage2Output forward(const nn::Matrix& features, const data::StyleCondition& style, const nn::Mode& mode,
                       const Sampling& sampling = {}) const;
  /// Quantized latent of ground-truth motion through the frozen encoder (eval mode, no graph).
  Var motion_target(const nn::Matrix& motion) const;

  /// Audio encoder and style parameters only ("audio.*", "style.*").
  nn::ParameterList trainable_parameters() const;
  /// Trainable parameters followed by the prior's under "prior.".
  nn::ParameterList all_parameters() const;

  const Stage2Config& config() const { return cfg_; }
  const prior::MotionPrior& prior() const { return prior_; }
  const SpeechFeatureExtractor& extractor() const { return *extractor_; }
  StyleEmbedder& style_embedder() { return audio_.style_embedder(); }

  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

 private:
  Stage2Config cfg_;
  prior::MotionPrior prior_;
  std::shared_ptr<SpeechFeatureExtractor> extractor_;
  AudioEncoder audio_;
  bool trained_ = false;
};

struct Stage2Options {
  Stage2Weights weights;
  double lr = 1e-5;
  nn::LoopOptions loop;
  std::filesystem::path checkpoint_dir;
  std::function<void(const nlohmann::json&)> log;
};

struct Stage2Result {
  Stage2Model model;
  nn::TrainingLog log;
  std::string prior_hash;  // identical before and after training
};

/// One training or validation sequence with its features already aligned to the motion.
struct Stage2Item {
  std::string id;
  nn::Matrix features;
  nn::Matrix motion;
  data::StyleCondition style;
};

std::vector<Stage2Item> load_stage2_items(const data::DatasetManifest& manifest, data::Split split,
                                          const SpeechFeatureExtractor& extractor);

/// Adam on the audio encoder only. Throws Error if any prior parameter changed.
Stage2Result train_stage2(const std::vector<Stage2Item>& train, const std::vector<Stage2Item>& val,
                          const Stage2Config& config, prior::MotionPrior prior, const Stage2Options& options,
                          std::mt19937_64& rng);
Stage2Result train_stage2(const data::DatasetManifest& manifest, const Stage2Config& config,
                          prior::MotionPrior prior, const Stage2Options& options, std::mt19937_64& rng);

void save_stage2(const Stage2Model& model, const std::filesystem::path& path, nlohmann::json metadata = {});
Stage2Model load_stage2(const std::filesystem::path& path);

struct GenerateRequest {
  data::StyleCondition style;
  int n_samples = 1;
  double tau = 1.0;
  std::uint64_t seed = 0;
};

/// n_samples motion sequences, each round(duration * 25) frames. Sample i draws from its own
/// engine seeded with (seed, i), so results do not depend on how many samples are requested.
std::vector<data::MotionSequence> generate(const Stage2Model& model, const data::AudioClip& clip,
                                           const GenerateRequest& request);

/// Engine for generated sample `index` under `seed`.
std::mt19937_64 sample_engine(std::uint64_t seed, int index);

/// Frame count for a clip at the motion rate.
Index motion_frames_for(const data::AudioClip& clip);

}  // namespace ptk::audio
