#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptk/audio/stage2.hpp"
#include "ptk/nn/training.hpp"
#include "ptk/prior/motion_prior.hpp"

namespace ptk::vae {

using nn::Index;
using nn::Matrix;
using nn::Var;

inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 10.0;

/// Diagonal Gaussian per frame and channel.
struct GaussianLatent {
  Var mu;
  Var log_var;

  /// Throws ShapeError on mismatched shapes, ValueError on non-finite entries.
  void validate() const;
};

/// Two linear heads, mu and log_var; log_var is clamped to [-20, 10].
class GaussianHead {
 public:
  GaussianHead() = default;
  GaussianHead(Index d_model, std::mt19937_64& rng);

  GaussianLatent forward(const Var& h) const;
  void collect(const std::string& prefix, nn::ParameterList& out) const;

 private:
  nn::Linear mu_;
  nn::Linear log_var_;
};

/// N(0, 1) entries via Box-Muller on 53-bit uniforms (identical across standard libraries).
Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng);

/// z = mu + exp(log_var / 2) * (tau * eps). tau == 0 returns the mean path.
Var reparameterize(const GaussianLatent& latent, const Matrix& eps, double tau = 1.0);
Var reparameterize(const GaussianLatent& latent, std::mt19937_64& rng, double tau = 1.0);

/// mean over elements of 0.5 * (exp(log_var) + mu^2 - 1 - log_var).
Var kl_loss(const GaussianLatent& latent);

struct VaeConfig {
  Index d_model = 256;
  Index n_heads = 4;
  Index d_ff = 1024;
  double dropout = 0.1;
  Index encoder_layers = 6;
  Index decoder_layers = 6;
  Index conv_kernel = 5;

  nn::TransformerStackConfig stack(Index layers) const { return {layers, d_model, n_heads, d_ff, dropout}; }
  void validate(const std::string& prefix = "model") const;
  nlohmann::json to_json() const;
  static VaeConfig from_json(ConfigReader reader);
};

/// Stage-1 autoencoder with the quantizer replaced by a Gaussian latent.
class VaeMotionModel {
 public:
  VaeMotionModel(const VaeConfig& config, std::mt19937_64& rng);

  GaussianLatent encode(const Var& x, const nn::Mode& mode) const;
  Var decode(const Var& z, const nn::Mode& mode) const;

  struct Output {
    GaussianLatent latent;
    Var z;
    Var reconstruction;
  };
  /// Samples z in training mode (from mode.rng); uses the mean otherwise.
  Output forward(const Var& x, const nn::Mode& mode) const;

  /// "encoder.*", "latent.*", "decoder.*".
  nn::ParameterList parameters() const;
  void set_trainable(bool trainable);
  const VaeConfig& config() const { return cfg_; }

 private:
  VaeConfig cfg_;
  prior::MotionEncoder encoder_;
  GaussianHead head_;
  prior::MotionDecoder decoder_;
};

struct VaeStage1Weights {
  double kl = 1e-4;
  double exp = 1.5;
  double jaw = 1.0;

  void validate() const;
};

struct VaeStage1Loss {
  Var total;
  double kl = 0.0;
  double exp = 0.0;
  double jaw = 0.0;

  nn::LossValue as_loss_value() const;
};

/// total = w.kl * KL + w.exp * L1(expression) + w.jaw * L1(jaw).
VaeStage1Loss vae_stage1_loss(const Var& x, const Var& x_hat, const GaussianLatent& latent,
                              const VaeStage1Weights& weights);

/// Stage-2 loss on latent means: w.lat * L1(mu_m, mu_a) + w.exp * L1(expression) + w.jaw * L1(jaw).
audio::Stage2Loss vae_stage2_loss(const Var& mu_motion, const Var& mu_audio, const Var& x, const Var& x_hat,
                                  const audio::Stage2Weights& weights);

struct VaeStage1Options {
  VaeStage1Weights weights;
  double lr = 1e-4;
  double weight_decay = 0.01;
  nn::LoopOptions loop;
  std::filesystem::path checkpoint_dir;
  std::function<void(const nlohmann::json&)> log;
};

struct VaeStage1Result {
  VaeMotionModel model;
  nn::TrainingLog log;
};

VaeStage1Result train_vae_stage1(const std::vector<Matrix>& train, const std::vector<Matrix>& val,
                                 const VaeConfig& config, const VaeStage1Options& options, std::mt19937_64& rng);
VaeStage1Result train_vae_stage1(const data::DatasetManifest& manifest, const VaeConfig& config,
                                 const VaeStage1Options& options, std::mt19937_64& rng);

void save_vae_prior(const VaeMotionModel& model, const std::filesystem::path& path, nlohmann::json metadata = {});
VaeMotionModel load_vae_prior(const std::filesystem::path& path);

/// Audio encoder plus its own Gaussian head in front of a frozen VAE decoder.
class VaeStage2Model {
 public:
  VaeStage2Model(const audio::Stage2Config& config, VaeMotionModel prior, std::mt19937_64& rng);

  GaussianLatent encode(const Matrix& features, const data::StyleCondition& style, const nn::Mode& mode) const;

  struct Output {
    GaussianLatent latent;
    Var z;
    Var reconstruction;
  };
  /// Training mode samples with mode.rng; eval mode decodes the mean.
  Output forward(const Matrix& features, const data::StyleCondition& style, const nn::Mode& mode) const;
  /// Mean of the frozen motion encoder on ground truth (no graph).
  Var motion_target(const Matrix& motion) const;

  /// "audio.*", "style.*", "audio_latent.*".
  nn::ParameterList trainable_parameters() const;
  nn::ParameterList all_parameters() const;

  const audio::Stage2Config& config() const { return cfg_; }
  const VaeMotionModel& prior() const { return prior_; }
  const audio::SpeechFeatureExtractor& extractor() const { return *extractor_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

 private:
  audio::Stage2Config cfg_;
  VaeMotionModel prior_;
  std::shared_ptr<audio::SpeechFeatureExtractor> extractor_;
  audio::AudioEncoder audio_;
  GaussianHead head_;
  bool trained_ = false;
};

struct VaeStage2Result {
  VaeStage2Model model;
  nn::TrainingLog log;
  std::string prior_hash;
};

VaeStage2Result train_vae_stage2(const std::vector<audio::Stage2Item>& train,
                                 const std::vector<audio::Stage2Item>& val, const audio::Stage2Config& config,
                                 VaeMotionModel prior, const audio::Stage2Options& options, std::mt19937_64& rng);
VaeStage2Result train_vae_stage2(const data::DatasetManifest& manifest, const audio::Stage2Config& config,
                                 VaeMotionModel prior, const audio::Stage2Options& options, std::mt19937_64& rng);

void save_vae_stage2(const VaeStage2Model& model, const std::filesystem::path& path, nlohmann::json metadata = {});
VaeStage2Model load_vae_stage2(const std::filesystem::path& path);

/// Same contract as audio::generate; tau scales the noise (tau == 0 decodes the mean).
std::vector<data::MotionSequence> generate(const VaeStage2Model& model, const data::AudioClip& clip,
                                           const audio::GenerateRequest& request);

}  // namespace ptk::vae
