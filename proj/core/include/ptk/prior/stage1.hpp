#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptk/data/manifest.hpp"
#include "ptk/nn/checkpoint.hpp"
#include "ptk/nn/training.hpp"
#include "ptk/prior/motion_prior.hpp"

namespace ptk::prior {

struct Stage1Weights {
  double qua = 1.5;
  double exp = 0.5;
  double jaw = 0.1;

  /// Throws ValueError on a negative or non-finite weight.
  void validate() const;
};

struct Stage1Loss {
  Var total;
  double qua = 0.0;
  double exp = 0.0;  // mean |x - x_hat| over the 50 expression columns
  double jaw = 0.0;  // same over the 3 jaw columns

  nn::LossValue as_loss_value() const;
};

/// total = w.qua * loss_qua + w.exp * L1(expression) + w.jaw * L1(jaw).
Stage1Loss stage1_loss(const Var& x, const Var& x_hat, const Var& loss_qua, const Stage1Weights& weights);

struct Stage1Options {
  Stage1Weights weights;
  double lr = 1e-4;
  double weight_decay = 0.01;
  nn::LoopOptions loop;
  /// When set, epoch_NNN.ckpt and best.ckpt are written here.
  std::filesystem::path checkpoint_dir;
  std::function<void(const nlohmann::json&)> log;
};

struct Stage1Result {
  MotionPrior model;
  nn::TrainingLog log;
};

/// Trains a freshly initialised prior on F x 53 sequences. Model init and shuffling both draw from `rng`.
Stage1Result train_stage1(const std::vector<nn::Matrix>& train, const std::vector<nn::Matrix>& val,
                          const PriorConfig& config, const Stage1Options& options, std::mt19937_64& rng);

/// Uses the manifest's train/val entries (a stage-1 split must already be applied).
Stage1Result train_stage1(const data::DatasetManifest& manifest, const PriorConfig& config,
                          const Stage1Options& options, std::mt19937_64& rng);

/// Motion frames of every entry with split `s`, in manifest order.
std::vector<nn::Matrix> load_split_motion(const data::DatasetManifest& manifest, data::Split s);

/// Checkpoint metadata carries the architecture under "model" so load_prior can rebuild it.
void save_prior(const MotionPrior& model, const std::filesystem::path& path, nlohmann::json metadata = {});
MotionPrior load_prior(const std::filesystem::path& path);
/// Rebuilds a prior from parameters stored under `prefix` (used by stage-2 checkpoints).
MotionPrior prior_from_checkpoint(const nn::Checkpoint& ckpt, const PriorConfig& config,
                                  const std::string& prefix = "");

}  // namespace ptk::prior
