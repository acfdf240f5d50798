#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptk/nn/layers.hpp"
#include "ptk/nn/optim.hpp"
#include "ptk/nn/tensor.hpp"

namespace ptk::nn {

/// A differentiable total plus plain-number components for logging.
struct LossValue {
  Var total;
  std::map<std::string, double> components;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::map<std::string, double> train_components;
  std::map<std::string, double> val_components;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;
  /// True when no validation items existed and the training loss stood in for it.
  bool val_is_train = false;

  nlohmann::json to_json() const;
};

struct LoopOptions {
  int max_epochs = 100;
  int patience = 5;
  /// Sequences whose gradients are averaged into one optimizer step.
  int batch_size = 1;
};

struct LoopHooks {
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::function<LossValue(std::size_t item, const Mode& mode)> train_loss;
  /// Called under NoGradGuard in eval mode.
  std::function<LossValue(std::size_t item)> val_loss;
  /// Runs after validation; may add fields to record.extra (usage histograms, checkpoint paths).
  std::function<void(EpochRecord& record, bool is_best)> on_epoch_end;
  /// Receives each finished record (JSON-lines logging).
  std::function<void(const EpochRecord&)> log;
};

/// Shuffled per-sequence training with early stopping on the validation total.
/// The best epoch's parameter values are restored into `params` before returning.
/// Throws DivergenceError naming the epoch and item when a loss or gradient is non-finite.
TrainingLog run_training(Adam& optimizer, const ParameterList& params, const LoopHooks& hooks,
                         const LoopOptions& options, std::mt19937_64& rng);

}  // namespace ptk::nn
