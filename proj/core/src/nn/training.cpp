#include "ptk/nn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptk/common/error.hpp"
#include "ptk/nn/ops.hpp"

namespace ptk::nn {

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json j = {{"epoch", epoch},
                      {"train_loss", train_loss},
                      {"val_loss", val_loss},
                      {"train_components", train_components},
                      {"val_components", val_components}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

nlohmann::json TrainingLog::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) rows.push_back(e.to_json());
  return {{"epochs", rows},
          {"best_epoch", best_epoch},
          {"best_val_loss", best_val_loss},
          {"early_stopped", early_stopped},
          {"val_is_train", val_is_train}};
}

namespace {

void add_components(std::map<std::string, double>& acc, const std::map<std::string, double>& c) {
  for (const auto& [k, v] : c) acc[k] += v;
}

void divide(std::map<std::string, double>& acc, double n) {
  for (auto& [k, v] : acc) v /= n;
}

}  // namespace

TrainingLog run_training(Adam& optimizer, const ParameterList& params, const LoopHooks& hooks,
                         const LoopOptions& options, std::mt19937_64& rng) {
  if (hooks.n_train == 0) throw ValueError("empty training set");
  if (options.max_epochs < 1) throw ValueError("max_epochs must be >= 1");
  if (options.batch_size < 1) throw ValueError("batch_size must be >= 1");

  TrainingLog log;
  log.val_is_train = hooks.n_val == 0;
  std::vector<double> history;
  std::vector<Matrix> best_values;
  std::vector<std::size_t> order(hooks.n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;

    optimizer.zero_grad();
    int pending = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t item = order[pos];
      LossValue loss = hooks.train_loss(item, Mode::train(rng));
      const double value = loss.total.item();
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", item " +
                              std::to_string(item));
      }
      // The last batch of an epoch may be short; average over what it actually holds.
      const std::size_t batch_start = pos - static_cast<std::size_t>(pending);
      const std::size_t batch_len = std::min<std::size_t>(options.batch_size, order.size() - batch_start);
      backward(scale(loss.total, 1.0 / static_cast<double>(batch_len)));
      rec.train_loss += value;
      add_components(rec.train_components, loss.components);
      if (++pending == static_cast<int>(batch_len)) {
        try {
          optimizer.step();
        } catch (const DivergenceError& e) {
          throw DivergenceError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")");
        }
        optimizer.zero_grad();
        pending = 0;
      }
    }
    rec.train_loss /= static_cast<double>(hooks.n_train);
    divide(rec.train_components, static_cast<double>(hooks.n_train));

    if (hooks.n_val > 0) {
      NoGradGuard guard;
      for (std::size_t i = 0; i < hooks.n_val; ++i) {
        LossValue loss = hooks.val_loss(i);
        rec.val_loss += loss.total.item();
        add_components(rec.val_components, loss.components);
      }
      rec.val_loss /= static_cast<double>(hooks.n_val);
      divide(rec.val_components, static_cast<double>(hooks.n_val));
    } else {
      rec.val_loss = rec.train_loss;
      rec.val_components = rec.train_components;
    }
    if (!std::isfinite(rec.val_loss)) {
      throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    }

    history.push_back(rec.val_loss);
    const bool is_best = log.epochs.empty() || rec.val_loss < log.best_val_loss;
    if (is_best) {
      log.best_epoch = epoch;
      log.best_val_loss = rec.val_loss;
      best_values.clear();
      for (const auto& p : params) best_values.push_back(p.var.value());
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(rec, is_best);
    if (hooks.log) hooks.log(rec);
    log.epochs.push_back(std::move(rec));

    if (early_stop(history, options.patience) == StopDecision::Stop) {
      log.early_stopped = epoch < options.max_epochs;
      break;
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    Var v = params[i].var;
    v.mutable_value() = best_values[i];
  }
  return log;
}

}  // namespace ptk::nn
