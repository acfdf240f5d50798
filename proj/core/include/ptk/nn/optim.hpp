#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptk/nn/tensor.hpp"

namespace ptk::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  /// true: AdamW (decay applied to the weights directly); false: classic Adam (L2 folded into the gradient).
  bool decoupled_weight_decay = false;
};

struct AdamMoments {
  Matrix first;
  Matrix second;
};

/// One bias-corrected Adam/AdamW update of `param` in place. `step` is 1-based.
void adam_update(Matrix& param, const Matrix& grad, AdamMoments& state, const AdamOptions& opts,
                 std::int64_t step);

/// Adam or AdamW over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions opts);

  /// Applies one update from the accumulated gradients. Throws DivergenceError, without
  /// touching any parameter, when a gradient contains NaN or Inf.
  void step();
  void zero_grad();

  std::int64_t steps() const { return steps_; }
  const AdamOptions& options() const { return opts_; }

 private:
  std::vector<Var> params_;
  std::vector<AdamMoments> moments_;
  AdamOptions opts_;
  std::int64_t steps_ = 0;
};

inline Adam make_adamw(std::vector<Var> params, double lr, double weight_decay = 0.01) {
  return Adam(std::move(params), AdamOptions{lr, 0.9, 0.999, 1e-8, weight_decay, true});
}

enum class StopDecision { Continue, Stop };

/// Stop once `patience` epochs have passed since the best (lowest) validation loss.
/// Ties do not count as improvement. Throws ValueError on empty history.
StopDecision early_stop(std::span<const double> history, int patience = 5);

}  // namespace ptk::nn
