#include "ptk/nn/optim.hpp"

#include <cmath>

#include "ptk/common/error.hpp"

namespace ptk::nn {

void adam_update(Matrix& param, const Matrix& grad, AdamMoments& state, const AdamOptions& opts,
                 std::int64_t step) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw ShapeError("adam: gradient shape does not match parameter");
  }
  if (state.first.size() == 0) {
    state.first = Matrix::Zero(param.rows(), param.cols());
    state.second = Matrix::Zero(param.rows(), param.cols());
  }
  Matrix g = grad;
  if (opts.weight_decay != 0.0) {
    if (opts.decoupled_weight_decay) {
      param *= (1.0 - opts.lr * opts.weight_decay);
    } else {
      g += opts.weight_decay * param;
    }
  }
  state.first = opts.beta1 * state.first + (1.0 - opts.beta1) * g;
  state.second = opts.beta2 * state.second + (1.0 - opts.beta2) * g.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
  const double step_size = opts.lr / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);
  param.array() -= step_size * state.first.array() / ((state.second.array().sqrt() / sqrt_bc2) + opts.eps);
}

Adam::Adam(std::vector<Var> params, AdamOptions opts)
    : params_(std::move(params)), moments_(params_.size()), opts_(opts) {
  if (!(opts_.lr > 0.0)) throw ConfigError("lr", "learning rate must be positive");
}

void Adam::step() {
  for (const Var& p : params_) {
    if (p.has_grad() && !p.node()->grad.allFinite()) {
      throw DivergenceError("non-finite gradient; optimizer step refused");
    }
  }
  ++steps_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var& p = params_[i];
    if (!p.has_grad()) continue;
    adam_update(p.mutable_value(), p.node()->grad, moments_[i], opts_, steps_);
  }
}

void Adam::zero_grad() {
  for (Var& p : params_) p.zero_grad();
}

StopDecision early_stop(std::span<const double> history, int patience) {
  if (history.empty()) throw ValueError("early_stop: empty validation history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] < history[best]) best = i;
  }
  const auto since_best = static_cast<long long>(history.size() - 1 - best);
  return since_best >= patience ? StopDecision::Stop : StopDecision::Continue;
}

}  // namespace ptk::nn
