#pragma once

#include <random>
#include <string>
#include <vector>

#include "ptk/nn/ops.hpp"
#include "ptk/nn/tensor.hpp"

namespace ptk::nn {

/// Forward-pass mode. Dropout draws from `rng` in training mode and is disabled otherwise.
struct Mode {
  bool training = false;
  std::mt19937_64* rng = nullptr;

  static Mode eval() { return {}; }
  static Mode train(std::mt19937_64& rng) { return {true, &rng}; }
};

/// Scaled fan-in uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix uniform_fan_in(Index rows, Index cols, Index fan_in, std::mt19937_64& rng);

/// y = x W + b with W stored in_features x out_features.
class Linear {
 public:
  Linear() = default;
  Linear(Index in_features, Index out_features, std::mt19937_64& rng);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;

  Index in_features() const { return weight_.rows(); }
  Index out_features() const { return weight_.cols(); }
  Var& weight() { return weight_; }
  Var& bias() { return bias_; }

 private:
  Var weight_;
  Var bias_;
};

/// Temporal convolution with zero "same" padding; preserves the frame count.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Index in_channels, Index out_channels, Index kernel, std::mt19937_64& rng);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;

  Index kernel() const { return kernel_; }
  /// (kernel * in_channels) x out_channels; block k multiplies frame t + k - kernel/2.
  Var& weight() { return weight_; }
  Var& bias() { return bias_; }

 private:
  Index kernel_ = 1;
  Var weight_;
  Var bias_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(Index features);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;

 private:
  Var gamma_;
  Var beta_;
};

/// Bidirectional scaled dot-product attention over the frames of one sequence.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(Index d_model, Index n_heads, std::mt19937_64& rng);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;

  Linear& output() { return out_; }

 private:
  Index n_heads_ = 1;
  Linear query_;
  Linear key_;
  Linear value_;
  Linear out_;
};

struct TransformerStackConfig {
  Index n_layers = 6;
  Index d_model = 256;
  Index n_heads = 4;
  Index d_ff = 1024;
  double dropout = 0.1;

  /// Throws ConfigError when d_model is not divisible by n_heads or dropout is outside [0, 1).
  void validate(const std::string& key_prefix = "model") const;
};

/// Pre-norm residual encoder block:
///   h = x + Drop(MHA(LN(x)));  y = h + Drop(FFN(LN(h))).
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(const TransformerStackConfig& cfg, std::mt19937_64& rng);

  Var forward(const Var& x, const Mode& mode) const;
  void collect(const std::string& prefix, ParameterList& out) const;

  MultiHeadAttention& attention() { return attn_; }
  Linear& ff_out() { return ff_out_; }

 private:
  double dropout_ = 0.0;
  LayerNorm norm1_;
  MultiHeadAttention attn_;
  LayerNorm norm2_;
  Linear ff_in_;
  Linear ff_out_;
};

class TransformerStack {
 public:
  TransformerStack() = default;
  TransformerStack(const TransformerStackConfig& cfg, std::mt19937_64& rng);

  /// x: F x d_model -> F x d_model.
  Var forward(const Var& x, const Mode& mode) const;
  void collect(const std::string& prefix, ParameterList& out) const;

  const TransformerStackConfig& config() const { return cfg_; }
  std::vector<TransformerLayer>& layers() { return layers_; }

 private:
  TransformerStackConfig cfg_;
  std::vector<TransformerLayer> layers_;
};

/// Sinusoidal table: PE(t, 2i) = sin(t / 10000^(2i/d)), PE(t, 2i+1) = cos(same angle).
Matrix sinusoidal_positional_encoding(Index frames, Index d_model);

}  // namespace ptk::nn
