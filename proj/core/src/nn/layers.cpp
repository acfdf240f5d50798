#include "ptk/nn/layers.hpp"

#include <cmath>

#include "ptk/common/error.hpp"

namespace ptk::nn {

Matrix uniform_fan_in(Index rows, Index cols, Index fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Linear::Linear(Index in_features, Index out_features, std::mt19937_64& rng)
    : weight_(uniform_fan_in(in_features, out_features, in_features, rng), true),
      bias_(uniform_fan_in(1, out_features, in_features, rng), true) {}

Var Linear::forward(const Var& x) const {
  if (x.cols() != weight_.rows()) {
    throw ShapeError("linear: expected " + std::to_string(weight_.rows()) + " input features, got " +
                     std::to_string(x.cols()));
  }
  return add_row(matmul(x, weight_), bias_);
}

void Linear::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

Conv1d::Conv1d(Index in_channels, Index out_channels, Index kernel, std::mt19937_64& rng) : kernel_(kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ValueError("conv1d kernel must be odd, got " + std::to_string(kernel));
  }
  weight_ = Var(uniform_fan_in(kernel * in_channels, out_channels, kernel * in_channels, rng), true);
  bias_ = Var(uniform_fan_in(1, out_channels, kernel * in_channels, rng), true);
}

Var Conv1d::forward(const Var& x) const {
  if (x.cols() * kernel_ != weight_.rows()) {
    throw ShapeError("conv1d: expected " + std::to_string(weight_.rows() / kernel_) + " input channels, got " +
                     std::to_string(x.cols()));
  }
  return add_row(matmul(im2col_same(x, kernel_), weight_), bias_);
}

void Conv1d::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

LayerNorm::LayerNorm(Index features)
    : gamma_(Matrix::Ones(1, features), true), beta_(Matrix::Zero(1, features), true) {}

Var LayerNorm::forward(const Var& x) const { return layer_norm(x, gamma_, beta_); }

void LayerNorm::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".gamma", gamma_});
  out.push_back({prefix + ".beta", beta_});
}

MultiHeadAttention::MultiHeadAttention(Index d_model, Index n_heads, std::mt19937_64& rng)
    : n_heads_(n_heads),
      query_(d_model, d_model, rng),
      key_(d_model, d_model, rng),
      value_(d_model, d_model, rng),
      out_(d_model, d_model, rng) {
  if (n_heads < 1 || d_model % n_heads != 0) {
    throw ConfigError("model.n_heads", "d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                                           std::to_string(n_heads));
  }
}

Var MultiHeadAttention::forward(const Var& x) const {
  const Index d_model = x.cols();
  const Index head_dim = d_model / n_heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var q = query_.forward(x);
  Var k = key_.forward(x);
  Var v = value_.forward(x);
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(n_heads_));
  for (Index h = 0; h < n_heads_; ++h) {
    Var qh = slice_cols(q, h * head_dim, head_dim);
    Var kh = slice_cols(k, h * head_dim, head_dim);
    Var vh = slice_cols(v, h * head_dim, head_dim);
    Var weights = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
    heads.push_back(matmul(weights, vh));
  }
  return out_.forward(n_heads_ == 1 ? heads.front() : concat_cols(heads));
}

void MultiHeadAttention::collect(const std::string& prefix, ParameterList& out) const {
  query_.collect(prefix + ".query", out);
  key_.collect(prefix + ".key", out);
  value_.collect(prefix + ".value", out);
  out_.collect(prefix + ".out", out);
}

void TransformerStackConfig::validate(const std::string& key_prefix) const {
  if (n_layers < 0) throw ConfigError(key_prefix + ".n_layers", "must be >= 0");
  if (d_model < 1) throw ConfigError(key_prefix + ".d_model", "must be >= 1");
  if (n_heads < 1 || d_model % n_heads != 0) {
    throw ConfigError(key_prefix + ".n_heads", "d_model " + std::to_string(d_model) +
                                                   " must be divisible by n_heads " + std::to_string(n_heads));
  }
  if (d_ff < 1) throw ConfigError(key_prefix + ".d_ff", "must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError(key_prefix + ".dropout", "must lie in [0, 1)");
}

TransformerLayer::TransformerLayer(const TransformerStackConfig& cfg, std::mt19937_64& rng)
    : dropout_(cfg.dropout),
      norm1_(cfg.d_model),
      attn_(cfg.d_model, cfg.n_heads, rng),
      norm2_(cfg.d_model),
      ff_in_(cfg.d_model, cfg.d_ff, rng),
      ff_out_(cfg.d_ff, cfg.d_model, rng) {}

Var TransformerLayer::forward(const Var& x, const Mode& mode) const {
  const bool drop = mode.training && dropout_ > 0.0 && mode.rng != nullptr;
  Var attended = attn_.forward(norm1_.forward(x));
  if (drop) attended = dropout(attended, dropout_, *mode.rng);
  Var h = add(x, attended);
  Var ff = ff_out_.forward(gelu(ff_in_.forward(norm2_.forward(h))));
  if (drop) ff = dropout(ff, dropout_, *mode.rng);
  return add(h, ff);
}

void TransformerLayer::collect(const std::string& prefix, ParameterList& out) const {
  norm1_.collect(prefix + ".norm1", out);
  attn_.collect(prefix + ".attn", out);
  norm2_.collect(prefix + ".norm2", out);
  ff_in_.collect(prefix + ".ff_in", out);
  ff_out_.collect(prefix + ".ff_out", out);
}

TransformerStack::TransformerStack(const TransformerStackConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  layers_.reserve(static_cast<std::size_t>(cfg.n_layers));
  for (Index i = 0; i < cfg.n_layers; ++i) layers_.emplace_back(cfg, rng);
}

Var TransformerStack::forward(const Var& x, const Mode& mode) const {
  if (x.cols() != cfg_.d_model) {
    throw ShapeError("transformer: d_model mismatch, expected " + std::to_string(cfg_.d_model) + ", got " +
                     std::to_string(x.cols()));
  }
  Var h = x;
  for (const auto& layer : layers_) h = layer.forward(h, mode);
  return h;
}

void TransformerStack::collect(const std::string& prefix, ParameterList& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(prefix + ".layer" + std::to_string(i), out);
}

Matrix sinusoidal_positional_encoding(Index frames, Index d_model) {
  Matrix pe(frames, d_model);
  for (Index t = 0; t < frames; ++t) {
    for (Index c = 0; c < d_model; ++c) {
      const double exponent = static_cast<double>(2 * (c / 2)) / static_cast<double>(d_model);
      const double angle = static_cast<double>(t) / std::pow(10000.0, exponent);
      pe(t, c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace ptk::nn
