#pragma once

#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "ptk/common/config_reader.hpp"
#include "ptk/nn/layers.hpp"
#include "ptk/prior/codebook.hpp"

namespace ptk::prior {

/// Architecture of the motion autoencoder. Defaults are the full-size configuration.
struct PriorConfig {
  Index d_model = 256;
  Index n_heads = 4;
  Index d_ff = 1024;
  double dropout = 0.1;
  Index encoder_layers = 6;
  Index decoder_layers = 6;
  Index conv_kernel = 5;
  Index codebook_size = 256;
  Index code_dim = 128;
  /// Commitment weight of the quantization loss.
  double beta = 0.25;

  Index codes_per_frame() const { return d_model / code_dim; }
  nn::TransformerStackConfig stack(Index layers) const { return {layers, d_model, n_heads, d_ff, dropout}; }

  void validate(const std::string& prefix = "model") const;
  nlohmann::json to_json() const;
  static PriorConfig from_json(ConfigReader reader);
};

/// x (F x 53) -> Linear -> Conv1d -> GELU -> +PE -> transformer -> F x d_model
class MotionEncoder {
 public:
  MotionEncoder() = default;
  MotionEncoder(Index d_model, Index conv_kernel, const nn::TransformerStackConfig& stack, std::mt19937_64& rng);

  Var forward(const Var& x, const nn::Mode& mode) const;
  void collect(const std::string& prefix, nn::ParameterList& out) const;
  nn::Linear& input_projection() { return in_proj_; }

 private:
  nn::Linear in_proj_;
  nn::Conv1d conv_;
  nn::TransformerStack stack_;
};

/// F x d_model -> Conv1d -> GELU -> +PE -> transformer -> Linear -> F x 53
class MotionDecoder {
 public:
  MotionDecoder() = default;
  MotionDecoder(Index d_model, Index conv_kernel, const nn::TransformerStackConfig& stack, std::mt19937_64& rng);

  Var forward(const Var& z, const nn::Mode& mode) const;
  void collect(const std::string& prefix, nn::ParameterList& out) const;

 private:
  Index d_model_ = 0;
  nn::Conv1d conv_;
  nn::TransformerStack stack_;
  nn::Linear out_proj_;
};

/// Encoder, codebook quantizer (straight-through) and decoder of the stage-1 autoencoder.
class MotionPrior {
 public:
  MotionPrior(const PriorConfig& cfg, std::mt19937_64& rng);

  Var encode(const Var& x, const nn::Mode& mode) const;
  QuantizeResult quantize(const Var& z) const { return quantize_nearest(codebook_, z, cfg_.beta); }
  Var decode(const Var& z_q, const nn::Mode& mode) const;

  struct Output {
    Var z;
    QuantizeResult quantized;
    Var reconstruction;
  };
  /// encode -> argmin quantize -> decode.
  Output forward(const Var& x, const nn::Mode& mode) const;

  /// Names are stable checkpoint keys ("encoder.*", "codebook.embeddings", "decoder.*").
  nn::ParameterList parameters() const;
  void set_trainable(bool trainable);

  const PriorConfig& config() const { return cfg_; }
  Codebook& codebook() { return codebook_; }
  const Codebook& codebook() const { return codebook_; }

  MotionEncoder& encoder() { return encoder_; }

 private:
  PriorConfig cfg_;
  MotionEncoder encoder_;
  Codebook codebook_;
  MotionDecoder decoder_;
};

/// Adds the sinusoidal table for x's frame count (no trainable state).
Var add_positional_encoding(const Var& x);

}  // namespace ptk::prior
