#include "ptk/prior/motion_prior.hpp"

#include "ptk/common/error.hpp"
#include "ptk/data/motion.hpp"
#include "ptk/nn/ops.hpp"

namespace ptk::prior {

using data::kMotionDims;

void PriorConfig::validate(const std::string& prefix) const {
  stack(encoder_layers).validate(prefix);
  if (decoder_layers < 0) throw ConfigError(prefix + ".decoder_layers", "must be >= 0");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) throw ConfigError(prefix + ".conv_kernel", "must be odd");
  if (codebook_size < 1) throw ConfigError(prefix + ".codebook_size", "must be >= 1");
  if (code_dim < 1 || d_model % code_dim != 0) {
    throw ConfigError(prefix + ".code_dim", "d_model must be a multiple of code_dim");
  }
  if (!(beta >= 0.0)) throw ConfigError(prefix + ".beta", "must be >= 0");
}

nlohmann::json PriorConfig::to_json() const {
  return {{"d_model", d_model},         {"n_heads", n_heads},
          {"d_ff", d_ff},               {"dropout", dropout},
          {"encoder_layers", encoder_layers}, {"decoder_layers", decoder_layers},
          {"conv_kernel", conv_kernel}, {"codebook_size", codebook_size},
          {"code_dim", code_dim},       {"beta", beta}};
}

PriorConfig PriorConfig::from_json(ConfigReader r) {
  PriorConfig c;
  r.read("d_model", c.d_model);
  r.read("n_heads", c.n_heads);
  r.read("d_ff", c.d_ff);
  r.read("dropout", c.dropout);
  r.read("encoder_layers", c.encoder_layers);
  r.read("decoder_layers", c.decoder_layers);
  r.read("conv_kernel", c.conv_kernel);
  r.read("codebook_size", c.codebook_size);
  r.read("code_dim", c.code_dim);
  r.read("beta", c.beta);
  r.finish();
  return c;
}

Var add_positional_encoding(const Var& x) {
  return nn::add(x, Var(nn::sinusoidal_positional_encoding(x.rows(), x.cols())));
}

MotionEncoder::MotionEncoder(Index d_model, Index kernel, const nn::TransformerStackConfig& stack,
                             std::mt19937_64& rng)
    : in_proj_(kMotionDims, d_model, rng), conv_(d_model, d_model, kernel, rng), stack_(stack, rng) {}

Var MotionEncoder::forward(const Var& x, const nn::Mode& mode) const {
  if (x.cols() != kMotionDims) {
    throw ShapeError("encode: expected 53 parameters per frame, got " + std::to_string(x.cols()));
  }
  Var h = nn::gelu(conv_.forward(in_proj_.forward(x)));
  return stack_.forward(add_positional_encoding(h), mode);
}

void MotionEncoder::collect(const std::string& prefix, nn::ParameterList& out) const {
  in_proj_.collect(prefix + ".in_proj", out);
  conv_.collect(prefix + ".conv", out);
  stack_.collect(prefix + ".transformer", out);
}

MotionDecoder::MotionDecoder(Index d_model, Index kernel, const nn::TransformerStackConfig& stack,
                             std::mt19937_64& rng)
    : d_model_(d_model), conv_(d_model, d_model, kernel, rng), stack_(stack, rng), out_proj_(d_model, kMotionDims, rng) {}

Var MotionDecoder::forward(const Var& z, const nn::Mode& mode) const {
  if (z.cols() != d_model_) {
    throw ShapeError("decode: expected latent width " + std::to_string(d_model_) + ", got " +
                     std::to_string(z.cols()));
  }
  Var h = nn::gelu(conv_.forward(z));
  return out_proj_.forward(stack_.forward(add_positional_encoding(h), mode));
}

void MotionDecoder::collect(const std::string& prefix, nn::ParameterList& out) const {
  conv_.collect(prefix + ".conv", out);
  stack_.collect(prefix + ".transformer", out);
  out_proj_.collect(prefix + ".out_proj", out);
}

MotionPrior::MotionPrior(const PriorConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  encoder_ = MotionEncoder(cfg.d_model, cfg.conv_kernel, cfg.stack(cfg.encoder_layers), rng);
  codebook_ = Codebook::uniform_init(cfg.codebook_size, cfg.code_dim, rng);
  decoder_ = MotionDecoder(cfg.d_model, cfg.conv_kernel, cfg.stack(cfg.decoder_layers), rng);
}

Var MotionPrior::encode(const Var& x, const nn::Mode& mode) const { return encoder_.forward(x, mode); }

Var MotionPrior::decode(const Var& z_q, const nn::Mode& mode) const { return decoder_.forward(z_q, mode); }

MotionPrior::Output MotionPrior::forward(const Var& x, const nn::Mode& mode) const {
  Output out;
  out.z = encode(x, mode);
  out.quantized = quantize(out.z);
  out.reconstruction = decode(out.quantized.z_q, mode);
  return out;
}

nn::ParameterList MotionPrior::parameters() const {
  nn::ParameterList p;
  encoder_.collect("encoder", p);
  p.push_back({"codebook.embeddings", codebook_.embeddings()});
  decoder_.collect("decoder", p);
  return p;
}

void MotionPrior::set_trainable(bool trainable) {
  for (auto& p : parameters()) {
    Var v = p.var;
    v.set_requires_grad(trainable);
  }
}

}  // namespace ptk::prior
