#include "ptk/vae/vae.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "ptk/common/error.hpp"
#include "ptk/nn/checkpoint.hpp"
#include "ptk/nn/ops.hpp"
#include "ptk/prior/codebook.hpp"
#include "ptk/prior/stage1.hpp"

namespace ptk::vae {

using data::kExpressionDims;
using data::kJawDims;
using nlohmann::json;

void GaussianLatent::validate() const {
  if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols()) {
    throw ShapeError("gaussian latent: mu and log_var differ in shape");
  }
  if (!mu.value().allFinite() || !log_var.value().allFinite()) throw ValueError("gaussian latent is not finite");
}

GaussianHead::GaussianHead(Index d, std::mt19937_64& rng) : mu_(d, d, rng), log_var_(d, d, rng) {}

GaussianLatent GaussianHead::forward(const Var& h) const {
  return {mu_.forward(h), nn::clamp(log_var_.forward(h), kLogVarMin, kLogVarMax)};
}

void GaussianHead::collect(const std::string& prefix, nn::ParameterList& out) const {
  mu_.collect(prefix + ".mu", out);
  log_var_.collect(prefix + ".log_var", out);
}

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); i += 2) {
    const double u1 = 1.0 - prior::unit_uniform(rng);  // (0, 1]
    const double u2 = prior::unit_uniform(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    m.data()[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < m.size()) m.data()[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  return m;
}

Var reparameterize(const GaussianLatent& lat, const Matrix& eps, double tau) {
  nn::expect_shape(eps, lat.mu.rows(), lat.mu.cols(), "reparameterize noise");
  if (tau == 0.0) return lat.mu;
  return nn::add(lat.mu, nn::mul(nn::exp(nn::scale(lat.log_var, 0.5)), Var(tau * eps)));
}

Var reparameterize(const GaussianLatent& lat, std::mt19937_64& rng, double tau) {
  return reparameterize(lat, standard_normal(lat.mu.rows(), lat.mu.cols(), rng), tau);
}

Var kl_loss(const GaussianLatent& lat) {
  Var inner = nn::sub(nn::add(nn::exp(lat.log_var), nn::mul(lat.mu, lat.mu)), lat.log_var);
  return nn::add(nn::scale(nn::mean(inner), 0.5), Var(Matrix::Constant(1, 1, -0.5)));
}

void VaeConfig::validate(const std::string& prefix) const {
  stack(encoder_layers).validate(prefix);
  if (decoder_layers < 0) throw ConfigError(prefix + ".decoder_layers", "must be >= 0");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) throw ConfigError(prefix + ".conv_kernel", "must be odd");
}

json VaeConfig::to_json() const {
  return {{"d_model", d_model},   {"n_heads", n_heads},
          {"d_ff", d_ff},         {"dropout", dropout},
          {"encoder_layers", encoder_layers}, {"decoder_layers", decoder_layers},
          {"conv_kernel", conv_kernel}};
}

VaeConfig VaeConfig::from_json(ConfigReader r) {
  VaeConfig c;
  r.read("d_model", c.d_model);
  r.read("n_heads", c.n_heads);
  r.read("d_ff", c.d_ff);
  r.read("dropout", c.dropout);
  r.read("encoder_layers", c.encoder_layers);
  r.read("decoder_layers", c.decoder_layers);
  r.read("conv_kernel", c.conv_kernel);
  r.finish();
  return c;
}

VaeMotionModel::VaeMotionModel(const VaeConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  cfg.validate();
  encoder_ = prior::MotionEncoder(cfg.d_model, cfg.conv_kernel, cfg.stack(cfg.encoder_layers), rng);
  head_ = GaussianHead(cfg.d_model, rng);
  decoder_ = prior::MotionDecoder(cfg.d_model, cfg.conv_kernel, cfg.stack(cfg.decoder_layers), rng);
}

GaussianLatent VaeMotionModel::encode(const Var& x, const nn::Mode& mode) const {
  return head_.forward(encoder_.forward(x, mode));
}

Var VaeMotionModel::decode(const Var& z, const nn::Mode& mode) const { return decoder_.forward(z, mode); }

VaeMotionModel::Output VaeMotionModel::forward(const Var& x, const nn::Mode& mode) const {
  Output out;
  out.latent = encode(x, mode);
  out.z = mode.training && mode.rng ? reparameterize(out.latent, *mode.rng) : out.latent.mu;
  out.reconstruction = decode(out.z, mode);
  return out;
}

nn::ParameterList VaeMotionModel::parameters() const {
  nn::ParameterList p;
  encoder_.collect("encoder", p);
  head_.collect("latent", p);
  decoder_.collect("decoder", p);
  return p;
}

void VaeMotionModel::set_trainable(bool trainable) {
  for (auto& p : parameters()) {
    Var v = p.var;
    v.set_requires_grad(trainable);
  }
}

void VaeStage1Weights::validate() const {
  for (double w : {kl, exp, jaw}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValueError("VAE loss weights must be finite and >= 0");
  }
}

nn::LossValue VaeStage1Loss::as_loss_value() const { return {total, {{"kl", kl}, {"exp", exp}, {"jaw", jaw}}}; }

VaeStage1Loss vae_stage1_loss(const Var& x, const Var& x_hat, const GaussianLatent& latent,
                              const VaeStage1Weights& w) {
  w.validate();
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    throw ShapeError("vae_stage1_loss: reconstruction shape does not match the target");
  }
  Var l_kl = kl_loss(latent);
  Var l_exp = nn::l1_loss(nn::slice_cols(x_hat, 0, kExpressionDims), nn::slice_cols(x, 0, kExpressionDims));
  Var l_jaw = nn::l1_loss(nn::slice_cols(x_hat, kExpressionDims, kJawDims), nn::slice_cols(x, kExpressionDims, kJawDims));
  VaeStage1Loss out;
  out.kl = l_kl.item();
  out.exp = l_exp.item();
  out.jaw = l_jaw.item();
  out.total = nn::scale(l_kl, w.kl) + nn::scale(l_exp, w.exp) + nn::scale(l_jaw, w.jaw);
  return out;
}

audio::Stage2Loss vae_stage2_loss(const Var& mu_motion, const Var& mu_audio, const Var& x, const Var& x_hat,
                                  const audio::Stage2Weights& weights) {
  return audio::stage2_loss(mu_motion, mu_audio, x, x_hat, weights);
}

namespace {

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
  return buf;
}

std::vector<Var> vars_of(const nn::ParameterList& params) {
  std::vector<Var> v;
  for (const auto& p : params) v.push_back(p.var);
  return v;
}

std::function<void(const nn::EpochRecord&)> epoch_logger(const std::function<void(const json&)>& sink,
                                                         const char* stage) {
  if (!sink) return {};
  return [sink, stage](const nn::EpochRecord& rec) {
    json j = rec.to_json();
    j["event"] = "epoch";
    j["stage"] = stage;
    sink(j);
  };
}

}  // namespace

VaeStage1Result train_vae_stage1(const std::vector<Matrix>& train, const std::vector<Matrix>& val,
                                 const VaeConfig& config, const VaeStage1Options& options, std::mt19937_64& rng) {
  options.weights.validate();
  if (train.empty()) throw ValueError("empty training set");
  VaeStage1Result result{VaeMotionModel(config, rng), {}};
  VaeMotionModel& model = result.model;
  const nn::ParameterList params = model.parameters();
  nn::Adam opt = nn::make_adamw(vars_of(params), options.lr, options.weight_decay);

  std::vector<Var> train_vars(train.begin(), train.end()), val_vars(val.begin(), val.end());
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  auto loss_for = [&](const Var& x, const nn::Mode& mode) {
    const auto out = model.forward(x, mode);
    return vae_stage1_loss(x, out.reconstruction, out.latent, options.weights).as_loss_value();
  };
  nn::LoopHooks hooks;
  hooks.n_train = train_vars.size();
  hooks.n_val = val_vars.size();
  hooks.train_loss = [&](std::size_t i, const nn::Mode& mode) { return loss_for(train_vars[i], mode); };
  hooks.val_loss = [&](std::size_t i) { return loss_for(val_vars[i], nn::Mode::eval()); };
  hooks.on_epoch_end = [&](nn::EpochRecord& rec, bool is_best) {
    if (options.checkpoint_dir.empty()) return;
    const json meta = {{"stage", 1}, {"epoch", rec.epoch}, {"val_loss", rec.val_loss}};
    save_vae_prior(model, options.checkpoint_dir / epoch_name(rec.epoch), meta);
    if (is_best) save_vae_prior(model, options.checkpoint_dir / "best.ckpt", meta);
  };
  hooks.log = epoch_logger(options.log, "vae1");
  result.log = nn::run_training(opt, params, hooks, options.loop, rng);
  return result;
}

VaeStage1Result train_vae_stage1(const data::DatasetManifest& manifest, const VaeConfig& config,
                                 const VaeStage1Options& options, std::mt19937_64& rng) {
  const auto train = prior::load_split_motion(manifest, data::Split::Train);
  if (train.empty()) throw ValueError("empty training set: the manifest has no train entries (run split first)");
  return train_vae_stage1(train, prior::load_split_motion(manifest, data::Split::Val), config, options, rng);
}

void save_vae_prior(const VaeMotionModel& model, const std::filesystem::path& path, json metadata) {
  if (!metadata.is_object()) metadata = json::object();
  metadata["kind"] = "vae1";
  metadata["model"] = model.config().to_json();
  nn::Checkpoint::from_parameters(model.parameters(), metadata).save(path);
}

namespace {

VaeMotionModel vae_prior_from(const nn::Checkpoint& ckpt, const VaeConfig& cfg, const std::string& prefix) {
  std::mt19937_64 scratch(0);
  VaeMotionModel model(cfg, scratch);
  nn::ParameterList renamed = model.parameters();
  for (auto& p : renamed) p.name = prefix + p.name;
  ckpt.restore(renamed, !prefix.empty());
  return model;
}

}  // namespace

VaeMotionModel load_vae_prior(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::Checkpoint::load(path);
  if (ckpt.metadata.value("kind", "") != "vae1") throw FormatError(path.string() + " is not a VAE stage-1 checkpoint");
  return vae_prior_from(ckpt, VaeConfig::from_json(ConfigReader(ckpt.metadata.at("model"), "model")), "");
}

VaeStage2Model::VaeStage2Model(const audio::Stage2Config& cfg, VaeMotionModel prior, std::mt19937_64& rng)
    : cfg_(cfg), prior_(std::move(prior)), extractor_(audio::make_extractor(cfg.features)) {
  cfg.validate();
  prior_.set_trainable(false);
  audio_ = audio::AudioEncoder(cfg, prior_.config().d_model, rng);
  head_ = GaussianHead(prior_.config().d_model, rng);
}

GaussianLatent VaeStage2Model::encode(const Matrix& features, const data::StyleCondition& style,
                                      const nn::Mode& mode) const {
  return head_.forward(audio_.forward(features, style, mode));
}

VaeStage2Model::Output VaeStage2Model::forward(const Matrix& features, const data::StyleCondition& style,
                                               const nn::Mode& mode) const {
  Output out;
  out.latent = encode(features, style, mode);
  out.z = mode.training && mode.rng ? reparameterize(out.latent, *mode.rng) : out.latent.mu;
  out.reconstruction = prior_.decode(out.z, nn::Mode::eval());
  return out;
}

Var VaeStage2Model::motion_target(const Matrix& motion) const {
  nn::NoGradGuard guard;
  return Var(prior_.encode(Var(motion), nn::Mode::eval()).mu.value());
}

nn::ParameterList VaeStage2Model::trainable_parameters() const {
  nn::ParameterList p;
  audio_.collect(p);
  head_.collect("audio_latent", p);
  return p;
}

nn::ParameterList VaeStage2Model::all_parameters() const {
  nn::ParameterList p = trainable_parameters();
  for (auto& q : prior_.parameters()) p.push_back({"prior." + q.name, q.var});
  return p;
}

VaeStage2Result train_vae_stage2(const std::vector<audio::Stage2Item>& train,
                                 const std::vector<audio::Stage2Item>& val, const audio::Stage2Config& config,
                                 VaeMotionModel prior, const audio::Stage2Options& options, std::mt19937_64& rng) {
  options.weights.validate();
  if (train.empty()) throw ValueError("empty training set");
  VaeStage2Result result{VaeStage2Model(config, std::move(prior), rng), {}, {}};
  VaeStage2Model& model = result.model;
  const nn::ParameterList frozen = model.prior().parameters();
  result.prior_hash = nn::parameter_hash(frozen);

  const nn::ParameterList params = model.trainable_parameters();
  nn::Adam opt(vars_of(params), nn::AdamOptions{options.lr});
  std::vector<Var> train_targets, val_targets;
  for (const auto& it : train) train_targets.push_back(model.motion_target(it.motion));
  for (const auto& it : val) val_targets.push_back(model.motion_target(it.motion));
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  auto loss_for = [&](const audio::Stage2Item& it, const Var& target, const nn::Mode& mode) {
    const auto out = model.forward(it.features, it.style, mode);
    return vae_stage2_loss(target, out.latent.mu, Var(it.motion), out.reconstruction, options.weights)
        .as_loss_value();
  };
  nn::LoopHooks hooks;
  hooks.n_train = train.size();
  hooks.n_val = val.size();
  hooks.train_loss = [&](std::size_t i, const nn::Mode& mode) { return loss_for(train[i], train_targets[i], mode); };
  hooks.val_loss = [&](std::size_t i) { return loss_for(val[i], val_targets[i], nn::Mode::eval()); };
  hooks.on_epoch_end = [&](nn::EpochRecord& rec, bool is_best) {
    if (options.checkpoint_dir.empty()) return;
    const json meta = {{"epoch", rec.epoch}, {"val_loss", rec.val_loss}};
    save_vae_stage2(model, options.checkpoint_dir / epoch_name(rec.epoch), meta);
    if (is_best) save_vae_stage2(model, options.checkpoint_dir / "best.ckpt", meta);
  };
  hooks.log = epoch_logger(options.log, "vae2");
  result.log = nn::run_training(opt, params, hooks, options.loop, rng);

  if (nn::parameter_hash(frozen) != result.prior_hash) {
    throw Error("frozen VAE prior changed during stage-2 training");
  }
  model.mark_trained();
  return result;
}

VaeStage2Result train_vae_stage2(const data::DatasetManifest& manifest, const audio::Stage2Config& config,
                                 VaeMotionModel prior, const audio::Stage2Options& options, std::mt19937_64& rng) {
  audio::Stage2Config cfg = config;
  cfg.n_subjects = manifest.n_style_subjects();
  const auto extractor = audio::make_extractor(cfg.features);
  const auto train = audio::load_stage2_items(manifest, data::Split::Train, *extractor);
  if (train.empty()) throw ValueError("empty training set: the manifest has no train entries (run split first)");
  return train_vae_stage2(train, audio::load_stage2_items(manifest, data::Split::Val, *extractor), cfg,
                          std::move(prior), options, rng);
}

void save_vae_stage2(const VaeStage2Model& model, const std::filesystem::path& path, json metadata) {
  if (!metadata.is_object()) metadata = json::object();
  metadata["kind"] = "vae2";
  metadata["stage2"] = model.config().to_json();
  metadata["prior"] = model.prior().config().to_json();
  nn::Checkpoint::from_parameters(model.all_parameters(), metadata).save(path);
}

VaeStage2Model load_vae_stage2(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::Checkpoint::load(path);
  if (ckpt.metadata.value("kind", "") != "vae2") throw FormatError(path.string() + " is not a VAE stage-2 checkpoint");
  const auto pcfg = VaeConfig::from_json(ConfigReader(ckpt.metadata.at("prior"), "prior"));
  const auto cfg = audio::Stage2Config::from_json(ConfigReader(ckpt.metadata.at("stage2"), "stage2"));
  std::mt19937_64 scratch(0);
  VaeStage2Model model(cfg, vae_prior_from(ckpt, pcfg, "prior."), scratch);
  ckpt.restore(model.trainable_parameters(), true);
  model.mark_trained();
  return model;
}

std::vector<data::MotionSequence> generate(const VaeStage2Model& model, const data::AudioClip& clip,
                                           const audio::GenerateRequest& req) {
  if (!model.trained()) throw ValueError("generate: model has not been trained or loaded from a checkpoint");
  if (req.n_samples < 1) throw ValueError("generate: n_samples must be >= 1");
  if (!(req.tau >= 0.0)) throw ValueError("generate: temperature must be >= 0");
  data::validate_pipeline_clip(clip);
  req.style.validate(model.config().n_subjects);

  nn::NoGradGuard guard;
  const Index frames = audio::motion_frames_for(clip);
  const Matrix features = audio::align_to_motion_rate(model.extractor().extract(clip), frames);
  const GaussianLatent latent = model.encode(features, req.style, nn::Mode::eval());

  std::vector<data::MotionSequence> out;
  for (int i = 0; i < req.n_samples; ++i) {
    std::mt19937_64 rng = audio::sample_engine(req.seed, i);
    const Var z = reparameterize(latent, rng, req.tau);
    data::MotionSequence m;
    m.frames = model.prior().decode(z, nn::Mode::eval()).value();
    m.fps = data::kMotionFps;
    char buf[32];
    std::snprintf(buf, sizeof buf, "_sample_%02d", i);
    m.id = clip.id + buf;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace ptk::vae
