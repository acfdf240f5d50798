#include "ptk/audio/stage2.hpp"

#include <cmath>
#include <cstdio>

#include "ptk/common/error.hpp"
#include "ptk/nn/checkpoint.hpp"
#include "ptk/nn/ops.hpp"
#include "ptk/prior/stage1.hpp"

namespace ptk::audio {

using data::kExpressionDims;
using data::kJawDims;
using nlohmann::json;

void Stage2Config::validate(const std::string& prefix) const {
  if (n_layers < 0) throw ConfigError(prefix + ".n_layers", "must be >= 0");
  if (n_heads < 1) throw ConfigError(prefix + ".n_heads", "must be >= 1");
  if (d_ff < 1) throw ConfigError(prefix + ".d_ff", "must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError(prefix + ".dropout", "must lie in [0, 1)");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) throw ConfigError(prefix + ".conv_kernel", "must be odd");
  if (n_subjects < 1) throw ConfigError(prefix + ".n_subjects", "must be >= 1");
  if (features.feature_dim() < 1) throw ConfigError(prefix + ".features", "feature dimension must be >= 1");
}

json Stage2Config::to_json() const {
  return {{"n_heads", n_heads},       {"d_ff", d_ff},           {"dropout", dropout},
          {"n_layers", n_layers},     {"conv_kernel", conv_kernel}, {"n_subjects", n_subjects},
          {"use_style", use_style},   {"features", features.to_json()}};
}

Stage2Config Stage2Config::from_json(ConfigReader r) {
  Stage2Config c;
  r.read("n_heads", c.n_heads);
  r.read("d_ff", c.d_ff);
  r.read("dropout", c.dropout);
  r.read("n_layers", c.n_layers);
  r.read("conv_kernel", c.conv_kernel);
  r.read("n_subjects", c.n_subjects);
  r.read("use_style", c.use_style);
  c.features = FeatureConfig::from_json(r.child("features"));
  r.finish();
  return c;
}

StyleEmbedder::StyleEmbedder(int n_subjects, Index d_model, std::mt19937_64& rng)
    : n_subjects_(n_subjects), proj_(data::style_vector_length(n_subjects), d_model, rng) {}

Var StyleEmbedder::embed(const data::StyleCondition& style) const {
  style.validate(n_subjects_);
  return proj_.forward(Var(data::one_hot(style, n_subjects_)));
}

void StyleEmbedder::collect(const std::string& prefix, nn::ParameterList& out) const {
  proj_.collect(prefix + ".proj", out);
}

Var fuse_style(const Var& hidden, const Var& style_embedding) { return nn::mul_row(hidden, style_embedding); }

void Stage2Weights::validate() const {
  for (double w : {lat, exp, jaw}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValueError("stage-2 loss weights must be finite and >= 0");
  }
}

nn::LossValue Stage2Loss::as_loss_value() const { return {total, {{"lat", lat}, {"exp", exp}, {"jaw", jaw}}}; }

Stage2Loss stage2_loss(const Var& zq_motion, const Var& zq_audio, const Var& x, const Var& x_hat,
                       const Stage2Weights& w) {
  w.validate();
  if (zq_motion.rows() != zq_audio.rows() || zq_motion.cols() != zq_audio.cols()) {
    throw ShapeError("stage2_loss: motion and audio latents differ in shape");
  }
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    throw ShapeError("stage2_loss: reconstruction shape does not match the target");
  }
  Var l_lat = nn::l1_loss(zq_audio, zq_motion);
  Var l_exp = nn::l1_loss(nn::slice_cols(x_hat, 0, kExpressionDims), nn::slice_cols(x, 0, kExpressionDims));
  Var l_jaw = nn::l1_loss(nn::slice_cols(x_hat, kExpressionDims, kJawDims), nn::slice_cols(x, kExpressionDims, kJawDims));
  Stage2Loss out;
  out.lat = l_lat.item();
  out.exp = l_exp.item();
  out.jaw = l_jaw.item();
  out.total = nn::scale(l_lat, w.lat) + nn::scale(l_exp, w.exp) + nn::scale(l_jaw, w.jaw);
  return out;
}

AudioEncoder::AudioEncoder(const Stage2Config& cfg, Index d, std::mt19937_64& rng)
    : n_subjects_(cfg.n_subjects), use_style_(cfg.use_style) {
  nn::TransformerStackConfig stack{cfg.n_layers, d, cfg.n_heads, cfg.d_ff, cfg.dropout};
  stack.validate("stage2");
  in_proj_ = nn::Linear(cfg.features.feature_dim(), d, rng);
  if (use_style_) style_ = StyleEmbedder(cfg.n_subjects, d, rng);
  conv_ = nn::Conv1d(d, d, cfg.conv_kernel, rng);
  stack_ = nn::TransformerStack(stack, rng);
}

Var AudioEncoder::forward(const nn::Matrix& features, const data::StyleCondition& style, const nn::Mode& mode) const {
  if (features.cols() != in_proj_.in_features()) {
    throw ShapeError("audio encoder expects " + std::to_string(in_proj_.in_features()) + "-dim features, got " +
                     std::to_string(features.cols()));
  }
  style.validate(n_subjects_);
  Var h = in_proj_.forward(Var(features));
  if (use_style_) h = fuse_style(h, style_.embed(style));
  h = conv_.forward(h);
  return stack_.forward(prior::add_positional_encoding(h), mode);
}

void AudioEncoder::collect(nn::ParameterList& p) const {
  in_proj_.collect("audio.in_proj", p);
  if (use_style_) style_.collect("style", p);
  conv_.collect("audio.conv", p);
  stack_.collect("audio.transformer", p);
}

Stage2Model::Stage2Model(const Stage2Config& cfg, prior::MotionPrior prior, std::mt19937_64& rng)
    : cfg_(cfg), prior_(std::move(prior)), extractor_(make_extractor(cfg.features)) {
  cfg.validate();
  prior_.set_trainable(false);
  audio_ = AudioEncoder(cfg, prior_.config().d_model, rng);
}

Var Stage2Model::encode(const nn::Matrix& features, const data::StyleCondition& style, const nn::Mode& mode) const {
  return audio_.forward(features, style, mode);
}

Stage2Output Stage2Model::forward(const nn::Matrix& features, const data::StyleCondition& style,
                                  const nn::Mode& mode, const Sampling& sampling) const {
  Stage2Output out;
  out.z_a = encode(features, style, mode);
  const double beta = prior_.config().beta;
  if (sampling.tau > 0.0) {
    if (sampling.rng == nullptr) throw ValueError("sampling with tau > 0 needs an rng");
    out.quantized = prior::sample_quantize(prior_.codebook(), out.z_a, sampling.tau, *sampling.rng, beta);
  } else {
    out.quantized = prior::quantize_nearest(prior_.codebook(), out.z_a, beta);
  }
  out.reconstruction = prior_.decode(out.quantized.z_q, nn::Mode::eval());
  return out;
}

Var Stage2Model::motion_target(const nn::Matrix& motion) const {
  nn::NoGradGuard guard;
  return Var(prior_.forward(Var(motion), nn::Mode::eval()).quantized.z_q.value());
}

nn::ParameterList Stage2Model::trainable_parameters() const {
  nn::ParameterList p;
  audio_.collect(p);
  return p;
}

nn::ParameterList Stage2Model::all_parameters() const {
  nn::ParameterList p = trainable_parameters();
  for (auto& q : prior_.parameters()) p.push_back({"prior." + q.name, q.var});
  return p;
}

std::vector<Stage2Item> load_stage2_items(const data::DatasetManifest& manifest, data::Split split,
                                          const SpeechFeatureExtractor& extractor) {
  std::vector<Stage2Item> items;
  for (const auto* e : manifest.with_split(split)) {
    Stage2Item item;
    item.id = e->id;
    item.motion = data::read_motion(e->motion).frames;
    data::AudioClip clip = data::read_wav(e->audio);
    clip.id = e->id;
    item.features = align_to_motion_rate(extractor.extract(clip), item.motion.rows());
    item.style = manifest.style_of(*e);
    items.push_back(std::move(item));
  }
  return items;
}

namespace {

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
  return buf;
}

}  // namespace

Stage2Result train_stage2(const std::vector<Stage2Item>& train, const std::vector<Stage2Item>& val,
                          const Stage2Config& config, prior::MotionPrior prior, const Stage2Options& options,
                          std::mt19937_64& rng) {
  options.weights.validate();
  if (train.empty()) throw ValueError("empty training set");
  Stage2Result result{Stage2Model(config, std::move(prior), rng), {}, {}};
  Stage2Model& model = result.model;
  const nn::ParameterList frozen = model.prior().parameters();
  result.prior_hash = nn::parameter_hash(frozen);

  const nn::ParameterList params = model.trainable_parameters();
  std::vector<Var> vars;
  for (const auto& p : params) vars.push_back(p.var);
  nn::Adam opt(vars, nn::AdamOptions{options.lr});

  // Targets from the frozen prior never change, so compute them once.
  std::vector<Var> train_targets, val_targets;
  for (const auto& it : train) train_targets.push_back(model.motion_target(it.motion));
  for (const auto& it : val) val_targets.push_back(model.motion_target(it.motion));
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  auto loss_for = [&](const Stage2Item& it, const Var& target, const nn::Mode& mode) {
    const auto out = model.forward(it.features, it.style, mode);
    return stage2_loss(target, out.quantized.z_q, Var(it.motion), out.reconstruction, options.weights)
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
    save_stage2(model, options.checkpoint_dir / epoch_name(rec.epoch), meta);
    if (is_best) save_stage2(model, options.checkpoint_dir / "best.ckpt", meta);
  };
  if (options.log) {
    hooks.log = [&](const nn::EpochRecord& rec) {
      json j = rec.to_json();
      j["event"] = "epoch";
      j["stage"] = "stage2";
      options.log(j);
    };
  }
  result.log = nn::run_training(opt, params, hooks, options.loop, rng);

  if (nn::parameter_hash(frozen) != result.prior_hash) {
    throw Error("frozen motion prior changed during stage-2 training");
  }
  model.mark_trained();
  return result;
}

Stage2Result train_stage2(const data::DatasetManifest& manifest, const Stage2Config& config,
                          prior::MotionPrior prior, const Stage2Options& options, std::mt19937_64& rng) {
  Stage2Config cfg = config;
  cfg.n_subjects = manifest.n_style_subjects();
  const auto extractor = make_extractor(cfg.features);
  const auto train = load_stage2_items(manifest, data::Split::Train, *extractor);
  if (train.empty()) throw ValueError("empty training set: the manifest has no train entries (run split first)");
  return train_stage2(train, load_stage2_items(manifest, data::Split::Val, *extractor), cfg, std::move(prior),
                      options, rng);
}

void save_stage2(const Stage2Model& model, const std::filesystem::path& path, json metadata) {
  if (!metadata.is_object()) metadata = json::object();
  metadata["kind"] = "stage2";
  metadata["stage2"] = model.config().to_json();
  metadata["prior"] = model.prior().config().to_json();
  nn::Checkpoint::from_parameters(model.all_parameters(), metadata).save(path);
}

Stage2Model load_stage2(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::Checkpoint::load(path);
  if (ckpt.metadata.value("kind", "") != "stage2") throw FormatError(path.string() + " is not a stage-2 checkpoint");
  const auto pcfg = prior::PriorConfig::from_json(ConfigReader(ckpt.metadata.at("prior"), "prior"));
  const auto cfg = Stage2Config::from_json(ConfigReader(ckpt.metadata.at("stage2"), "stage2"));
  std::mt19937_64 scratch(0);
  Stage2Model model(cfg, prior::prior_from_checkpoint(ckpt, pcfg, "prior."), scratch);
  ckpt.restore(model.trainable_parameters(), true);
  model.mark_trained();
  return model;
}

std::mt19937_64 sample_engine(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

Index motion_frames_for(const data::AudioClip& clip) {
  return std::max<Index>(1, static_cast<Index>(std::llround(clip.duration() * data::kMotionFps)));
}

std::vector<data::MotionSequence> generate(const Stage2Model& model, const data::AudioClip& clip,
                                           const GenerateRequest& req) {
  if (!model.trained()) throw ValueError("generate: model has not been trained or loaded from a checkpoint");
  if (req.n_samples < 1) throw ValueError("generate: n_samples must be >= 1");
  if (!(req.tau >= 0.0)) throw ValueError("generate: temperature must be >= 0");
  data::validate_pipeline_clip(clip);
  req.style.validate(model.config().n_subjects);

  nn::NoGradGuard guard;
  const Index frames = motion_frames_for(clip);
  const nn::Matrix features = align_to_motion_rate(model.extractor().extract(clip), frames);
  const Var z_a = model.encode(features, req.style, nn::Mode::eval());
  const auto& prior = model.prior();

  std::vector<data::MotionSequence> out;
  for (int i = 0; i < req.n_samples; ++i) {
    std::mt19937_64 rng = sample_engine(req.seed, i);
    const auto q = prior::sample_quantize(prior.codebook(), z_a, req.tau, rng, prior.config().beta);
    data::MotionSequence m;
    m.frames = prior.decode(q.z_q, nn::Mode::eval()).value();
    m.fps = data::kMotionFps;
    char buf[32];
    std::snprintf(buf, sizeof buf, "_sample_%02d", i);
    m.id = clip.id + buf;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace ptk::audio
