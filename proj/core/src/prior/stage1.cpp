#include "ptk/prior/stage1.hpp"

#include <cmath>
#include <cstdio>

#include "ptk/common/error.hpp"
#include "ptk/data/motion.hpp"
#include "ptk/nn/ops.hpp"

namespace ptk::prior {

using data::kExpressionDims;
using data::kJawDims;
using nlohmann::json;

void Stage1Weights::validate() const {
  for (double w : {qua, exp, jaw}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValueError("stage-1 loss weights must be finite and >= 0");
  }
}

nn::LossValue Stage1Loss::as_loss_value() const { return {total, {{"qua", qua}, {"exp", exp}, {"jaw", jaw}}}; }

Stage1Loss stage1_loss(const Var& x, const Var& x_hat, const Var& loss_qua, const Stage1Weights& w) {
  w.validate();
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    throw ShapeError("stage1_loss: reconstruction shape does not match the target");
  }
  Var l_exp = nn::l1_loss(nn::slice_cols(x_hat, 0, kExpressionDims), nn::slice_cols(x, 0, kExpressionDims));
  Var l_jaw = nn::l1_loss(nn::slice_cols(x_hat, kExpressionDims, kJawDims), nn::slice_cols(x, kExpressionDims, kJawDims));
  Stage1Loss out;
  out.qua = loss_qua.item();
  out.exp = l_exp.item();
  out.jaw = l_jaw.item();
  out.total = nn::scale(loss_qua, w.qua) + nn::scale(l_exp, w.exp) + nn::scale(l_jaw, w.jaw);
  return out;
}

namespace {

json usage_json(const Codebook& cb) {
  std::int64_t used = 0;
  for (auto c : cb.usage()) used += c > 0;
  return {{"codebook_usage", cb.usage()}, {"codes_used", used}};
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
  return buf;
}

}  // namespace

Stage1Result train_stage1(const std::vector<nn::Matrix>& train, const std::vector<nn::Matrix>& val,
                          const PriorConfig& config, const Stage1Options& options, std::mt19937_64& rng) {
  options.weights.validate();
  if (train.empty()) throw ValueError("empty training set");
  Stage1Result result{MotionPrior(config, rng), {}};
  MotionPrior& model = result.model;
  const nn::ParameterList params = model.parameters();
  std::vector<Var> vars;
  for (const auto& p : params) vars.push_back(p.var);
  nn::Adam opt = nn::make_adamw(vars, options.lr, options.weight_decay);

  std::vector<Var> train_vars, val_vars;
  for (const auto& m : train) train_vars.emplace_back(m);
  for (const auto& m : val) val_vars.emplace_back(m);
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  nn::LoopHooks hooks;
  hooks.n_train = train_vars.size();
  hooks.n_val = val_vars.size();
  hooks.train_loss = [&](std::size_t i, const nn::Mode& mode) {
    const auto out = model.forward(train_vars[i], mode);
    model.codebook().record_usage(out.quantized.indices);
    return stage1_loss(train_vars[i], out.reconstruction, out.quantized.loss_qua, options.weights).as_loss_value();
  };
  hooks.val_loss = [&](std::size_t i) {
    const auto out = model.forward(val_vars[i], nn::Mode::eval());
    return stage1_loss(val_vars[i], out.reconstruction, out.quantized.loss_qua, options.weights).as_loss_value();
  };
  hooks.on_epoch_end = [&](nn::EpochRecord& rec, bool is_best) {
    rec.extra = usage_json(model.codebook());
    model.codebook().reset_usage();
    if (options.checkpoint_dir.empty()) return;
    const json meta = {{"stage", 1}, {"epoch", rec.epoch}, {"val_loss", rec.val_loss}};
    save_prior(model, options.checkpoint_dir / epoch_name(rec.epoch), meta);
    if (is_best) save_prior(model, options.checkpoint_dir / "best.ckpt", meta);
  };
  if (options.log) {
    hooks.log = [&](const nn::EpochRecord& rec) {
      json j = rec.to_json();
      j["event"] = "epoch";
      j["stage"] = "prior";
      options.log(j);
    };
  }
  result.log = nn::run_training(opt, params, hooks, options.loop, rng);
  return result;
}

std::vector<nn::Matrix> load_split_motion(const data::DatasetManifest& manifest, data::Split s) {
  std::vector<nn::Matrix> out;
  for (const auto* e : manifest.with_split(s)) out.push_back(data::read_motion(e->motion).frames);
  return out;
}

Stage1Result train_stage1(const data::DatasetManifest& manifest, const PriorConfig& config,
                          const Stage1Options& options, std::mt19937_64& rng) {
  const auto train = load_split_motion(manifest, data::Split::Train);
  if (train.empty()) throw ValueError("empty training set: the manifest has no train entries (run split first)");
  return train_stage1(train, load_split_motion(manifest, data::Split::Val), config, options, rng);
}

void save_prior(const MotionPrior& model, const std::filesystem::path& path, json metadata) {
  if (!metadata.is_object()) metadata = json::object();
  metadata["kind"] = "prior";
  metadata["model"] = model.config().to_json();
  nn::Checkpoint::from_parameters(model.parameters(), metadata).save(path);
}

MotionPrior prior_from_checkpoint(const nn::Checkpoint& ckpt, const PriorConfig& config, const std::string& prefix) {
  std::mt19937_64 scratch(0);
  MotionPrior model(config, scratch);
  nn::ParameterList renamed = model.parameters();
  for (auto& p : renamed) p.name = prefix + p.name;
  ckpt.restore(renamed, !prefix.empty());
  return model;
}

MotionPrior load_prior(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::Checkpoint::load(path);
  if (ckpt.metadata.value("kind", "") != "prior" || !ckpt.metadata.contains("model")) {
    throw FormatError(path.string() + " is not a motion prior checkpoint");
  }
  return prior_from_checkpoint(ckpt, PriorConfig::from_json(ConfigReader(ckpt.metadata.at("model"), "model")));
}

}  // namespace ptk::prior
