#include "ptk/config/run_config.hpp"

#include <cmath>
#include <fstream>

#include "ptk/common/config_reader.hpp"
#include "ptk/common/error.hpp"
#include "ptk/common/hash.hpp"

namespace ptk::config {

using nlohmann::json;

namespace {

json loop_json(const nn::LoopOptions& l) {
  return {{"max_epochs", l.max_epochs}, {"patience", l.patience}, {"batch_size", l.batch_size}};
}

void read_loop(ConfigReader& r, nn::LoopOptions& l) {
  r.read("max_epochs", l.max_epochs);
  r.read("patience", l.patience);
  r.read("batch_size", l.batch_size);
}

void check_loop(const nn::LoopOptions& l, const std::string& p) {
  if (l.max_epochs < 1) throw ConfigError(p + ".max_epochs", "must be >= 1");
  if (l.patience < 1) throw ConfigError(p + ".patience", "must be >= 1");
  if (l.batch_size < 1) throw ConfigError(p + ".batch_size", "must be >= 1");
}

void check_rate(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be a positive finite number");
}

void check_weights(std::initializer_list<std::pair<const char*, double>> ws, const std::string& p) {
  for (const auto& [k, w] : ws) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(p + ".weights." + k, "must be finite and >= 0");
  }
}

json stage2_training_json(const audio::Stage2Options& o) {
  json j = loop_json(o.loop);
  j["lr"] = o.lr;
  j["weights"] = {{"lat", o.weights.lat}, {"exp", o.weights.exp}, {"jaw", o.weights.jaw}};
  return j;
}

void read_stage2_training(ConfigReader r, audio::Stage2Options& o) {
  r.read("lr", o.lr);
  read_loop(r, o.loop);
  ConfigReader w = r.child("weights");
  w.read("lat", o.weights.lat);
  w.read("exp", o.weights.exp);
  w.read("jaw", o.weights.jaw);
  w.finish();
  r.finish();
}

}  // namespace

void RunConfig::validate() const {
  prior.validate("prior");
  check_rate(train_prior.lr, "train_prior.lr");
  if (!(train_prior.weight_decay >= 0.0)) throw ConfigError("train_prior.weight_decay", "must be >= 0");
  check_loop(train_prior.loop, "train_prior");
  check_weights({{"qua", train_prior.weights.qua}, {"exp", train_prior.weights.exp}, {"jaw", train_prior.weights.jaw}},
                "train_prior");

  stage2.validate("stage2");
  check_rate(train_stage2.lr, "train_stage2.lr");
  check_loop(train_stage2.loop, "train_stage2");
  check_weights({{"lat", train_stage2.weights.lat}, {"exp", train_stage2.weights.exp},
                 {"jaw", train_stage2.weights.jaw}},
                "train_stage2");

  vae.validate("vae");
  check_rate(train_vae1.lr, "train_vae1.lr");
  if (!(train_vae1.weight_decay >= 0.0)) throw ConfigError("train_vae1.weight_decay", "must be >= 0");
  check_loop(train_vae1.loop, "train_vae1");
  check_weights({{"kl", train_vae1.weights.kl}, {"exp", train_vae1.weights.exp}, {"jaw", train_vae1.weights.jaw}},
                "train_vae1");
  check_rate(train_vae2.lr, "train_vae2.lr");
  check_loop(train_vae2.loop, "train_vae2");
  check_weights({{"lat", train_vae2.weights.lat}, {"exp", train_vae2.weights.exp}, {"jaw", train_vae2.weights.jaw}},
                "train_vae2");

  if (generate.n_samples < 1) throw ConfigError("generate.n_samples", "must be >= 1");
  if (!(generate.tau >= 0.0) || !std::isfinite(generate.tau)) throw ConfigError("generate.tau", "must be >= 0");
  if (eval.n_samples < 1) throw ConfigError("eval.n_samples", "must be >= 1");
  if (eval.diversity_subset < 1) throw ConfigError("eval.diversity_subset", "must be >= 1");
  if (eval.n_samples > 1 && eval.n_samples < 2 * eval.diversity_subset) {
    throw ConfigError("eval.diversity_subset", "needs n_samples >= 2 * diversity_subset");
  }
}

json RunConfig::to_json() const {
  json tp = loop_json(train_prior.loop);
  tp["lr"] = train_prior.lr;
  tp["weight_decay"] = train_prior.weight_decay;
  tp["weights"] = {{"qua", train_prior.weights.qua}, {"exp", train_prior.weights.exp}, {"jaw", train_prior.weights.jaw}};

  json tv1 = loop_json(train_vae1.loop);
  tv1["lr"] = train_vae1.lr;
  tv1["weight_decay"] = train_vae1.weight_decay;
  tv1["weights"] = {{"kl", train_vae1.weights.kl}, {"exp", train_vae1.weights.exp}, {"jaw", train_vae1.weights.jaw}};

  return {{"seed", seed},
          {"prior", prior.to_json()},
          {"train_prior", tp},
          {"stage2", stage2.to_json()},
          {"train_stage2", stage2_training_json(train_stage2)},
          {"vae", vae.to_json()},
          {"train_vae1", tv1},
          {"train_vae2", stage2_training_json(train_vae2)},
          {"generate", {{"n_samples", generate.n_samples}, {"tau", generate.tau}}},
          {"eval",
           {{"n_samples", eval.n_samples}, {"diversity_subset", eval.diversity_subset}, {"seed", eval.seed}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  // VAE stage 2 trains the same audio encoder as the quantized variant, so it starts from the same optimizer settings.
  c.train_vae2 = c.train_stage2;

  ConfigReader r(j, "");
  r.read("seed", c.seed);
  c.prior = prior::PriorConfig::from_json(r.child("prior"));
  {
    ConfigReader t = r.child("train_prior");
    t.read("lr", c.train_prior.lr);
    t.read("weight_decay", c.train_prior.weight_decay);
    read_loop(t, c.train_prior.loop);
    ConfigReader w = t.child("weights");
    w.read("qua", c.train_prior.weights.qua);
    w.read("exp", c.train_prior.weights.exp);
    w.read("jaw", c.train_prior.weights.jaw);
    w.finish();
    t.finish();
  }
  c.stage2 = audio::Stage2Config::from_json(r.child("stage2"));
  read_stage2_training(r.child("train_stage2"), c.train_stage2);
  c.vae = vae::VaeConfig::from_json(r.child("vae"));
  {
    ConfigReader t = r.child("train_vae1");
    t.read("lr", c.train_vae1.lr);
    t.read("weight_decay", c.train_vae1.weight_decay);
    read_loop(t, c.train_vae1.loop);
    ConfigReader w = t.child("weights");
    w.read("kl", c.train_vae1.weights.kl);
    w.read("exp", c.train_vae1.weights.exp);
    w.read("jaw", c.train_vae1.weights.jaw);
    w.finish();
    t.finish();
  }
  read_stage2_training(r.child("train_vae2"), c.train_vae2);
  {
    ConfigReader g = r.child("generate");
    g.read("n_samples", c.generate.n_samples);
    g.read("tau", c.generate.tau);
    g.finish();
  }
  {
    ConfigReader e = r.child("eval");
    e.read("n_samples", c.eval.n_samples);
    e.read("diversity_subset", c.eval.diversity_subset);
    e.read("seed", c.eval.seed);
    e.finish();
  }
  r.finish();
  c.validate();
  return c;
}

std::string RunConfig::hash() const { return fnv1a_hex(to_json().dump()); }

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must look like key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component");
    if (!node->is_object()) throw ConfigError(key, "parent is not an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<config>", "cannot open " + path.string());
    j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("<config>", "invalid JSON in " + path.string());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return RunConfig::from_json(j);
}

}  // namespace ptk::config
