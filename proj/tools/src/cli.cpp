#include "ptk_cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptk/audio/stage2.hpp"
#include "ptk/common/error.hpp"
#include "ptk/common/hash.hpp"
#include "ptk/config/run_config.hpp"
#include "ptk/data/audio.hpp"
#include "ptk/data/manifest.hpp"
#include "ptk/data/motion.hpp"
#include "ptk/data/synthetic.hpp"
#include "ptk/face/face_model.hpp"
#include "ptk/metrics/metrics.hpp"
#include "ptk/nn/checkpoint.hpp"
#include "ptk/prior/stage1.hpp"
#include "ptk/vae/vae.hpp"

namespace ptk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFaceModelFile = "facemodel.ptfm";
constexpr const char* kRunManifestFile = "run_manifest.json";

/// JSON-lines sink: stdout unless --quiet, plus an optional file.
class JsonLog {
 public:
  JsonLog(std::ostream& out, bool quiet, const std::string& file) : out_(quiet ? nullptr : &out) {
    if (!file.empty()) {
      const fs::path p(file);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      file_ = std::make_unique<std::ofstream>(p, std::ios::app);
      if (!*file_) throw Error("cannot open log file " + file);
    }
  }

  void write(const json& record) {
    const std::string line = record.dump();
    if (out_) *out_ << line << '\n' << std::flush;
    if (file_) *file_ << line << '\n' << std::flush;
  }

  std::function<void(const json&)> sink() {
    return [this](const json& j) { write(j); };
  }

 private:
  std::ostream* out_;
  std::unique_ptr<std::ofstream> file_;
};

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  Fnv1a h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(std::as_bytes(std::span<const char>(buf.data(), static_cast<std::size_t>(in.gcount()))));
  }
  return h.hex();
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("write failed: " + path.string());
}

json checkpoint_hashes(const fs::path& dir) {
  json h = json::object();
  if (!fs::exists(dir)) return h;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".ckpt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) h[f.filename().string()] = file_hash(f);
  return h;
}

// Options shared by every command that reads a run configuration.
struct ConfigArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string log_file;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration (defaults when omitted)");
    app->add_option("--set", overrides, "Override a config key, e.g. --set train_prior.max_epochs=3")
        ->take_all();
    app->add_option("--seed", seed, "Seed; overrides the config value");
    app->add_option("--log", log_file, "Also append JSON-lines records to this file");
    app->add_flag("--quiet", quiet, "Do not echo log records to stdout");
  }

  config::RunConfig load() const {
    std::vector<std::string> all = overrides;
    if (seed) all.push_back("seed=" + std::to_string(*seed));
    return config::load_run_config(config, all);
  }
};

json run_header(const std::string& command, const config::RunConfig& cfg) {
  return {{"event", "start"}, {"command", command}, {"config_hash", cfg.hash()}, {"seed", cfg.seed}};
}

json run_manifest(const std::string& command, const config::RunConfig& cfg) {
  return {{"format", "ptk-run/1"},
          {"command", command},
          {"config", cfg.to_json()},
          {"config_hash", cfg.hash()},
          {"seeds", {{"run", cfg.seed}}}};
}

void check_manifest_split(const data::DatasetManifest& m, int stage, const std::string& command) {
  if (m.split_stage != stage) {
    throw ValueError(command + ": manifest carries a stage-" + std::to_string(m.split_stage) +
                     " split; run `ptk split --stage " + std::to_string(stage) + "` first");
  }
}

void finish_training(JsonLog& log, const std::string& command, const config::RunConfig& cfg, const fs::path& out,
                     const nn::TrainingLog& tlog, json extra) {
  json m = run_manifest(command, cfg);
  m["checkpoints"] = checkpoint_hashes(out);
  m["training"] = tlog.to_json();
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_json(out / kRunManifestFile, m);
  log.write({{"event", "done"},
             {"command", command},
             {"best_epoch", tlog.best_epoch},
             {"best_val_loss", tlog.best_val_loss},
             {"early_stopped", tlog.early_stopped},
             {"checkpoint", (out / "best.ckpt").string()}});
}

// ---- synth-data ----------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 0;
  int subjects = 4;
  int heldout = 0;
  int sentences = 4;
  int neutral_sentences = -1;
  std::vector<std::string> emotions;
  double min_seconds = 1.0;
  double max_seconds = 2.0;
  long vertices = 64;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  data::SyntheticOptions o;
  o.seed = a.seed;
  o.n_subjects = a.subjects;
  o.n_heldout_subjects = a.heldout;
  o.n_sentences = a.sentences;
  o.n_neutral_sentences = a.neutral_sentences;
  if (!a.emotions.empty()) o.emotions = a.emotions;
  o.min_seconds = a.min_seconds;
  o.max_seconds = a.max_seconds;
  o.out_dir = a.out;
  const auto manifest = data::generate_synthetic_dataset(o);
  const auto face = face::make_toy_facemodel(a.seed, a.vertices);
  face::save_facemodel(face, fs::path(a.out) / kFaceModelFile);

  json m = {{"format", "ptk-run/1"},
            {"command", "synth-data"},
            {"seeds", {{"run", a.seed}}},
            {"options",
             {{"subjects", a.subjects}, {"heldout", a.heldout}, {"sentences", a.sentences},
              {"neutral_sentences", a.neutral_sentences}, {"emotions", o.emotions},
              {"min_seconds", a.min_seconds}, {"max_seconds", a.max_seconds}, {"vertices", a.vertices}}},
            {"files",
             {{"manifest.json", file_hash(fs::path(a.out) / "manifest.json")},
              {kFaceModelFile, file_hash(fs::path(a.out) / kFaceModelFile)}}}};
  write_json(fs::path(a.out) / kRunManifestFile, m);
  out << json{{"event", "done"}, {"command", "synth-data"}, {"entries", manifest.entries.size()},
              {"manifest", (fs::path(a.out) / "manifest.json").string()}}
             .dump()
      << '\n';
  return kExitOk;
}

// ---- split ---------------------------------------------------------------

struct SplitArgs {
  std::string manifest;
  std::string out;
  int stage = 2;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const auto m = data::load_manifest(a.manifest);
  const auto split = data::split_dataset(m, a.stage);
  const fs::path dest = a.out.empty() ? fs::path(a.manifest) : fs::path(a.out);
  data::save_manifest(split, dest);
  json counts = json::object();
  for (auto s : {data::Split::Train, data::Split::Val, data::Split::Test, data::Split::None}) {
    counts[std::string(data::to_string(s))] = split.with_split(s).size();
  }
  out << json{{"event", "done"}, {"command", "split"}, {"stage", a.stage}, {"counts", counts},
              {"manifest", dest.string()}}
             .dump()
      << '\n';
  return kExitOk;
}

// ---- train-prior / train-stage2 / train-vae --------------------------------

struct TrainArgs {
  ConfigArgs cfg;
  std::string data;
  std::string out;
  std::string prior;
  int stage = 1;
};

int cmd_train_prior(const TrainArgs& a, std::ostream& out) {
  auto cfg = a.cfg.load();
  JsonLog log(out, a.cfg.quiet, a.cfg.log_file);
  log.write(run_header("train-prior", cfg));
  const auto manifest = data::load_manifest(a.data);
  auto opts = cfg.train_prior;
  opts.checkpoint_dir = a.out;
  opts.log = log.sink();
  std::mt19937_64 rng(cfg.seed);
  auto result = prior::train_stage1(manifest, cfg.prior, opts, rng);
  finish_training(log, "train-prior", cfg, a.out, result.log, {{"data", {{"manifest", file_hash(a.data)}}}});
  return kExitOk;
}

int cmd_train_stage2(const TrainArgs& a, std::ostream& out) {
  auto cfg = a.cfg.load();
  JsonLog log(out, a.cfg.quiet, a.cfg.log_file);
  log.write(run_header("train-stage2", cfg));
  const auto manifest = data::load_manifest(a.data);
  check_manifest_split(manifest, 2, "train-stage2");
  auto prior_model = prior::load_prior(a.prior);
  auto opts = cfg.train_stage2;
  opts.checkpoint_dir = a.out;
  opts.log = log.sink();
  std::mt19937_64 rng(cfg.seed);
  auto result = audio::train_stage2(manifest, cfg.stage2, prior_model, opts, rng);
  finish_training(log, "train-stage2", cfg, a.out, result.log,
                  {{"data", {{"manifest", file_hash(a.data)}}},
                   {"prior", {{"checkpoint", file_hash(a.prior)}, {"parameter_hash", result.prior_hash}}}});
  return kExitOk;
}

int cmd_train_vae(const TrainArgs& a, std::ostream& out) {
  auto cfg = a.cfg.load();
  JsonLog log(out, a.cfg.quiet, a.cfg.log_file);
  log.write(run_header("train-vae", cfg));
  const auto manifest = data::load_manifest(a.data);
  std::mt19937_64 rng(cfg.seed);
  if (a.stage == 1) {
    auto opts = cfg.train_vae1;
    opts.checkpoint_dir = a.out;
    opts.log = log.sink();
    auto result = vae::train_vae_stage1(manifest, cfg.vae, opts, rng);
    finish_training(log, "train-vae", cfg, a.out, result.log,
                    {{"stage", 1}, {"data", {{"manifest", file_hash(a.data)}}}});
    return kExitOk;
  }
  if (a.prior.empty()) throw ConfigError("--prior", "train-vae --stage 2 needs the stage-1 VAE checkpoint");
  check_manifest_split(manifest, 2, "train-vae");
  auto prior_model = vae::load_vae_prior(a.prior);
  auto opts = cfg.train_vae2;
  opts.checkpoint_dir = a.out;
  opts.log = log.sink();
  auto result = vae::train_vae_stage2(manifest, cfg.stage2, prior_model, opts, rng);
  finish_training(log, "train-vae", cfg, a.out, result.log,
                  {{"stage", 2},
                   {"data", {{"manifest", file_hash(a.data)}}},
                   {"prior", {{"checkpoint", file_hash(a.prior)}, {"parameter_hash", result.prior_hash}}}});
  return kExitOk;
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
  ConfigArgs cfg;
  std::string model;
  std::string audio;
  std::string manifest;
  std::string split = "test";
  int subject = 0;
  std::string emotion = "neutral";
  std::string intensity;
  std::optional<int> samples;
  std::optional<double> temperature;
  std::string out;
};

// Either checkpoint kind that can generate from audio.
class Generator {
 public:
  explicit Generator(const fs::path& path) {
    const auto kind = nn::Checkpoint::load(path).metadata.value("kind", "");
    if (kind == "stage2") {
      vq_.emplace(audio::load_stage2(path));
    } else if (kind == "vae2") {
      vae_.emplace(vae::load_vae_stage2(path));
    } else {
      throw FormatError(path.string() + ": expected a stage-2 checkpoint (kind stage2 or vae2), found \"" + kind +
                        "\"");
    }
    kind_ = kind;
  }

  std::vector<data::MotionSequence> operator()(const data::AudioClip& clip, const audio::GenerateRequest& r) const {
    return vq_ ? audio::generate(*vq_, clip, r) : vae::generate(*vae_, clip, r);
  }

  int n_subjects() const { return vq_ ? vq_->config().n_subjects : vae_->config().n_subjects; }
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
  std::optional<audio::Stage2Model> vq_;
  std::optional<vae::VaeStage2Model> vae_;
};

json style_json(const data::StyleCondition& s) {
  return {{"subject", s.subject}, {"emotion", s.emotion}, {"intensity", s.intensity}};
}

void write_samples(const fs::path& dir, const std::string& id, const std::vector<data::MotionSequence>& seqs,
                   const json& meta) {
  fs::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%02zu.ptm", i);
    data::write_motion(seqs[i], dir / name);
    files.push_back(name);
  }
  json m = meta;
  m["id"] = id;
  m["files"] = files;
  m["frames"] = seqs.empty() ? 0 : seqs.front().num_frames();
  write_json(dir / "meta.json", m);
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  auto cfg = a.cfg.load();
  if (a.samples) {
    if (*a.samples < 1) throw ConfigError("--samples", "must be >= 1");
    cfg.generate.n_samples = *a.samples;
  }
  if (a.temperature) {
    if (!(*a.temperature >= 0.0)) throw ConfigError("--temperature", "must be >= 0");
    cfg.generate.tau = *a.temperature;
  }
  if (a.audio.empty() == a.manifest.empty()) {
    throw ConfigError("--audio/--manifest", "give exactly one of --audio or --manifest");
  }
  JsonLog log(out, a.cfg.quiet, a.cfg.log_file);
  log.write(run_header("generate", cfg));
  const Generator gen(a.model);
  const fs::path out_dir(a.out);

  audio::GenerateRequest req;
  req.n_samples = cfg.generate.n_samples;
  req.tau = cfg.generate.tau;
  req.seed = cfg.seed;
  const json common = {{"model", a.model}, {"model_hash", file_hash(a.model)}, {"kind", gen.kind()},
                       {"n_samples", req.n_samples}, {"tau", req.tau}, {"seed", req.seed}};

  json produced = json::array();
  if (!a.audio.empty()) {
    const auto emotion = data::emotion_index(a.emotion);
    if (!emotion) throw ConfigError("--emotion", "unknown emotion \"" + a.emotion + "\"");
    const std::string intensity_name =
        a.intensity.empty() ? std::string(a.emotion == "neutral" ? data::kNoIntensity : "medium") : a.intensity;
    const auto intensity = data::intensity_index(intensity_name);
    if (!intensity) throw ConfigError("--intensity", "unknown intensity \"" + intensity_name + "\"");
    req.style = {a.subject, *emotion, *intensity};
    try {
      req.style.validate(gen.n_subjects());
    } catch (const ValueError& e) {
      throw ConfigError("--subject", e.what());
    }
    const auto clip = data::read_wav(a.audio);
    const auto seqs = gen(clip, req);
    json meta = common;
    meta["audio"] = a.audio;
    meta["style"] = style_json(req.style);
    write_samples(out_dir / clip.id, clip.id, seqs, meta);
    produced.push_back(clip.id);
    log.write({{"event", "generated"}, {"id", clip.id}, {"frames", seqs.front().num_frames()}});
  } else {
    const auto manifest = data::load_manifest(a.manifest);
    const auto split = data::parse_split(a.split);
    if (!split) throw ConfigError("--split", "expected train, val, test or none");
    const auto entries = manifest.with_split(*split);
    if (entries.empty()) throw ValueError("generate: no entries with split \"" + a.split + "\"");
    for (const auto* e : entries) {
      req.style = manifest.style_of(*e);
      auto clip = data::read_wav(e->audio);
      clip.id = e->id;
      const auto seqs = gen(clip, req);
      json meta = common;
      meta["audio"] = e->audio.string();
      meta["style"] = style_json(req.style);
      write_samples(out_dir / e->id, e->id, seqs, meta);
      produced.push_back(e->id);
      log.write({{"event", "generated"}, {"id", e->id}, {"frames", seqs.front().num_frames()}});
    }
  }
  json m = run_manifest("generate", cfg);
  m["checkpoints"] = {{fs::path(a.model).filename().string(), file_hash(a.model)}};
  m["seeds"]["samples"] = "sample i uses an engine seeded with (seed, i)";
  m["outputs"] = produced;
  write_json(out_dir / kRunManifestFile, m);
  log.write({{"event", "done"}, {"command", "generate"}, {"sequences", produced.size()}});
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  ConfigArgs cfg;
  std::string pred;
  std::string manifest;
  std::string face;
  std::optional<int> samples;
  std::optional<int> subset;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  auto cfg = a.cfg.load();
  if (a.samples) cfg.eval.n_samples = *a.samples;
  if (a.subset) cfg.eval.diversity_subset = *a.subset;
  if (a.cfg.seed) cfg.eval.seed = *a.cfg.seed;
  cfg.validate();
  JsonLog log(out, a.cfg.quiet, a.cfg.log_file);
  log.write(run_header("evaluate", cfg));
  const auto manifest = data::load_manifest(a.manifest);
  const auto face = face::load_facemodel(a.face);
  const auto report = metrics::evaluate(a.pred, manifest, face, cfg.eval);
  const json rj = report.to_json();
  write_json(a.out, rj);

  json m = run_manifest("evaluate", cfg);
  m["seeds"]["diversity"] = cfg.eval.seed;
  m["inputs"] = {{"manifest", file_hash(a.manifest)}, {"face", file_hash(a.face)}};
  m["report"] = file_hash(a.out);
  write_json(fs::path(a.out).string() + ".run_manifest.json", m);
  log.write({{"event", "metrics"}, {"raw", rj.at("raw")}, {"scaled", rj.at("scaled")}});
  log.write({{"event", "done"}, {"command", "evaluate"}, {"report", a.out}});
  return kExitOk;
}

// ---- heatmap ---------------------------------------------------------------

struct HeatmapArgs {
  std::string motion;
  std::string face;
  std::string out;
};

int cmd_heatmap(const HeatmapArgs& a, std::ostream& out) {
  const auto face = face::load_facemodel(a.face);
  const auto seq = data::read_motion(a.motion);
  const auto h = metrics::dynamics_heatmap(face.params_to_displacements(seq.frames));
  metrics::write_heatmap_csv(h, a.out);
  out << json{{"event", "done"}, {"command", "heatmap"}, {"vertices", h.mean.size()}, {"csv", a.out}}.dump()
      << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ptk: two-stage speech-driven facial motion toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-data", "Write a synthetic audio/motion dataset and a toy face model");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed, "Generator seed");
  c_synth->add_option("--subjects", synth.subjects, "Training-role subjects")->check(CLI::PositiveNumber);
  c_synth->add_option("--heldout", synth.heldout, "Held-out subjects")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--sentences", synth.sentences, "Sentences per emotion and intensity")
      ->check(CLI::PositiveNumber);
  c_synth->add_option("--neutral-sentences", synth.neutral_sentences, "Neutral sentences (default: --sentences)");
  c_synth->add_option("--emotions", synth.emotions, "Emotion subset")->delimiter(',');
  c_synth->add_option("--min-seconds", synth.min_seconds, "Shortest clip");
  c_synth->add_option("--max-seconds", synth.max_seconds, "Longest clip");
  c_synth->add_option("--vertices", synth.vertices, "Vertices of the toy face model")->check(CLI::Range(16L, 1L << 20));

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Assign train/val/test labels by sentence position");
  c_split->add_option("--manifest", split.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  c_split->add_option("--stage", split.stage, "1 (subject-level) or 2 (sentence-level)")
      ->check(CLI::IsMember({1, 2}));
  c_split->add_option("--out", split.out, "Output manifest (default: overwrite input)");

  TrainArgs tp;
  auto* c_tp = app.add_subcommand("train-prior", "Train the stage-1 motion prior");
  tp.cfg.attach(c_tp);
  c_tp->add_option("--data", tp.data, "Split manifest")->required()->check(CLI::ExistingFile);
  c_tp->add_option("--out", tp.out, "Checkpoint directory")->required();

  TrainArgs ts;
  auto* c_ts = app.add_subcommand("train-stage2", "Train the audio encoder against a frozen prior");
  ts.cfg.attach(c_ts);
  c_ts->add_option("--data", ts.data, "Stage-2 split manifest")->required()->check(CLI::ExistingFile);
  c_ts->add_option("--prior", ts.prior, "Stage-1 checkpoint")->required()->check(CLI::ExistingFile);
  c_ts->add_option("--out", ts.out, "Checkpoint directory")->required();

  TrainArgs tv;
  auto* c_tv = app.add_subcommand("train-vae", "Train the Gaussian-latent comparison model");
  tv.cfg.attach(c_tv);
  c_tv->add_option("--stage", tv.stage, "1 (motion autoencoder) or 2 (audio encoder)")
      ->required()
      ->check(CLI::IsMember({1, 2}));
  c_tv->add_option("--data", tv.data, "Split manifest")->required()->check(CLI::ExistingFile);
  c_tv->add_option("--prior", tv.prior, "Stage-1 VAE checkpoint (stage 2 only)")->check(CLI::ExistingFile);
  c_tv->add_option("--out", tv.out, "Checkpoint directory")->required();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Generate motion samples from audio");
  gen.cfg.attach(c_gen);
  c_gen->add_option("--model", gen.model, "Stage-2 checkpoint")->required()->check(CLI::ExistingFile);
  c_gen->add_option("--audio", gen.audio, "Single WAV clip")->check(CLI::ExistingFile);
  c_gen->add_option("--manifest", gen.manifest, "Generate for every entry of --split instead")
      ->check(CLI::ExistingFile);
  c_gen->add_option("--split", gen.split, "Split used with --manifest");
  c_gen->add_option("--subject", gen.subject, "Training subject index");
  c_gen->add_option("--emotion", gen.emotion, "Emotion label");
  c_gen->add_option("--intensity", gen.intensity, "weak, medium, strong (neutral uses none)");
  c_gen->add_option("--samples", gen.samples, "Samples per clip (overrides generate.n_samples)");
  c_gen->add_option("--temperature", gen.temperature, "Sampling temperature, 0 for argmin");
  c_gen->add_option("--out", gen.out, "Output directory")->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score generated samples against the test split");
  ev.cfg.attach(c_ev);
  c_ev->add_option("--pred", ev.pred, "Directory written by generate")->required()->check(CLI::ExistingDirectory);
  c_ev->add_option("--manifest,--gt", ev.manifest, "Split manifest with the ground truth")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--face,--facemodel", ev.face, "Face model file")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--samples", ev.samples, "Samples per sequence (overrides eval.n_samples)");
  c_ev->add_option("--diversity-subset", ev.subset, "Subset size B for diversity");
  c_ev->add_option("--out", ev.out, "Report JSON path")->required();

  HeatmapArgs hm;
  auto* c_hm = app.add_subcommand("heatmap", "Per-vertex motion dynamics (mean and std of frame-to-frame speed)");
  c_hm->add_option("--motion", hm.motion, "Motion file")->required()->check(CLI::ExistingFile);
  c_hm->add_option("--face,--facemodel", hm.face, "Face model file")->required()->check(CLI::ExistingFile);
  c_hm->add_option("--out", hm.out, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, out);
    if (c_split->parsed()) return cmd_split(split, out);
    if (c_tp->parsed()) return cmd_train_prior(tp, out);
    if (c_ts->parsed()) return cmd_train_stage2(ts, out);
    if (c_tv->parsed()) return cmd_train_vae(tv, out);
    if (c_gen->parsed()) return cmd_generate(gen, out);
    if (c_ev->parsed()) return cmd_evaluate(ev, out);
    if (c_hm->parsed()) return cmd_heatmap(hm, out);
  } catch (const ConfigError& e) {
    err << "ptk: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "ptk: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ptk::cli
