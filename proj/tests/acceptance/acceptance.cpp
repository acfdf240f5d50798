// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "tmpdir.hpp"
#include "ptk/audio/stage2.hpp"
#include "ptk/data/manifest.hpp"
#include "ptk/data/motion.hpp"
#include "ptk/data/synthetic.hpp"
#include "ptk/face/face_model.hpp"
#include "ptk/metrics/metrics.hpp"
#include "ptk/nn/layers.hpp"
#include "ptk/nn/ops.hpp"
#include "ptk/prior/codebook.hpp"
#include "ptk/prior/stage1.hpp"
#include "ptk/vae/vae.hpp"

using namespace ptk;
using nn::Index;
using nn::Matrix;
using nn::Mode;
using nn::Var;

namespace {

/// Collects failed expectations for one criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s << what << " (got " << got << ", want " << want << ")";
    expect(std::abs(got - want) <= tol, s.str());
  }
  void note(const std::string& text) { notes_.push_back(text); }

  bool passed() const { return failures_.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + f;
    if (!out.empty()) return out;
    for (const auto& n : notes_) out += (out.empty() ? "" : ", ") + n;
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Index brute_nearest(const Matrix& table, const Matrix& q) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < table.rows(); ++k) {
    double d = 0.0;
    for (Index j = 0; j < q.cols(); ++j) d += (table(k, j) - q(0, j)) * (table(k, j) - q(0, j));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

// AC1
void quantizer_oracle(Checker& c) {
  std::mt19937_64 rng(101);
  prior::Codebook cb(check::random_matrix(16, 128, rng));
  const Matrix z = check::random_matrix(1000, 128, rng);
  const auto t0 = std::chrono::steady_clock::now();
  const auto q = prior::quantize_nearest(cb, Var(z), 0.25);
  int agree = 0, bitwise = 0;
  for (Index i = 0; i < 1000; ++i) {
    const Index k = q.indices[static_cast<std::size_t>(i)];
    agree += k == brute_nearest(cb.embeddings().value(), z.row(i));
    bitwise += Matrix(q.z_q.value().row(i)) == Matrix(cb.embeddings().value().row(k));
  }
  const double secs = seconds_since(t0);
  c.expect(agree == 1000, "index agreement " + std::to_string(agree) + "/1000");
  c.expect(bitwise == 1000, "bitwise rows " + std::to_string(bitwise) + "/1000");
  c.expect(secs < 5.0, "runtime " + fmt(secs) + " s");
  c.note("1000/1000 indices, " + fmt(secs) + " s");
}

// AC2
void loss_algebra(Checker& c) {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    prior::Codebook cb(check::random_matrix(8, 4, rng));
    const double beta = 0.1 * trial;
    const Matrix z = check::random_matrix(6, 12, rng, 2.0);
    const auto q = prior::quantize_nearest(cb, Var(z, true), beta);
    double sq = 0.0;
    for (Index i = 0; i < z.rows(); ++i)
      for (Index j = 0; j < z.cols(); ++j) sq += std::pow(z(i, j) - q.z_q.value()(i, j), 2);
    worst = std::max(worst, std::abs(q.loss_qua.item() - (1.0 + beta) * sq / static_cast<double>(z.size())));
  }
  c.expect(worst <= 1e-10, "loss_qua deviates by " + fmt(worst));

  const Matrix x = check::random_matrix(5, data::kMotionDims, rng);
  const Matrix xh = check::random_matrix(5, data::kMotionDims, rng);
  const prior::Stage1Weights w1{1.5, 0.5, 0.1};
  const auto s1 = prior::stage1_loss(Var(x), Var(xh), Var(Matrix::Constant(1, 1, 0.37)), w1);
  c.near(s1.total.item(), w1.qua * s1.qua + w1.exp * s1.exp + w1.jaw * s1.jaw, 1e-12, "stage-1 total");
  const audio::Stage2Weights w2;
  const Matrix za = check::random_matrix(5, 8, rng), zm = check::random_matrix(5, 8, rng);
  const auto s2 = audio::stage2_loss(Var(zm), Var(za), Var(x), Var(xh), w2);
  c.near(s2.total.item(), w2.lat * s2.lat + w2.exp * s2.exp + w2.jaw * s2.jaw, 1e-12, "stage-2 total");
  const vae::VaeStage1Weights wv;
  const vae::GaussianLatent lat{Var(za), Var(zm)};
  const auto sv = vae::vae_stage1_loss(Var(x), Var(xh), lat, wv);
  c.near(sv.total.item(), wv.kl * sv.kl + wv.exp * sv.exp + wv.jaw * sv.jaw, 1e-12, "VAE stage-1 total");

  c.near(vae::kl_loss({Var(Matrix::Zero(4, 3)), Var(Matrix::Zero(4, 3))}).item(), 0.0, 1e-10, "KL(0, 0)");
  c.near(vae::kl_loss({Var(Matrix::Ones(4, 3)), Var(Matrix::Zero(4, 3))}).item(), 0.5, 1e-10, "KL(1, 0)");
  c.note("loss_qua err " + fmt(worst));
}

// AC3
void gradient_suite(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(303);
  double worst = 0.0;
  auto run = [&](const std::string& name, const std::function<Var()>& f, const nn::ParameterList& inputs) {
    const auto r = check::gradcheck(f, inputs);
    worst = std::max(worst, r.max_relative_error);
    c.expect(r.passed(), name + " rel err " + fmt(r.max_relative_error) + " at " + r.worst);
  };
  auto with = [](nn::ParameterList p, const std::string& name, const Var& v) {
    p.push_back({name, v});
    return p;
  };

  {
    nn::Linear lin(5, 4, rng);
    Var x(check::random_matrix(3, 5, rng), true);
    nn::ParameterList p;
    lin.collect("linear", p);
    run("linear", [&] { return check::random_projection(lin.forward(x)); }, with(p, "x", x));
  }
  {
    nn::Conv1d conv(3, 4, 5, rng);
    Var x(check::random_matrix(7, 3, rng), true);
    nn::ParameterList p;
    conv.collect("conv", p);
    run("conv1d", [&] { return check::random_projection(conv.forward(x)); }, with(p, "x", x));
  }
  {
    nn::LayerNorm ln(6);
    Var x(check::random_matrix(4, 6, rng), true);
    nn::ParameterList p;
    ln.collect("ln", p);
    run("layernorm", [&] { return check::random_projection(ln.forward(x)); }, with(p, "x", x));
  }
  {
    nn::MultiHeadAttention attn(8, 2, rng);
    Var x(check::random_matrix(5, 8, rng), true);
    nn::ParameterList p;
    attn.collect("attn", p);
    run("attention", [&] { return check::random_projection(attn.forward(x)); }, with(p, "x", x));
  }
  {
    nn::TransformerLayer layer({1, 8, 2, 16, 0.0}, rng);
    Var x(check::random_matrix(4, 8, rng), true);
    nn::ParameterList p;
    layer.collect("layer", p);
    run("transformer layer", [&] { return check::random_projection(layer.forward(x, Mode::eval())); },
        with(p, "x", x));
  }
  {
    vae::GaussianLatent l{Var(check::random_matrix(3, 4, rng), true), Var(check::random_matrix(3, 4, rng), true)};
    const Matrix eps = vae::standard_normal(3, 4, rng);
    run("reparameterize", [&] { return check::random_projection(vae::reparameterize(l, eps)); },
        {{"mu", l.mu}, {"log_var", l.log_var}});
  }

  prior::PriorConfig pc;
  pc.d_model = 8;
  pc.n_heads = 2;
  pc.d_ff = 16;
  pc.dropout = 0.0;
  pc.encoder_layers = 2;
  pc.decoder_layers = 2;
  pc.conv_kernel = 3;
  pc.codebook_size = 8;
  pc.code_dim = 4;
  prior::MotionPrior mp(pc, rng);
  {
    Var x(check::random_matrix(3, data::kMotionDims, rng), true);
    run("prior encoder", [&] { return check::random_projection(mp.encode(x, Mode::eval())); },
        with(mp.parameters(), "x", x));
    Var z(check::random_matrix(3, 8, rng), true);
    run("prior decoder", [&] { return check::random_projection(mp.decode(z, Mode::eval())); },
        with(mp.parameters(), "z", z));
  }
  {
    vae::VaeConfig vc;
    vc.d_model = 8;
    vc.n_heads = 2;
    vc.d_ff = 16;
    vc.dropout = 0.0;
    vc.encoder_layers = 2;
    vc.decoder_layers = 2;
    vc.conv_kernel = 3;
    vae::VaeMotionModel vm(vc, rng);
    Var x(check::random_matrix(3, data::kMotionDims, rng), true);
    run("VAE encoder",
        [&] {
          const auto l = vm.encode(x, Mode::eval());
          return nn::add(check::random_projection(l.mu, 1), check::random_projection(l.log_var, 2));
        },
        with(vm.parameters(), "x", x));
    Var z(check::random_matrix(3, 8, rng), true);
    run("VAE decoder", [&] { return check::random_projection(vm.decode(z, Mode::eval())); },
        with(vm.parameters(), "z", z));
  }
  {
    audio::Stage2Config sc;
    sc.n_heads = 2;
    sc.d_ff = 16;
    sc.dropout = 0.0;
    sc.n_layers = 2;
    sc.conv_kernel = 3;
    sc.n_subjects = 2;
    sc.features.logmel.n_mels = 6;
    audio::Stage2Model s2(sc, mp, rng);
    const Matrix feats = check::random_matrix(4, 6, rng);
    run("audio encoder", [&] { return check::random_projection(s2.encode(feats, {1, 3, 2}, Mode::eval())); },
        s2.trainable_parameters());
  }
  {
    // Straight-through: d(sum W .* z_q)/dz must be W exactly.
    prior::Codebook cb(check::random_matrix(6, 4, rng));
    Var z(check::random_matrix(3, 8, rng), true);
    const auto q = prior::quantize_nearest(cb, z, 0.25);
    const Matrix w = check::random_matrix(3, 8, rng);
    nn::backward(nn::sum(nn::mul(q.z_q, Var(w))));
    c.expect(z.grad() == w, "straight-through Jacobian is not the identity");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 120.0, "runtime " + fmt(secs) + " s");
  c.note("11 blocks, worst rel err " + fmt(worst) + ", straight-through exact, " + fmt(secs) + " s");
}

// AC4
void sampling_distribution(Checker& c) {
  std::mt19937_64 rng(404);
  prior::Codebook cb(check::random_matrix(4, 3, rng, 0.6));
  const Matrix q = check::random_matrix(1, 3, rng, 0.6);
  const double tau = 0.5;
  // closed form computed here, independent of the library
  std::vector<double> p(4);
  double total = 0.0;
  for (Index k = 0; k < 4; ++k) {
    const double d = (cb.embeddings().value().row(k) - q).squaredNorm();
    p[static_cast<std::size_t>(k)] = std::exp(-d / tau);
    total += p[static_cast<std::size_t>(k)];
  }
  for (auto& v : p) v /= total;
  std::vector<double> freq(4, 0.0);
  std::mt19937_64 srng(405);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    freq[static_cast<std::size_t>(prior::sample_quantize(cb, Var(q), tau, srng, 0.25).indices[0])] += 1.0 / n;
  }
  double tv = 0.0;
  for (std::size_t k = 0; k < 4; ++k) tv += 0.5 * std::abs(freq[k] - p[k]);
  c.expect(tv < 0.03, "total variation " + fmt(tv));

  const Matrix z = check::random_matrix(50, 6, rng);
  prior::Codebook cb2(check::random_matrix(4, 3, rng));
  std::mt19937_64 zrng(1);
  const auto greedy = prior::sample_quantize(cb2, Var(z), 0.0, zrng, 0.25);
  bool argmin = true;
  for (Index f = 0; f < 50; ++f)
    for (Index s = 0; s < 2; ++s)
      argmin &= greedy.indices[static_cast<std::size_t>(f * 2 + s)] ==
                brute_nearest(cb2.embeddings().value(), z.block(f, s * 3, 1, 3));
  c.expect(argmin, "tau = 0 differs from argmin");
  c.note("TV " + fmt(tv) + " over 10000 draws, tau=0 argmin exact");
}

// AC5
void overfit(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();
  data::SyntheticOptions o;
  o.seed = 505;
  o.n_subjects = 1;
  o.n_sentences = 2;
  o.emotions = {"neutral"};
  o.out_dir = check::fresh_dir("acc_overfit");
  const auto m = data::generate_synthetic_dataset(o);
  std::vector<Matrix> seqs;
  for (const auto& e : m.entries) seqs.push_back(data::read_motion(e.motion).frames);

  prior::PriorConfig pc;
  pc.d_model = 64;
  pc.n_heads = 4;
  pc.d_ff = 128;
  pc.dropout = 0.0;
  pc.encoder_layers = 2;
  pc.decoder_layers = 2;
  pc.codebook_size = 32;
  pc.code_dim = 32;
  prior::Stage1Options opt;
  opt.lr = 1e-4;
  opt.weight_decay = 0.0;
  opt.loop.max_epochs = 300;
  opt.loop.patience = 300;
  std::mt19937_64 rng(506);
  const auto r = prior::train_stage1(seqs, {}, pc, opt, rng);
  double abs_sum = 0.0, count = 0.0;
  for (const auto& x : seqs) {
    const Matrix xh = r.model.forward(Var(x), Mode::eval()).reconstruction.value();
    abs_sum += (xh - x).cwiseAbs().sum();
    count += static_cast<double>(x.size());
  }
  const double l1 = abs_sum / count;
  const double secs = seconds_since(t0);
  c.expect(l1 < 0.05, "reconstruction L1 " + fmt(l1));
  c.expect(secs < 600.0, "runtime " + fmt(secs) + " s");
  c.note("L1 " + fmt(l1) + " after " + std::to_string(r.log.epochs.size()) + " epochs, " + fmt(secs) + " s");
}

prior::PriorConfig smoke_prior() {
  prior::PriorConfig pc;
  pc.d_model = 16;
  pc.n_heads = 2;
  pc.d_ff = 32;
  pc.dropout = 0.0;
  pc.encoder_layers = 1;
  pc.decoder_layers = 1;
  pc.conv_kernel = 3;
  pc.codebook_size = 16;
  pc.code_dim = 8;
  return pc;
}

audio::Stage2Config smoke_stage2(int n_subjects, bool use_style) {
  audio::Stage2Config sc;
  sc.n_heads = 2;
  sc.d_ff = 32;
  sc.dropout = 0.0;
  sc.n_layers = 1;
  sc.conv_kernel = 3;
  sc.n_subjects = n_subjects;
  sc.use_style = use_style;
  sc.features.logmel.n_mels = 16;
  return sc;
}

// AC6
void end_to_end(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();
  data::SyntheticOptions o;
  o.seed = 606;
  o.n_subjects = 4;
  o.n_heldout_subjects = 1;
  o.n_sentences = 3;
  o.min_seconds = 0.5;
  o.max_seconds = 0.8;
  o.out_dir = check::fresh_dir("acc_e2e");
  const auto m = data::generate_synthetic_dataset(o);
  const auto face = face::make_toy_facemodel(606, 60);

  std::mt19937_64 rng(607);
  prior::Stage1Options o1;
  o1.lr = 2e-3;
  o1.loop.max_epochs = 20;
  const auto s1 = prior::train_stage1(data::split_dataset(m, 1), smoke_prior(), o1, rng);

  const auto m2 = data::split_dataset(m, 2);
  audio::Stage2Options o2;
  o2.lr = 1e-3;
  o2.loop.max_epochs = 20;
  const auto s2 = audio::train_stage2(m2, smoke_stage2(m2.n_style_subjects(), true), s1.model, o2, rng);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : s2.log.epochs) best = std::min(best, e.val_loss);
  const double first = s2.log.epochs.front().val_loss;
  c.expect(best < first, "(a) stage-2 val loss " + fmt(best) + " not below epoch 1 " + fmt(first));

  std::vector<std::vector<metrics::Track>> hot, cold;
  for (const auto* e : m2.with_split(data::Split::Test)) {
    const auto clip = data::read_wav(e->audio);
    for (double tau : {1.0, 0.0}) {
      const auto seqs = audio::generate(s2.model, clip, {m2.style_of(*e), 10, tau, 608});
      std::vector<metrics::Track> set;
      for (const auto& s : seqs) set.push_back(face.params_to_displacements(s.frames));
      (tau > 0 ? hot : cold).push_back(std::move(set));
    }
  }
  const double d_hot = metrics::diversity(hot, 609, 5).value;
  const double d_cold = metrics::diversity(cold, 609, 5).value;
  c.expect(d_hot > 0.0, "(b) diversity at tau=1 is " + fmt(d_hot));
  c.expect(d_cold == 0.0, "(b) diversity at tau=0 is " + fmt(d_cold));

  o2.loop.max_epochs = 3;
  const auto ablated = audio::train_stage2(m2, smoke_stage2(m2.n_style_subjects(), false), s1.model, o2, rng);
  const auto clip = data::read_wav(m2.with_split(data::Split::Test).front()->audio);
  const auto a = audio::generate(ablated.model, clip, {{0, 0, 0}, 3, 1.0, 610});
  const auto b = audio::generate(ablated.model, clip, {{3, 5, 2}, 3, 1.0, 610});
  bool invariant = true;
  for (std::size_t i = 0; i < a.size(); ++i) invariant &= a[i].frames == b[i].frames;
  c.expect(invariant, "(c) ablated output depends on style");

  const double secs = seconds_since(t0);
  c.expect(secs < 1800.0, "runtime " + fmt(secs) + " s");
  c.note("val " + fmt(first) + " -> " + fmt(best) + ", diversity tau=1 " + fmt(d_hot) + " tau=0 " + fmt(d_cold) +
         ", ablation invariant, " + std::to_string(m.entries.size()) + " clips, " + fmt(secs) + " s");
}

// AC7
void metric_oracles(Checker& c) {
  const double tol = 1e-12;
  {
    const Index n = 12;
    c.near(metrics::mve(Matrix::Zero(5, 3 * n), Matrix::Constant(5, 3 * n, 0.004)), 0.004 * std::sqrt(3.0 * n), tol,
           "MVE uniform offset");
  }
  Matrix gt = Matrix::Zero(4, 3 * 6);
  {
    Matrix pred = gt;
    pred.col(3 * 2 + 1).setConstant(0.002);  // lip vertex 2, 2 mm along y
    pred.col(3 * 4 + 0).setConstant(0.5);    // not a lip vertex
    c.near(metrics::lve(gt, pred, {1, 2}), 0.002, tol, "LVE 2 mm lip offset");
  }
  {
    // vertex 3 alternates between norms 0.01 and 0.03 in the ground truth and stays still in the prediction
    Matrix moving = gt;
    for (Index f = 0; f < 4; ++f) moving(f, 3 * 3 + 2) = f % 2 == 0 ? 0.01 : 0.03;
    c.near(metrics::fdd(moving, gt, {3}), 0.01, tol, "FDD alternating vertex");
    c.near(metrics::fdd(moving, gt, {0, 3}), 0.005, tol, "FDD two-vertex mask");
  }
  {
    Matrix up = gt, down = gt, far = gt;
    up.col(0).setConstant(0.1);
    down.col(0).setConstant(-0.1);
    far.col(0).setConstant(0.4);
    c.near(metrics::mee(gt, {up, down}, {0}), 0.0, tol, "MEE symmetric samples");
    c.near(metrics::mee(gt, {up, far}, {0}), 0.25, tol, "MEE mean of two");
    c.near(metrics::ce(gt, {far, up, far}, {0}), 0.1, tol, "CE closest sample");
  }
  {
    const Matrix s0 = Matrix::Zero(2, 6), s1 = Matrix::Constant(2, 6, 0.5);
    c.near(metrics::diversity({{s0, s1}, {s1, s1}}, {{0, 1}, {1, 0}}, 1), 0.5 * 0.5 * std::sqrt(12.0), tol,
           "Diversity pair distance");
  }
  {
    const auto face = face::make_toy_facemodel(707, 30);
    std::mt19937_64 rng(707);
    std::vector<metrics::Track> gts{face.params_to_displacements(check::random_matrix(6, data::kMotionDims, rng, 0.2)),
                                    face.params_to_displacements(check::random_matrix(8, data::kMotionDims, rng, 0.2))};
    const auto self = metrics::evaluate_tracks({"a", "b"}, gts, {{gts[0]}, {gts[1]}}, face, {1, 5, 0});
    c.expect(self.mve == 0.0 && self.lve == 0.0 && self.fdd == 0.0 && self.mee == 0.0 && self.ce == 0.0,
             "gt-vs-gt distances are not all zero");
    const auto j = self.to_json();
    c.expect(j.at("raw").at("diversity") == "N/A" && j.at("scaled").at("diversity") == "N/A",
             "single-sample report does not mark diversity N/A");
    const auto multi = metrics::evaluate_tracks({"a", "b"}, gts, {{gts[0], gts[0]}, {gts[1], gts[1]}}, face, {2, 1, 0});
    c.expect(multi.diversity.has_value() && *multi.diversity == 0.0, "identical samples give non-zero diversity");
  }
  c.note("MVE, LVE, FDD, MEE, CE, Diversity within 1e-12; gt-vs-gt zero; N/A for one sample");
}

// AC8
void reproducibility(Checker& c) {
  data::SyntheticOptions o;
  o.seed = 808;
  o.n_subjects = 2;
  o.n_heldout_subjects = 1;
  o.n_sentences = 3;
  o.emotions = {"neutral", "angry"};
  o.min_seconds = 0.5;
  o.max_seconds = 0.8;
  o.out_dir = check::fresh_dir("acc_repro");
  const auto m = data::generate_synthetic_dataset(o);
  const auto m1 = data::split_dataset(m, 1);
  const auto m2 = data::split_dataset(m, 2);
  const auto clip = data::read_wav(m2.with_split(data::Split::Test).front()->audio);

  struct Run {
    nn::EpochRecord prior_epoch, stage2_epoch, vae1_epoch, vae2_epoch;
    std::vector<data::MotionSequence> gen, gen_vae;
  };
  auto once = [&] {
    Run r;
    std::mt19937_64 rng(809);
    prior::Stage1Options o1;
    o1.lr = 2e-3;
    o1.loop.max_epochs = 1;
    auto s1 = prior::train_stage1(m1, smoke_prior(), o1, rng);
    audio::Stage2Options o2;
    o2.lr = 1e-3;
    o2.loop.max_epochs = 1;
    auto s2 = audio::train_stage2(m2, smoke_stage2(m2.n_style_subjects(), true), s1.model, o2, rng);
    vae::VaeConfig vc;
    vc.d_model = 16;
    vc.n_heads = 2;
    vc.d_ff = 32;
    vc.dropout = 0.1;  // exercises the dropout stream too
    vc.encoder_layers = 1;
    vc.decoder_layers = 1;
    vc.conv_kernel = 3;
    vae::VaeStage1Options ov;
    ov.lr = 2e-3;
    ov.loop.max_epochs = 1;
    auto v1 = vae::train_vae_stage1(m1, vc, ov, rng);
    auto v2 = vae::train_vae_stage2(m2, smoke_stage2(m2.n_style_subjects(), true), v1.model, o2, rng);
    r.prior_epoch = s1.log.epochs.front();
    r.stage2_epoch = s2.log.epochs.front();
    r.vae1_epoch = v1.log.epochs.front();
    r.vae2_epoch = v2.log.epochs.front();
    r.gen = audio::generate(s2.model, clip, {{1, 6, 2}, 3, 1.0, 810});
    r.gen_vae = vae::generate(v2.model, clip, {{1, 6, 2}, 3, 1.0, 810});
    return r;
  };
  const Run a = once(), b = once();
  auto same_epoch = [&](const nn::EpochRecord& x, const nn::EpochRecord& y, const std::string& name) {
    c.expect(x.train_loss == y.train_loss && x.val_loss == y.val_loss, name + " epoch-1 losses differ");
  };
  same_epoch(a.prior_epoch, b.prior_epoch, "prior");
  same_epoch(a.stage2_epoch, b.stage2_epoch, "stage-2");
  same_epoch(a.vae1_epoch, b.vae1_epoch, "VAE stage-1");
  same_epoch(a.vae2_epoch, b.vae2_epoch, "VAE stage-2");
  bool gen_same = a.gen.size() == b.gen.size() && a.gen_vae.size() == b.gen_vae.size();
  for (std::size_t i = 0; gen_same && i < a.gen.size(); ++i) gen_same &= a.gen[i].frames == b.gen[i].frames;
  for (std::size_t i = 0; gen_same && i < a.gen_vae.size(); ++i) gen_same &= a.gen_vae[i].frames == b.gen_vae[i].frames;
  c.expect(gen_same, "generations differ between runs");
  c.note("4 training stages and 6 generations identical across two runs");
}

// AC9
void split_counts(Checker& c) {
  data::DatasetManifest m;
  for (int s = 0; s < 32; ++s) {
    char name[8];
    std::snprintf(name, sizeof name, "S%02d", s);
    m.subjects.push_back({name, data::SubjectRole::Train});
    auto add = [&](const std::string& emotion, const std::string& intensity, int sentence) {
      data::ManifestEntry e;
      e.subject = name;
      e.emotion = emotion;
      e.intensity = intensity;
      e.sentence = sentence;
      e.id = std::string(name) + "_" + emotion + "_" + intensity + "_" + std::to_string(sentence);
      e.motion = "motion/" + e.id + ".ptm";
      e.audio = "audio/" + e.id + ".wav";
      m.entries.push_back(std::move(e));
    };
    for (int k = 0; k < 40; ++k) add("neutral", "none", k);
    for (std::size_t emo = 1; emo < data::kEmotions.size(); ++emo)
      for (const auto level : data::kIntensities)
        for (int k = 0; k < 30; ++k) add(std::string(data::kEmotions[emo]), std::string(level), k);
  }
  const auto split = data::split_dataset(m, 2);
  std::map<std::tuple<std::string, std::string, std::string>, std::array<int, 3>> counts;
  for (const auto& e : split.entries) {
    auto& slot = counts[{e.subject, e.emotion, e.intensity}];
    if (e.split == data::Split::Train) ++slot[0];
    if (e.split == data::Split::Val) ++slot[1];
    if (e.split == data::Split::Test) ++slot[2];
  }
  int bad = 0;
  for (const auto& [key, n] : counts) {
    const bool neutral = std::get<1>(key) == "neutral";
    const std::array<int, 3> want = neutral ? std::array<int, 3>{32, 4, 4} : std::array<int, 3>{24, 3, 3};
    bad += n != want;
  }
  c.expect(counts.size() == 32u * (1 + 7 * 3), "unexpected group count " + std::to_string(counts.size()));
  c.expect(bad == 0, std::to_string(bad) + " subject/emotion/intensity groups off");
  c.note(std::to_string(split.entries.size()) + " entries, 32/4/4 neutral and 24/3/3 per emotion-intensity");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Checker&)>>> criteria = {
      {"AC1 quantizer oracle", quantizer_oracle},
      {"AC2 loss algebra", loss_algebra},
      {"AC3 gradient suite", gradient_suite},
      {"AC4 sampling distribution", sampling_distribution},
      {"AC5 overfit check", overfit},
      {"AC6 end-to-end smoke", end_to_end},
      {"AC7 metric oracles", metric_oracles},
      {"AC8 reproducibility", reproducibility},
      {"AC9 split correctness", split_counts},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Checker c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += !c.passed();
    std::printf("%s %s: %s\n", c.passed() ? "PASS" : "FAIL", name.c_str(), c.summary().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
