#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gradcheck.hpp"
#include "tmpdir.hpp"
#include "ptk/common/error.hpp"
#include "ptk/data/motion.hpp"
#include "ptk/data/synthetic.hpp"
#include "ptk/nn/checkpoint.hpp"
#include "ptk/nn/ops.hpp"
#include "ptk/vae/vae.hpp"

using namespace ptk;
using namespace ptk::vae;
using nn::Mode;

namespace {

VaeConfig tiny_vae() {
  VaeConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 16;
  c.dropout = 0.0;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.conv_kernel = 3;
  return c;
}

GaussianLatent latent(const Matrix& mu, const Matrix& lv) { return {Var(mu, true), Var(lv, true)}; }

// Closed-form KL(N(mu, e^lv) || N(0, 1)) per element.
double kl_element(double mu, double lv) { return 0.5 * (std::exp(lv) + mu * mu - 1.0 - lv); }

}  // namespace

TEST(Kl, ClosedFormValues) {
  EXPECT_EQ(kl_loss(latent(Matrix::Zero(3, 4), Matrix::Zero(3, 4))).item(), 0.0);
  EXPECT_NEAR(kl_loss(latent(Matrix::Ones(3, 4), Matrix::Zero(3, 4))).item(), 0.5, 1e-15);
  Matrix mu(1, 2), lv(1, 2);
  mu << 0.3, -2.0;
  lv << std::log(4.0), -1.0;
  EXPECT_NEAR(kl_loss(latent(mu, lv)).item(), 0.5 * (kl_element(0.3, std::log(4.0)) + kl_element(-2.0, -1.0)), 1e-14);
}

TEST(Kl, NonNegativeAndDifferentiable) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    EXPECT_GE(kl_loss(latent(check::random_matrix(2, 3, rng, 3.0), check::random_matrix(2, 3, rng, 3.0))).item(), 0.0);
  }
  auto l = latent(check::random_matrix(2, 3, rng), check::random_matrix(2, 3, rng));
  auto r = check::gradcheck([&] { return kl_loss(l); }, {{"mu", l.mu}, {"log_var", l.log_var}});
  EXPECT_TRUE(r.passed()) << r.worst << " " << r.max_relative_error;
}

TEST(Reparameterize, ExplicitNoise) {
  Matrix mu(1, 3), lv(1, 3), eps(1, 3);
  mu << 1.0, -1.0, 0.0;
  lv << 0.0, std::log(4.0), std::log(0.25);
  eps << 0.5, 1.0, -2.0;
  const Matrix z = reparameterize(latent(mu, lv), eps).value();
  EXPECT_NEAR(z(0, 0), 1.5, 1e-15);
  EXPECT_NEAR(z(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(z(0, 2), -1.0, 1e-15);
  EXPECT_EQ(reparameterize(latent(mu, lv), eps, 0.0).value(), mu);
  EXPECT_NEAR(reparameterize(latent(mu, lv), eps, 0.5).value()(0, 1), 0.0, 1e-15);
}

TEST(Reparameterize, MonteCarloMoments) {
  Matrix mu(1, 2), lv(1, 2);
  mu << 0.7, -1.5;
  lv << std::log(0.09), std::log(2.25);
  std::mt19937_64 rng(2);
  const int n = 20000;
  Eigen::RowVector2d sum = Eigen::RowVector2d::Zero(), sq = Eigen::RowVector2d::Zero();
  const auto l = latent(mu, lv);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVector2d z = reparameterize(l, rng).value();
    sum += z;
    sq += z.cwiseProduct(z);
  }
  const Eigen::RowVector2d mean = sum / n;
  const Eigen::RowVector2d var = sq / n - mean.cwiseProduct(mean);
  // 5 standard errors
  EXPECT_NEAR(mean(0), 0.7, 5 * 0.3 / std::sqrt(n));
  EXPECT_NEAR(mean(1), -1.5, 5 * 1.5 / std::sqrt(n));
  EXPECT_NEAR(var(0), 0.09, 5 * 0.09 * std::sqrt(2.0 / n));
  EXPECT_NEAR(var(1), 2.25, 5 * 2.25 * std::sqrt(2.0 / n));
}

TEST(Reparameterize, GradientsThroughMeanAndLogVar) {
  std::mt19937_64 rng(3);
  auto l = latent(check::random_matrix(3, 4, rng), check::random_matrix(3, 4, rng));
  const Matrix eps = standard_normal(3, 4, rng);
  auto r = check::gradcheck([&] { return check::random_projection(reparameterize(l, eps)); },
                            {{"mu", l.mu}, {"log_var", l.log_var}});
  EXPECT_TRUE(r.passed()) << r.worst << " " << r.max_relative_error;
  // d z / d mu = 1, d z / d log_var = eps * exp(lv / 2) / 2
  nn::backward(nn::sum(reparameterize(l, eps)));
  EXPECT_LT((l.mu.grad() - Matrix::Ones(3, 4)).cwiseAbs().maxCoeff(), 1e-15);
  const Matrix expected = 0.5 * eps.cwiseProduct(Matrix((0.5 * l.log_var.value().array()).exp()));
  EXPECT_LT((l.log_var.grad() - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(StandardNormal, SeededAndRoughlyStandard) {
  std::mt19937_64 a(4), b(4);
  const Matrix x = standard_normal(100, 50, a);
  EXPECT_EQ(x, standard_normal(100, 50, b));
  EXPECT_NEAR(x.mean(), 0.0, 0.03);
  EXPECT_NEAR((x.array() - x.mean()).square().mean(), 1.0, 0.05);
}

TEST(GaussianHead, LogVarIsClamped) {
  std::mt19937_64 rng(5);
  GaussianHead head(4, rng);
  const auto out = head.forward(Var(Matrix::Constant(2, 4, 1e6)));
  EXPECT_LE(out.log_var.value().maxCoeff(), kLogVarMax);
  EXPECT_GE(out.log_var.value().minCoeff(), kLogVarMin);
  EXPECT_TRUE(out.log_var.value().allFinite());
  EXPECT_THROW((GaussianLatent{Var(Matrix::Zero(2, 3)), Var(Matrix::Zero(3, 3))}.validate()), ShapeError);
}

TEST(VaeLoss, Stage1Algebra) {
  std::mt19937_64 rng(6);
  const Matrix x = check::random_matrix(5, data::kMotionDims, rng);
  const VaeStage1Weights w;
  EXPECT_EQ(w.kl, 1e-4);
  auto zero = vae_stage1_loss(Var(x), Var(x), latent(Matrix::Zero(5, 8), Matrix::Zero(5, 8)), w);
  EXPECT_EQ(zero.total.item(), 0.0);
  auto off = vae_stage1_loss(Var(x), Var(Matrix(x.array() + 1.0)), latent(Matrix::Ones(5, 8), Matrix::Zero(5, 8)), w);
  EXPECT_NEAR(off.total.item(), 0.5 * w.kl + w.exp + w.jaw, 1e-12);
  EXPECT_NEAR(off.kl, 0.5, 1e-15);
  EXPECT_THROW(vae_stage1_loss(Var(x), Var(x), latent(Matrix::Zero(1, 1), Matrix::Zero(1, 1)), {1.0, -1.0, 1.0}),
               ValueError);

  const audio::Stage2Weights w2;
  const Matrix mu = check::random_matrix(5, 8, rng);
  auto s2 = vae_stage2_loss(Var(mu), Var(Matrix(mu.array() - 0.5)), Var(x), Var(x), w2);
  EXPECT_NEAR(s2.total.item(), 0.5 * w2.lat, 1e-12);
}

TEST(VaeModel, ShapesAndModes) {
  std::mt19937_64 rng(7);
  VaeMotionModel m(tiny_vae(), rng);
  const Matrix x = check::random_matrix(6, data::kMotionDims, rng);
  const auto eval = m.forward(Var(x), Mode::eval());
  EXPECT_EQ(eval.z.value(), eval.latent.mu.value());
  EXPECT_EQ(eval.reconstruction.cols(), data::kMotionDims);
  std::mt19937_64 noise(8);
  const auto train = m.forward(Var(x), Mode::train(noise));
  EXPECT_NE(train.z.value(), train.latent.mu.value());
  for (const auto& p : m.parameters()) {
    const bool ok = p.name.rfind("encoder.", 0) == 0 || p.name.rfind("latent.", 0) == 0 ||
                    p.name.rfind("decoder.", 0) == 0;
    EXPECT_TRUE(ok) << p.name;
  }
}

TEST(VaeModel, EncoderDecoderGradients) {
  std::mt19937_64 rng(9);
  VaeMotionModel m(tiny_vae(), rng);
  const Var x(check::random_matrix(3, data::kMotionDims, rng));
  auto r = check::gradcheck(
      [&] {
        auto l = m.encode(x, Mode::eval());
        return nn::add(check::random_projection(l.mu, 1), check::random_projection(l.log_var, 2));
      },
      m.parameters());
  EXPECT_TRUE(r.passed()) << r.worst << " " << r.max_relative_error;
}

class VaePipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data::SyntheticOptions o;
    o.seed = 41;
    o.n_subjects = 2;
    o.n_sentences = 1;
    o.emotions = {"neutral", "sad"};
    o.out_dir = check::fresh_dir("vae_data");
    const auto m = data::generate_synthetic_dataset(o);
    audio::LogMelOptions lo;
    lo.n_mels = 12;
    const audio::LogMelExtractor ex(lo);
    for (const auto& e : m.entries) {
      audio::Stage2Item it;
      it.id = e.id;
      it.motion = data::read_motion(e.motion).frames;
      it.features = audio::align_to_motion_rate(ex.extract(data::read_wav(e.audio)), it.motion.rows());
      it.style = m.style_of(e);
      (train_.size() + val_.size()) % 4 == 3 ? val_.push_back(it) : train_.push_back(it);
    }
  }

  static audio::Stage2Config stage2_config() {
    audio::Stage2Config c;
    c.n_heads = 2;
    c.d_ff = 16;
    c.dropout = 0.0;
    c.n_layers = 1;
    c.conv_kernel = 3;
    c.n_subjects = 2;
    c.features.logmel.n_mels = 12;
    return c;
  }

  static std::vector<Matrix> motions(const std::vector<audio::Stage2Item>& items) {
    std::vector<Matrix> out;
    for (const auto& it : items) out.push_back(it.motion);
    return out;
  }

  static inline std::vector<audio::Stage2Item> train_, val_;
};

TEST_F(VaePipeline, BothStagesAndGeneration) {
  VaeStage1Options o1;
  o1.lr = 2e-3;
  o1.loop.max_epochs = 6;
  std::mt19937_64 rng(10);
  auto s1 = train_vae_stage1(motions(train_), motions(val_), tiny_vae(), o1, rng);
  EXPECT_LE(s1.log.best_val_loss, s1.log.epochs.front().val_loss);

  const auto dir = check::fresh_dir("vae_ckpt");
  save_vae_prior(s1.model, dir / "vae1.ckpt");
  auto prior = load_vae_prior(dir / "vae1.ckpt");
  save_vae_prior(prior, dir / "again.ckpt");
  EXPECT_EQ(nn::parameter_hash(load_vae_prior(dir / "again.ckpt").parameters()), nn::parameter_hash(prior.parameters()));
  EXPECT_THROW(load_vae_stage2(dir / "vae1.ckpt"), FormatError);

  audio::Stage2Options o2;
  o2.lr = 1e-3;
  o2.loop.max_epochs = 3;
  const auto before = nn::parameter_hash(prior.parameters());
  auto s2 = train_vae_stage2(train_, val_, stage2_config(), prior, o2, rng);
  EXPECT_EQ(s2.prior_hash, before);
  EXPECT_EQ(nn::parameter_hash(s2.model.prior().parameters()), before);

  save_vae_stage2(s2.model, dir / "vae2.ckpt");
  const auto model = load_vae_stage2(dir / "vae2.ckpt");
  data::AudioClip clip;
  clip.samples.resize(16000);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = 0.3 * std::sin(0.05 * static_cast<double>(i));
  audio::GenerateRequest req{{0, 3, 1}, 3, 1.0, 5};
  const auto a = generate(model, clip, req);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].frames.rows(), 25);
  EXPECT_NE(a[0].frames, a[1].frames);
  const auto b = generate(model, clip, req);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].frames, b[i].frames);
  req.tau = 0.0;
  const auto mean = generate(model, clip, req);
  EXPECT_EQ(mean[0].frames, mean[2].frames);
}
