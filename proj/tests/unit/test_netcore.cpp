#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gradcheck.hpp"
#include "tmpdir.hpp"
#include "ptk/common/error.hpp"
#include "ptk/nn/checkpoint.hpp"
#include "ptk/nn/layers.hpp"
#include "ptk/nn/ops.hpp"
#include "ptk/nn/optim.hpp"
#include "ptk/nn/training.hpp"

using namespace ptk;
using namespace ptk::nn;

namespace {

StopDecision stop_on(std::vector<double> h, int patience = 5) { return early_stop(h, patience); }

}  // namespace

TEST(Optim, ZeroGradientLeavesParamsUnchanged) {
  Var w(Matrix::Constant(2, 3, 0.7), true);
  Adam opt({w}, AdamOptions{0.1});
  w.zero_grad();
  nn::backward(nn::sum(nn::scale(w, 0.0)));
  opt.step();
  EXPECT_EQ(w.value(), Matrix::Constant(2, 3, 0.7));
}

TEST(Optim, SquareDescends) {
  Var w(Matrix::Constant(1, 1, 1.0), true);
  Adam opt({w}, AdamOptions{0.1});
  opt.zero_grad();
  nn::backward(nn::sum(nn::mul(w, w)));
  opt.step();
  EXPECT_LT(w.value()(0, 0), 1.0);
}

TEST(Optim, QuadraticConverges) {
  Var w(Matrix::Zero(1, 2), true);
  Matrix target(1, 2);
  target << 1.0, -0.5;
  Adam opt({w}, AdamOptions{0.05});
  double loss = 0.0;
  for (int i = 0; i < 200; ++i) {
    opt.zero_grad();
    Var d = nn::sub(w, Var(target));
    Var l = nn::sum(nn::mul(d, d));
    loss = l.item();
    nn::backward(l);
    opt.step();
  }
  const Matrix d = w.value() - target;
  EXPECT_LT(d.squaredNorm(), 1e-6) << loss;
}

TEST(Optim, AdamWDecaysWeightsDirectly) {
  Var w(Matrix::Constant(1, 1, 2.0), true);
  Adam opt = make_adamw({w}, 0.1, 0.5);
  opt.zero_grad();
  nn::backward(nn::sum(nn::scale(w, 0.0)));
  opt.step();
  EXPECT_NEAR(w.value()(0, 0), 2.0 * (1.0 - 0.1 * 0.5), 1e-15);
}

TEST(Optim, NonFiniteGradientRefused) {
  Var w(Matrix::Constant(1, 2, 1.0), true);
  Adam opt({w}, AdamOptions{0.1});
  opt.zero_grad();
  Matrix bad = Matrix::Ones(1, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  nn::backward(nn::sum(nn::mul(w, Var(bad))));
  EXPECT_THROW(opt.step(), DivergenceError);
  EXPECT_EQ(w.value(), Matrix::Constant(1, 2, 1.0));
}

TEST(EarlyStop, Examples) {
  EXPECT_EQ(stop_on({1.0, 0.9, 0.8}), StopDecision::Continue);
  EXPECT_EQ(stop_on({0.5, 0.6, 0.6, 0.6, 0.6, 0.6}), StopDecision::Stop);
  EXPECT_EQ(stop_on({0.5, 0.6, 0.6, 0.6, 0.6}), StopDecision::Continue);
  // ties are not improvements
  EXPECT_EQ(stop_on({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}), StopDecision::Stop);
  EXPECT_THROW(stop_on({}), ValueError);
}

TEST(EarlyStop, DecreasingHistoryNeverStops) {
  std::vector<double> h;
  for (int i = 0; i < 100; ++i) {
    h.push_back(100.0 - i);
    ASSERT_EQ(early_stop(h, 5), StopDecision::Continue) << i;
  }
}

TEST(Transformer, ZeroResidualBranchesGiveIdentity) {
  std::mt19937_64 rng(5);
  TransformerStack stack({2, 8, 2, 16, 0.0}, rng);
  for (auto& layer : stack.layers()) {
    layer.attention().output().weight().mutable_value().setZero();
    layer.attention().output().bias().mutable_value().setZero();
    layer.ff_out().weight().mutable_value().setZero();
    layer.ff_out().bias().mutable_value().setZero();
  }
  Matrix x = check::random_matrix(5, 8, rng);
  EXPECT_EQ(stack.forward(Var(x), Mode::eval()).value(), x);
}

TEST(Transformer, SingleFrameAndEvalDeterminism) {
  std::mt19937_64 rng(6);
  TransformerStack stack({2, 8, 2, 16, 0.1}, rng);
  Matrix x = check::random_matrix(1, 8, rng);
  Matrix a = stack.forward(Var(x), Mode::eval()).value();
  Matrix b = stack.forward(Var(x), Mode::eval()).value();
  EXPECT_EQ(a.rows(), 1);
  EXPECT_TRUE(a.allFinite());
  EXPECT_EQ(a, b);
}

TEST(Transformer, InputGradientOnTwoLayerStack) {
  std::mt19937_64 rng(7);
  TransformerStack stack({2, 8, 2, 16, 0.0}, rng);
  Var x(check::random_matrix(4, 8, rng), true);
  auto r = check::gradcheck([&] { return nn::sum(stack.forward(x, Mode::eval())); }, {{"x", x}}, 32);
  EXPECT_TRUE(r.passed()) << r.max_relative_error;
}

TEST(Transformer, ConfigValidation) {
  EXPECT_THROW((TransformerStackConfig{1, 10, 3, 16, 0.0}.validate()), ConfigError);
  EXPECT_THROW((TransformerStackConfig{1, 8, 2, 16, 1.0}.validate()), ConfigError);
}

TEST(Conv, ConstantInputGivesConstantInterior) {
  std::mt19937_64 rng(8);
  Conv1d conv(3, 4, 3, rng);
  Matrix x = Matrix::Constant(7, 3, 0.25);
  Matrix y = conv.forward(Var(x)).value();
  ASSERT_EQ(y.rows(), 7);
  // zero padding only touches the first and last kernel/2 frames
  for (Index t = 2; t < 6; ++t) EXPECT_LT((y.row(t) - y.row(1)).norm(), 1e-14);
}

TEST(Conv, DeltaKernelIsChannelMix) {
  std::mt19937_64 rng(9);
  Conv1d conv(3, 2, 5, rng);
  Matrix mix = check::random_matrix(3, 2, rng);
  conv.weight().mutable_value().setZero();
  conv.weight().mutable_value().middleRows(2 * 3, 3) = mix;  // centre tap
  conv.bias().mutable_value().setZero();
  Matrix x = check::random_matrix(6, 3, rng);
  EXPECT_LT((conv.forward(Var(x)).value() - x * mix).norm(), 1e-14);
}

TEST(Checkpoint, RoundTripAndRestore) {
  const auto dir = check::fresh_dir("ckpt");
  std::mt19937_64 rng(10);
  Linear a(3, 4, rng), b(3, 4, rng);
  ParameterList pa, pb;
  a.collect("lin", pa);
  b.collect("lin", pb);
  for (auto& p : pa) {
    Var v = p.var;
    v.mutable_value() = v.value().unaryExpr([](double x) { return static_cast<double>(static_cast<float>(x)); });
  }
  Checkpoint::from_parameters(pa, {{"seed", 10}}).save(dir / "a.ckpt");
  auto loaded = Checkpoint::load(dir / "a.ckpt");
  EXPECT_EQ(loaded.metadata.at("seed"), 10);
  loaded.restore(pb);
  EXPECT_EQ(parameter_hash(pa), parameter_hash(pb));

  Linear c(3, 5, rng);
  ParameterList pc;
  c.collect("lin", pc);
  EXPECT_THROW(loaded.restore(pc), FormatError);
}

TEST(TrainingLoop, StopsWithinPatienceAndRestoresBest) {
  // Validation loss grows once the weight passes the validation target, so early stopping must trigger.
  Var w(Matrix::Zero(1, 1), true);
  Adam opt({w}, AdamOptions{0.2});
  LoopHooks hooks;
  hooks.n_train = 1;
  hooks.n_val = 1;
  hooks.train_loss = [&](std::size_t, const Mode&) {
    Var d = nn::sub(w, Var(Matrix::Constant(1, 1, 3.0)));
    return LossValue{nn::sum(nn::mul(d, d)), {}};
  };
  hooks.val_loss = [&](std::size_t) {
    Var d = nn::sub(w, Var(Matrix::Constant(1, 1, 1.0)));
    return LossValue{nn::sum(nn::mul(d, d)), {}};
  };
  std::mt19937_64 rng(0);
  const auto log = run_training(opt, {{"w", w}}, hooks, {100, 5, 1}, rng);
  ASSERT_TRUE(log.early_stopped);
  EXPECT_LE(static_cast<int>(log.epochs.size()), log.best_epoch + 5 + 1);
  const double best = log.epochs[static_cast<std::size_t>(log.best_epoch - 1)].val_loss;
  EXPECT_EQ(best, log.best_val_loss);
  const double restored = (w.value()(0, 0) - 1.0) * (w.value()(0, 0) - 1.0);
  EXPECT_NEAR(restored, best, 1e-15);
}

TEST(TrainingLoop, NonFiniteLossIsDivergence) {
  Var w(Matrix::Zero(1, 1), true);
  Adam opt({w}, AdamOptions{0.1});
  LoopHooks hooks;
  hooks.n_train = 1;
  hooks.train_loss = [&](std::size_t, const Mode&) {
    return LossValue{nn::sum(nn::scale(w, std::numeric_limits<double>::quiet_NaN())), {}};
  };
  std::mt19937_64 rng(0);
  EXPECT_THROW(run_training(opt, {{"w", w}}, hooks, {3, 5, 1}, rng), DivergenceError);
}
