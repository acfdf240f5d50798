#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "tmpdir.hpp"
#include "ptk/common/error.hpp"
#include "ptk/data/motion.hpp"
#include "ptk/metrics/metrics.hpp"

using namespace ptk;
using namespace ptk::metrics;

namespace {

// Scalar-loop oracles, written without Eigen reductions.
double vertex_dist(const Track& a, const Track& b, Index f, Index v) {
  double s = 0.0;
  for (Index c = 0; c < 3; ++c) s += (a(f, 3 * v + c) - b(f, 3 * v + c)) * (a(f, 3 * v + c) - b(f, 3 * v + c));
  return std::sqrt(s);
}

double vertex_norm(const Track& a, Index f, Index v) {
  double s = 0.0;
  for (Index c = 0; c < 3; ++c) s += a(f, 3 * v + c) * a(f, 3 * v + c);
  return std::sqrt(s);
}

double lve_oracle(const Track& gt, const Track& pred, const Mask& lips) {
  double total = 0.0;
  for (Index f = 0; f < gt.rows(); ++f) {
    double worst = 0.0;
    for (Index v : lips) worst = std::max(worst, vertex_dist(gt, pred, f, v));
    total += worst;
  }
  return total / static_cast<double>(gt.rows());
}

double dyn_oracle(const Track& t, Index v) {
  const auto n = static_cast<double>(t.rows());
  double mean = 0.0;
  for (Index f = 0; f < t.rows(); ++f) mean += vertex_norm(t, f, v) / n;
  double var = 0.0;
  for (Index f = 0; f < t.rows(); ++f) var += (vertex_norm(t, f, v) - mean) * (vertex_norm(t, f, v) - mean) / n;
  return std::sqrt(var);
}

double frob(const Track& a, const Track& b) {
  double s = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  return std::sqrt(s);
}

}  // namespace

TEST(Mve, UniformOffset) {
  const Index n = 10;
  const Track gt = Track::Zero(4, 3 * n);
  const Track pred = Track::Constant(4, 3 * n, 0.01);
  EXPECT_NEAR(mve(gt, pred), 0.01 * std::sqrt(3.0 * n), 1e-15);
  EXPECT_EQ(mve(gt, gt), 0.0);
  EXPECT_THROW(mve(gt, Track::Zero(3, 3 * n)), ShapeError);
}

TEST(Mve, RandomAgainstLoop) {
  std::mt19937_64 rng(1);
  const Track a = check::random_matrix(7, 30, rng), b = check::random_matrix(7, 30, rng);
  double oracle = 0.0;
  for (Index f = 0; f < 7; ++f) oracle += frob(a.row(f), b.row(f)) / 7.0;
  EXPECT_NEAR(mve(a, b), oracle, 1e-14);
}

TEST(Lve, TwoMillimetreLipError) {
  const Mask lips{2, 5};
  Track gt = Track::Zero(3, 3 * 8);
  Track pred = gt;
  for (Index f = 0; f < 3; ++f) {
    pred(f, 3 * 5 + 0) = 0.002;  // lip vertex moved 2 mm along x
    pred(f, 3 * 7 + 1) = 0.5;    // non-lip vertex ignored
  }
  EXPECT_NEAR(lve(gt, pred, lips), 0.002, 1e-15);
  EXPECT_THROW(lve(gt, pred, {8}), ShapeError);
}

TEST(Lve, RandomAgainstLoop) {
  std::mt19937_64 rng(2);
  const Track a = check::random_matrix(9, 36, rng), b = check::random_matrix(9, 36, rng);
  const Mask lips{0, 3, 4, 11};
  EXPECT_NEAR(lve(a, b, lips), lve_oracle(a, b, lips), 1e-14);
}

TEST(Fdd, BruteForce) {
  std::mt19937_64 rng(3);
  const Track a = check::random_matrix(12, 30, rng), b = check::random_matrix(12, 30, rng, 0.3);
  const Mask upper{1, 4, 9};
  double oracle = 0.0;
  for (Index v : upper) oracle += (dyn_oracle(a, v) - dyn_oracle(b, v)) / 3.0;
  EXPECT_NEAR(fdd(a, b, upper), oracle, 1e-14);
  EXPECT_GT(fdd(a, b, upper), 0.0);  // the smaller prediction moves less
  EXPECT_NEAR(vertex_dynamics(a, upper)(1), dyn_oracle(a, 4), 1e-14);
  EXPECT_THROW(fdd(a.topRows(1), b.topRows(1), upper), ShapeError);
}

TEST(Fdd, StaticVertexHasNoDynamics) {
  const Track still = Track::Constant(5, 6, 0.3);
  EXPECT_LT(vertex_dynamics(still, {0, 1}).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MeeCe, HandCases) {
  const Mask lips{0};
  const Track gt = Track::Zero(2, 3);
  Track up = gt, down = gt, far = gt;
  up.col(0).setConstant(0.1);
  down.col(0).setConstant(-0.1);
  far.col(0).setConstant(0.4);
  // symmetric samples average back onto the ground truth
  EXPECT_NEAR(mee(gt, {up, down}, lips), 0.0, 1e-15);
  EXPECT_NEAR(ce(gt, {up, down}, lips), 0.1, 1e-15);
  EXPECT_NEAR(mee(gt, {up, far}, lips), 0.25, 1e-15);
  EXPECT_NEAR(ce(gt, {far, up, far}, lips), 0.1, 1e-15);
  EXPECT_LT((sample_mean({up, far}) - Track((up + far) / 2.0)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(ce(gt, {}, lips), ValueError);
}

TEST(Diversity, FixedPermutationBruteForce) {
  std::mt19937_64 rng(4);
  const int B = 2;
  std::vector<std::vector<Track>> sets(3);
  for (auto& s : sets)
    for (int k = 0; k < 5; ++k) s.push_back(check::random_matrix(4, 6, rng));
  const std::vector<std::vector<std::size_t>> perms{{4, 3, 2, 1, 0}, {0, 1, 2, 3, 4}, {1, 3, 0, 2, 4}};
  double oracle = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (int j = 0; j < B; ++j) oracle += frob(sets[i][perms[i][j]], sets[i][perms[i][B + j]]);
  oracle /= 3.0 * B;
  EXPECT_NEAR(diversity(sets, perms, B), oracle, 1e-13);
  EXPECT_THROW(diversity(sets, perms, 3), ValueError);
}

TEST(Diversity, IdenticalSamplesAndSeededSplit) {
  std::vector<std::vector<Track>> same(2, std::vector<Track>(10, Track::Constant(3, 6, 0.2)));
  EXPECT_EQ(diversity(same, 9, 5).value, 0.0);
  const auto a = diversity(same, 9, 5), b = diversity(same, 9, 5);
  EXPECT_EQ(a.permutations, b.permutations);
  for (const auto& p : a.permutations) {
    std::set<std::size_t> u(p.begin(), p.end());
    EXPECT_EQ(u.size(), 10u);
    EXPECT_EQ(*u.rbegin(), 9u);
  }
}

TEST(Diversity, PermutationIsUniformish) {
  std::mt19937_64 rng(5);
  std::vector<int> first(4, 0);
  for (int i = 0; i < 8000; ++i) ++first[random_permutation(4, rng)[0]];
  for (int c : first) EXPECT_NEAR(c / 8000.0, 0.25, 0.02);
}

TEST(Heatmap, AlternatingOffsets) {
  const double d = 0.003;
  Track t = Track::Zero(6, 3 * 3);
  for (Index f = 0; f < 6; ++f) t(f, 3 * 1 + 2) = (f % 2 == 0 ? d : -d);
  const auto h = dynamics_heatmap(t);
  ASSERT_EQ(h.mean.size(), 3);
  EXPECT_NEAR(h.mean(1), 2 * d, 1e-15);
  EXPECT_NEAR(h.std(1), 0.0, 1e-15);
  EXPECT_EQ(h.mean(0), 0.0);

  const auto dir = check::fresh_dir("heatmap");
  write_heatmap_csv(h, dir / "h.csv");
  std::ifstream in(dir / "h.csv");
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "vertex_index,mean,std");
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_THROW(dynamics_heatmap(t.topRows(1)), ShapeError);
}

TEST(Report, EvaluateTracksAndRoundTrip) {
  const auto face = face::make_toy_facemodel(3, 24);
  std::mt19937_64 rng(6);
  std::vector<std::string> ids{"a", "b"};
  std::vector<Track> gts{face.params_to_displacements(check::random_matrix(5, data::kMotionDims, rng, 0.1)),
                         face.params_to_displacements(check::random_matrix(9, data::kMotionDims, rng, 0.1))};

  // ground truth against itself scores zero everywhere
  EvalOptions one{1, 5, 0};
  const auto self = evaluate_tracks(ids, gts, {{gts[0]}, {gts[1]}}, face, one);
  EXPECT_EQ(self.mve, 0.0);
  EXPECT_EQ(self.lve, 0.0);
  EXPECT_EQ(self.fdd, 0.0);
  EXPECT_EQ(self.mee, 0.0);
  EXPECT_EQ(self.ce, 0.0);
  EXPECT_FALSE(self.diversity.has_value());
  EXPECT_EQ(self.to_json().at("raw").at("diversity"), "N/A");
  EXPECT_EQ(self.to_json().at("scaled").at("diversity"), "N/A");

  std::vector<std::vector<Track>> sets(2);
  for (std::size_t i = 0; i < 2; ++i)
    for (int k = 0; k < 4; ++k) sets[i].push_back(gts[i] + check::random_matrix(gts[i].rows(), gts[i].cols(), rng, 0.01));
  const auto r = evaluate_tracks(ids, gts, sets, face, {4, 2, 11});
  // MVE and LVE pool frames across sequences
  EXPECT_NEAR(r.mve, (5 * mve(gts[0], sets[0][0]) + 9 * mve(gts[1], sets[1][0])) / 14.0, 1e-14);
  EXPECT_NEAR(r.lve, (5 * lve(gts[0], sets[0][0], face.lip_mask()) + 9 * lve(gts[1], sets[1][0], face.lip_mask())) / 14.0,
              1e-14);
  EXPECT_NEAR(r.fdd, (fdd(gts[0], sets[0][0], face.upper_mask()) + fdd(gts[1], sets[1][0], face.upper_mask())) / 2.0,
              1e-14);
  ASSERT_TRUE(r.diversity.has_value());
  EXPECT_GT(*r.diversity, 0.0);
  const auto j = r.to_json();
  EXPECT_NEAR(j.at("scaled").at("mve").get<double>(), r.mve / kScaleMve, 1e-9);
  EXPECT_NEAR(j.at("scaled").at("diversity").get<double>(), *r.diversity / kScaleDiversity, 1e-9);
  EXPECT_EQ(MetricReport::from_json(j), r);
  EXPECT_EQ(MetricReport::from_json(self.to_json()), self);

  EXPECT_THROW(evaluate_tracks(ids, gts, sets, face, {3, 1, 0}), ValueError);
}
