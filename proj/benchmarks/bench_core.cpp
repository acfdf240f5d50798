#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "ptk/audio/features.hpp"
#include "ptk/metrics/metrics.hpp"
#include "ptk/nn/layers.hpp"
#include "ptk/nn/ops.hpp"
#include "ptk/prior/codebook.hpp"

using namespace ptk;
using nn::Index;
using nn::Matrix;

namespace {

Matrix uniform(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Matrix::NullaryExpr(rows, cols, [&] { return u(rng); });
}

void BM_QuantizeNearest(benchmark::State& state) {
  const Index k = state.range(0);
  prior::Codebook cb(uniform(k, 128, 1));
  const nn::Var z(uniform(100, 256, 2));  // 100 frames, 2 codes per frame
  for (auto _ : state) benchmark::DoNotOptimize(prior::quantize_nearest(cb, z, 0.25).indices.data());
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_QuantizeNearest)->Arg(16)->Arg(256);

void BM_SampleQuantize(benchmark::State& state) {
  prior::Codebook cb(uniform(256, 128, 3));
  const nn::Var z(uniform(100, 256, 4));
  std::mt19937_64 rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(prior::sample_quantize(cb, z, 1.0, rng, 0.25).indices.data());
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_SampleQuantize);

void BM_TransformerForward(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const Index frames = state.range(0);
  nn::TransformerStack stack({2, 64, 4, 128, 0.0}, rng);
  const nn::Var x(uniform(frames, 64, 7));
  for (auto _ : state) benchmark::DoNotOptimize(stack.forward(x, nn::Mode::eval()).value().data());
}
BENCHMARK(BM_TransformerForward)->Arg(25)->Arg(100);

void BM_TransformerBackward(benchmark::State& state) {
  std::mt19937_64 rng(8);
  nn::TransformerStack stack({2, 64, 4, 128, 0.0}, rng);
  const nn::Var x(uniform(50, 64, 9), true);
  for (auto _ : state) nn::backward(nn::sum(stack.forward(x, nn::Mode::eval())));
}
BENCHMARK(BM_TransformerBackward);

void BM_LogMel(benchmark::State& state) {
  data::AudioClip clip;
  clip.samples.resize(16000 * 4);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = 0.3 * std::sin(0.07 * static_cast<double>(i));
  const audio::LogMelExtractor ex;
  for (auto _ : state) benchmark::DoNotOptimize(ex.extract(clip).data());
}
BENCHMARK(BM_LogMel);

void BM_LipVertexError(benchmark::State& state) {
  const Index n = 5023;
  const Matrix gt = uniform(100, 3 * n, 10), pred = uniform(100, 3 * n, 11);
  metrics::Mask lips;
  for (Index v = 0; v < 250; ++v) lips.push_back(v * 20);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::lve(gt, pred, lips));
}
BENCHMARK(BM_LipVertexError);

void BM_Diversity(benchmark::State& state) {
  std::vector<std::vector<metrics::Track>> sets(4);
  std::uint64_t seed = 12;
  for (auto& s : sets)
    for (int k = 0; k < 10; ++k) s.push_back(uniform(100, 3 * 1000, seed++));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::diversity(sets, 13, 5).value);
}
BENCHMARK(BM_Diversity);

}  // namespace

BENCHMARK_MAIN();
