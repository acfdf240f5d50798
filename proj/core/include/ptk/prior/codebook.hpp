#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ptk/nn/tensor.hpp"

namespace ptk::prior {

using nn::Index;
using nn::Matrix;
using nn::Var;

/// Learnable discrete motion vocabulary: K embeddings of dimension D.
class Codebook {
 public:
  Codebook() = default;
  explicit Codebook(Matrix embeddings);
  /// Embeddings drawn from U(-1/K, 1/K).
  static Codebook uniform_init(Index size, Index dim, std::mt19937_64& rng);

  Index size() const { return embeddings_.rows(); }
  Index dim() const { return embeddings_.cols(); }
  const Var& embeddings() const { return embeddings_; }
  Var& embeddings() { return embeddings_; }

  /// Diagnostic selection histogram; never affects training.
  const std::vector<std::int64_t>& usage() const { return usage_; }
  void record_usage(std::span<const Index> indices);
  void reset_usage();

 private:
  Var embeddings_;
  std::vector<std::int64_t> usage_;
};

struct QuantizeResult {
  Var z_q;                     // F x (S*D), forward = selected rows, backward = identity into z
  std::vector<Index> indices;  // F*S entries, row-major (frame, slot)
  Var loss_qua;                // mean||sg[z] - z'||^2 + beta * mean||z - sg[z']||^2
  Index codes_per_frame = 0;
};

/// Index of the Euclidean-nearest row of `table` (first on ties).
Index nearest_index(const Matrix& table, const Eigen::Ref<const nn::RowVector>& query);

/// Each frame of z (F x S*D) is cut into S sub-vectors of width D; every sub-vector is
/// replaced by its nearest codebook row and the halves are re-joined. Squared norms in the
/// loss are element means, so loss_qua == (1 + beta) * mean((z - z')^2) in value.
QuantizeResult quantize_nearest(const Codebook& codebook, const Var& z, double beta);

/// Like quantize_nearest, but each index is drawn with probability proportional to
/// exp(-||z_sub - e_k||^2 / tau). tau == 0 reduces to quantize_nearest exactly.
QuantizeResult sample_quantize(const Codebook& codebook, const Var& z, double tau, std::mt19937_64& rng,
                               double beta);

/// Distance-softmax over all K rows for one sub-vector; sums to 1. tau must be > 0.
std::vector<double> sampling_distribution(const Matrix& table, const Eigen::Ref<const nn::RowVector>& query,
                                          double tau);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw (stable across standard libraries).
double unit_uniform(std::mt19937_64& rng);

}  // namespace ptk::prior
