#include "ptk/prior/codebook.hpp"

#include <cmath>
#include <limits>

#include "ptk/common/error.hpp"
#include "ptk/nn/ops.hpp"

namespace ptk::prior {

Codebook::Codebook(Matrix embeddings)
    : embeddings_(std::move(embeddings), true), usage_(static_cast<std::size_t>(embeddings_.rows()), 0) {}

Codebook Codebook::uniform_init(Index size, Index dim, std::mt19937_64& rng) {
  if (size < 1 || dim < 1) throw ValueError("codebook needs K >= 1 and D >= 1");
  const double bound = 1.0 / static_cast<double>(size);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(size, dim);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return Codebook(std::move(m));
}

void Codebook::record_usage(std::span<const Index> indices) {
  usage_.resize(static_cast<std::size_t>(size()), 0);
  for (Index k : indices) ++usage_[static_cast<std::size_t>(k)];
}

void Codebook::reset_usage() { usage_.assign(static_cast<std::size_t>(size()), 0); }

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Index nearest_index(const Matrix& table, const Eigen::Ref<const nn::RowVector>& query) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < table.rows(); ++k) {
    const double d = (table.row(k) - query).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::vector<double> sampling_distribution(const Matrix& table, const Eigen::Ref<const nn::RowVector>& query,
                                          double tau) {
  if (!(tau > 0.0)) throw ValueError("sampling temperature must be > 0");
  std::vector<double> logits(static_cast<std::size_t>(table.rows()));
  double top = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < table.rows(); ++k) {
    logits[static_cast<std::size_t>(k)] = -(table.row(k) - query).squaredNorm() / tau;
    top = std::max(top, logits[static_cast<std::size_t>(k)]);
  }
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

namespace {

void check_inputs(const Codebook& codebook, const Var& z) {
  if (codebook.size() < 1) throw ValueError("empty codebook");
  if (z.cols() % codebook.dim() != 0) {
    throw ShapeError("quantize: latent width " + std::to_string(z.cols()) + " is not a multiple of code dim " +
                     std::to_string(codebook.dim()));
  }
}

QuantizeResult assemble(const Codebook& codebook, const Var& z, std::vector<Index> indices, double beta) {
  using namespace nn;
  const Index parts = z.cols() / codebook.dim();
  Var sub = split_rows(z, parts);
  Var chosen = gather_rows(codebook.embeddings(), indices);
  QuantizeResult r;
  r.codes_per_frame = parts;
  r.indices = std::move(indices);
  // Codebook term moves embeddings toward the (frozen) encoder output; commitment term the reverse.
  r.loss_qua = add(mse_loss(detach(sub), chosen), scale(mse_loss(sub, detach(chosen)), beta));
  r.z_q = straight_through(z, Eigen::Map<const Matrix>(chosen.value().data(), z.rows(), z.cols()));
  return r;
}

}  // namespace

QuantizeResult quantize_nearest(const Codebook& codebook, const Var& z, double beta) {
  check_inputs(codebook, z);
  const Matrix& table = codebook.embeddings().value();
  const Index dim = codebook.dim();
  const Index parts = z.cols() / dim;
  const Eigen::Map<const Matrix> sub(z.value().data(), z.rows() * parts, dim);

  // argmin ||s - e||^2 = argmin (||e||^2 - 2 s.e)
  const Eigen::VectorXd norms = table.rowwise().squaredNorm();
  const Matrix scores = (-2.0 * (sub * table.transpose())).rowwise() + norms.transpose();
  std::vector<Index> indices(static_cast<std::size_t>(sub.rows()));
  for (Index i = 0; i < sub.rows(); ++i) {
    Index k;
    scores.row(i).minCoeff(&k);
    indices[static_cast<std::size_t>(i)] = k;
  }
  return assemble(codebook, z, std::move(indices), beta);
}

QuantizeResult sample_quantize(const Codebook& codebook, const Var& z, double tau, std::mt19937_64& rng,
                               double beta) {
  if (tau < 0.0 || std::isnan(tau)) throw ValueError("sampling temperature must be >= 0");
  if (tau == 0.0) return quantize_nearest(codebook, z, beta);
  check_inputs(codebook, z);
  const Matrix& table = codebook.embeddings().value();
  const Index dim = codebook.dim();
  const Index parts = z.cols() / dim;
  const Eigen::Map<const Matrix> sub(z.value().data(), z.rows() * parts, dim);
  std::vector<Index> indices(static_cast<std::size_t>(sub.rows()));
  for (Index i = 0; i < sub.rows(); ++i) {
    const std::vector<double> p = sampling_distribution(table, sub.row(i), tau);
    const double u = unit_uniform(rng);
    double acc = 0.0;
    Index pick = static_cast<Index>(p.size()) - 1;
    for (std::size_t k = 0; k < p.size(); ++k) {
      acc += p[k];
      if (u < acc) {
        pick = static_cast<Index>(k);
        break;
      }
    }
    indices[static_cast<std::size_t>(i)] = pick;
  }
  return assemble(codebook, z, std::move(indices), beta);
}

}  // namespace ptk::prior
