#pragma once

#include <random>
#include <span>
#include <vector>

#include "ptk/nn/tensor.hpp"

// Differentiable primitives over 2-D values. Sequences are time-major (rows = frames).
namespace ptk::nn {

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Element-wise product.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

/// a (R x C) + row (1 x C), broadcast over rows.
Var add_row(const Var& a, const Var& row);
/// a (R x C) * row (1 x C) element-wise, broadcast over rows.
Var mul_row(const Var& a, const Var& row);

Var exp(const Var& a);
/// tanh-approximated GELU.
Var gelu(const Var& a);
/// Element-wise clamp; the gradient is zero where the input lies outside [lo, hi].
Var clamp(const Var& a, double lo, double hi);

Var softmax_rows(const Var& a);
/// Per-row normalization followed by gamma * x + beta (both 1 x C).
Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps = 1e-5);

Var slice_cols(const Var& a, Index start, Index count);
Var concat_cols(const std::vector<Var>& parts);

/// Zero-padded "same" unfolding for temporal convolution: F x C -> F x (K*C),
/// block k holding frame t + k - K/2. K must be odd.
Var im2col_same(const Var& x, Index kernel);

/// F x (S*D) -> (F*S) x D: each frame row is cut into S consecutive sub-vectors.
Var split_rows(const Var& a, Index parts);
/// Inverse of split_rows.
Var merge_rows(const Var& a, Index parts);

/// Row lookup; gradients scatter-add back into the selected table rows.
Var gather_rows(const Var& table, std::span<const Index> indices);

/// Forward value `replacement`, backward identity into `source` (straight-through estimator).
Var straight_through(const Var& source, const Matrix& replacement);
/// Same value, no gradient.
Var detach(const Var& a);

/// Multiplies by a fresh Bernoulli keep-mask scaled by 1/(1-p). Identity when p == 0.
Var dropout(const Var& a, double p, std::mt19937_64& rng);

Var sum(const Var& a);
Var mean(const Var& a);
/// mean(|a - b|) over all elements.
Var l1_loss(const Var& a, const Var& b);
/// mean((a - b)^2) over all elements.
Var mse_loss(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

}  // namespace ptk::nn
