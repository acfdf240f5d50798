#include "ptk/nn/ops.hpp"

#include <cmath>

#include "ptk/common/error.hpp"

namespace ptk::nn {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

void require_row(const Var& a, const Var& row, const char* op) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError(std::string(op) + ": expected 1x" + std::to_string(a.cols()) + " row, got " +
                     std::to_string(row.rows()) + "x" + std::to_string(row.cols()));
  }
}

Node& in(Node& self, std::size_t i) { return *self.inputs[i]; }

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + " differ");
  }
  Matrix value = a.value() * b.value();
  return make_result(std::move(value), {a, b}, [](Node& self) {
    Node& lhs = in(self, 0);
    Node& rhs = in(self, 1);
    if (lhs.requires_grad) lhs.accumulate_expr(self.grad * rhs.value.transpose());
    if (rhs.requires_grad) rhs.accumulate_expr(lhs.value.transpose() * self.grad);
  });
}

Var transpose(const Var& a) {
  return make_result(a.value().transpose(), {a},
                     [](Node& self) { in(self, 0).accumulate_expr(self.grad.transpose()); });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make_result(a.value() + b.value(), {a, b}, [](Node& self) {
    in(self, 0).accumulate(self.grad);
    in(self, 1).accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make_result(a.value() - b.value(), {a, b}, [](Node& self) {
    in(self, 0).accumulate(self.grad);
    in(self, 1).accumulate_expr(-self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    Node& lhs = in(self, 0);
    Node& rhs = in(self, 1);
    if (lhs.requires_grad) lhs.accumulate_expr(self.grad.cwiseProduct(rhs.value));
    if (rhs.requires_grad) rhs.accumulate_expr(self.grad.cwiseProduct(lhs.value));
  });
}

Var scale(const Var& a, double s) {
  return make_result(a.value() * s, {a}, [s](Node& self) { in(self, 0).accumulate_expr(self.grad * s); });
}

Var add_row(const Var& a, const Var& row) {
  require_row(a, row, "add_row");
  Matrix value = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(value), {a, row}, [](Node& self) {
    in(self, 0).accumulate(self.grad);
    in(self, 1).accumulate_expr(self.grad.colwise().sum());
  });
}

Var mul_row(const Var& a, const Var& row) {
  require_row(a, row, "mul_row");
  Matrix value = a.value().array().rowwise() * row.value().row(0).array();
  return make_result(std::move(value), {a, row}, [](Node& self) {
    Node& lhs = in(self, 0);
    Node& rhs = in(self, 1);
    if (lhs.requires_grad) {
      Matrix g = self.grad.array().rowwise() * rhs.value.row(0).array();
      lhs.accumulate(g);
    }
    if (rhs.requires_grad) rhs.accumulate_expr(self.grad.cwiseProduct(lhs.value).colwise().sum());
  });
}

Var exp(const Var& a) {
  Matrix value = a.value().array().exp().matrix();
  return make_result(value, {a}, [value](Node& self) {
    in(self, 0).accumulate_expr(self.grad.cwiseProduct(value));
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluK = 0.044715;
}  // namespace

Var gelu(const Var& a) {
  const double c = kGeluC;
  const double k = kGeluK;
  const Matrix& x = a.value();
  Matrix t = (c * (x.array() + k * x.array().cube())).tanh().matrix();
  Matrix value = (0.5 * x.array() * (1.0 + t.array())).matrix();
  return make_result(std::move(value), {a}, [t = std::move(t), c, k](Node& self) {
    const Matrix& x = in(self, 0).value;
    Matrix d = (0.5 * (1.0 + t.array()) +
                0.5 * x.array() * (1.0 - t.array().square()) * c * (1.0 + 3.0 * k * x.array().square()))
                   .matrix();
    in(self, 0).accumulate_expr(self.grad.cwiseProduct(d));
  });
}

Var clamp(const Var& a, double lo, double hi) {
  Matrix value = a.value().cwiseMax(lo).cwiseMin(hi);
  return make_result(std::move(value), {a}, [lo, hi](Node& self) {
    const Matrix& x = in(self, 0).value;
    Matrix g = ((x.array() >= lo) && (x.array() <= hi)).select(self.grad, 0.0);
    in(self, 0).accumulate(g);
  });
}

Var softmax_rows(const Var& a) {
  Matrix value = a.value();
  for (Index r = 0; r < value.rows(); ++r) {
    auto row = value.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return make_result(value, {a}, [value](Node& self) {
    Eigen::VectorXd dots = self.grad.cwiseProduct(value).rowwise().sum();
    Matrix g = value.cwiseProduct((self.grad.colwise() - dots));
    in(self, 0).accumulate(g);
  });
}

Var layer_norm(const Var& a, const Var& gamma, const Var& beta, double eps) {
  require_row(a, gamma, "layer_norm gamma");
  require_row(a, beta, "layer_norm beta");
  const Matrix& x = a.value();
  const double n = static_cast<double>(x.cols());
  Eigen::VectorXd mu = x.rowwise().mean();
  Matrix centered = x.colwise() - mu;
  Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / n) + eps).sqrt().inverse().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix value = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
                 beta.value().row(0).array();
  return make_result(std::move(value), {a, gamma, beta},
                     [xhat = std::move(xhat), inv_std = std::move(inv_std), n](Node& self) {
                       Node& x_node = in(self, 0);
                       Node& g_node = in(self, 1);
                       Node& b_node = in(self, 2);
                       if (g_node.requires_grad) g_node.accumulate_expr(self.grad.cwiseProduct(xhat).colwise().sum());
                       if (b_node.requires_grad) b_node.accumulate_expr(self.grad.colwise().sum());
                       if (x_node.requires_grad) {
                         Matrix dxhat = self.grad.array().rowwise() * g_node.value.row(0).array();
                         Eigen::VectorXd mean_d = dxhat.rowwise().mean();
                         Eigen::VectorXd mean_dx = dxhat.cwiseProduct(xhat).rowwise().sum() / n;
                         Matrix dx = (dxhat.colwise() - mean_d) - (xhat.array().colwise() * mean_dx.array()).matrix();
                         dx.array().colwise() *= inv_std.array();
                         x_node.accumulate(dx);
                       }
                     });
}

Var slice_cols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of range for " + std::to_string(a.cols()) + " columns");
  }
  Matrix value = a.value().middleCols(start, count);
  return make_result(std::move(value), {a}, [start, count](Node& self) {
    Node& src = in(self, 0);
    if (src.grad.size() == 0) src.grad = Matrix::Zero(src.value.rows(), src.value.cols());
    src.grad.middleCols(start, count) += self.grad;
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix value(rows, cols);
  Index offset = 0;
  for (const Var& p : parts) {
    value.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return make_result(std::move(value), parts, [](Node& self) {
    Index offset = 0;
    for (auto& input : self.inputs) {
      const Index c = input->value.cols();
      if (input->requires_grad) input->accumulate_expr(self.grad.middleCols(offset, c));
      offset += c;
    }
  });
}

Var im2col_same(const Var& x, Index kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ValueError("conv1d kernel must be odd, got " + std::to_string(kernel));
  }
  const Index frames = x.rows();
  const Index channels = x.cols();
  const Index half = kernel / 2;
  Matrix value = Matrix::Zero(frames, kernel * channels);
  for (Index t = 0; t < frames; ++t) {
    for (Index k = 0; k < kernel; ++k) {
      const Index src = t + k - half;
      if (src >= 0 && src < frames) value.block(t, k * channels, 1, channels) = x.value().row(src);
    }
  }
  return make_result(std::move(value), {x}, [kernel, half, frames, channels](Node& self) {
    Matrix g = Matrix::Zero(frames, channels);
    for (Index t = 0; t < frames; ++t) {
      for (Index k = 0; k < kernel; ++k) {
        const Index src = t + k - half;
        if (src >= 0 && src < frames) g.row(src) += self.grad.block(t, k * channels, 1, channels);
      }
    }
    in(self, 0).accumulate(g);
  });
}

Var split_rows(const Var& a, Index parts) {
  if (parts < 1 || a.cols() % parts != 0) {
    throw ShapeError("split_rows: " + std::to_string(a.cols()) + " columns not divisible by " +
                     std::to_string(parts));
  }
  const Index rows = a.rows() * parts;
  const Index cols = a.cols() / parts;
  // Row-major storage makes F x (S*D) and (F*S) x D the same buffer.
  Matrix value = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return make_result(std::move(value), {a}, [](Node& self) {
    Node& src = in(self, 0);
    src.accumulate_expr(Eigen::Map<const Matrix>(self.grad.data(), src.value.rows(), src.value.cols()));
  });
}

Var merge_rows(const Var& a, Index parts) {
  if (parts < 1 || a.rows() % parts != 0) {
    throw ShapeError("merge_rows: " + std::to_string(a.rows()) + " rows not divisible by " +
                     std::to_string(parts));
  }
  Matrix value = Eigen::Map<const Matrix>(a.value().data(), a.rows() / parts, a.cols() * parts);
  return make_result(std::move(value), {a}, [](Node& self) {
    Node& src = in(self, 0);
    src.accumulate_expr(Eigen::Map<const Matrix>(self.grad.data(), src.value.rows(), src.value.cols()));
  });
}

Var gather_rows(const Var& table, std::span<const Index> indices) {
  Matrix value(static_cast<Index>(indices.size()), table.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Index k = indices[i];
    if (k < 0 || k >= table.rows()) throw ShapeError("gather_rows: index " + std::to_string(k) + " out of range");
    value.row(static_cast<Index>(i)) = table.value().row(k);
  }
  std::vector<Index> idx(indices.begin(), indices.end());
  return make_result(std::move(value), {table}, [idx = std::move(idx)](Node& self) {
    Node& src = in(self, 0);
    if (src.grad.size() == 0) src.grad = Matrix::Zero(src.value.rows(), src.value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) src.grad.row(idx[i]) += self.grad.row(static_cast<Index>(i));
  });
}

Var straight_through(const Var& source, const Matrix& replacement) {
  if (source.rows() != replacement.rows() || source.cols() != replacement.cols()) {
    throw ShapeError("straight_through: replacement shape differs from source");
  }
  return make_result(replacement, {source}, [](Node& self) { in(self, 0).accumulate(self.grad); });
}

Var detach(const Var& a) { return Var(a.value(), false); }

Var dropout(const Var& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw ValueError("dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(a.rows(), a.cols());
  const double inv = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? inv : 0.0;
  Matrix value = a.value().cwiseProduct(mask);
  return make_result(std::move(value), {a}, [mask = std::move(mask)](Node& self) {
    in(self, 0).accumulate_expr(self.grad.cwiseProduct(mask));
  });
}

Var sum(const Var& a) {
  Matrix value(1, 1);
  value(0, 0) = a.value().sum();
  return make_result(std::move(value), {a}, [](Node& self) {
    Node& src = in(self, 0);
    src.accumulate_expr(Matrix::Constant(src.value.rows(), src.value.cols(), self.grad(0, 0)));
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var l1_loss(const Var& a, const Var& b) {
  require_same_shape(a, b, "l1_loss");
  Matrix diff = a.value() - b.value();
  const double n = static_cast<double>(diff.size());
  Matrix value(1, 1);
  value(0, 0) = diff.cwiseAbs().sum() / n;
  return make_result(std::move(value), {a, b}, [diff = std::move(diff), n](Node& self) {
    Matrix g = diff.array().sign().matrix() * (self.grad(0, 0) / n);
    in(self, 0).accumulate(g);
    in(self, 1).accumulate_expr(-g);
  });
}

Var mse_loss(const Var& a, const Var& b) {
  require_same_shape(a, b, "mse_loss");
  Matrix diff = a.value() - b.value();
  const double n = static_cast<double>(diff.size());
  Matrix value(1, 1);
  value(0, 0) = diff.squaredNorm() / n;
  return make_result(std::move(value), {a, b}, [diff = std::move(diff), n](Node& self) {
    Matrix g = diff * (2.0 * self.grad(0, 0) / n);
    in(self, 0).accumulate(g);
    in(self, 1).accumulate_expr(-g);
  });
}

}  // namespace ptk::nn
