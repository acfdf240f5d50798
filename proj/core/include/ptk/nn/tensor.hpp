#pragma once

#include <Eigen/Core>

#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace ptk::nn {

/// Row-major so that a time-major sequence F x C stores one frame per contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  /// Adds `g` into this node's gradient buffer (allocating it on first use).
  void accumulate(const Matrix& g);
  template <typename Expr>
  void accumulate_expr(const Expr& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

/// A value in the computation graph. Copies share the underlying node.
class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  /// Direct access for optimizers and weight loading. Never call on a non-leaf during backprop.
  Matrix& mutable_value() { return node_->value; }

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  bool has_grad() const noexcept { return node_ && node_->grad.size() != 0; }
  /// Gradient accumulated by backward(); a zero matrix of the value's shape when none was produced.
  Matrix grad() const;
  void zero_grad();

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  double item() const;

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds an op result. The backward closure is dropped when no input needs a gradient
/// or when gradient recording is disabled.
Var make_result(Matrix value, std::initializer_list<Var> inputs, std::function<void(Node&)> backward);
Var make_result(Matrix value, const std::vector<Var>& inputs, std::function<void(Node&)> backward);

/// Reverse-mode sweep from a 1x1 root. Leaf gradients accumulate across calls until zero_grad().
void backward(const Var& root);

bool grad_enabled() noexcept;

/// Disables graph recording in the current thread for its lifetime (inference paths).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Shape and axis-role description used in validation messages.
struct TensorSpec {
  enum class Role { Batch, Time, Feature };
  std::vector<Index> shape;
  std::vector<Role> roles;

  bool valid() const;
  std::string to_string() const;
};

/// Throws ShapeError when `m` is not rows x cols (a negative dim matches anything).
void expect_shape(const Matrix& m, Index rows, Index cols, const std::string& what);

struct NamedParameter {
  std::string name;
  Var var;
};
using ParameterList = std::vector<NamedParameter>;

}  // namespace ptk::nn
