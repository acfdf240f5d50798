#include "ptk/nn/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "ptk/common/error.hpp"

namespace ptk::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

void Node::accumulate(const Matrix& g) { accumulate_expr(g); }

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Matrix Var::grad() const {
  if (has_grad()) return node_->grad;
  return Matrix::Zero(rows(), cols());
}

void Var::zero_grad() {
  if (node_) node_->grad.resize(0, 0);
}

double Var::item() const {
  if (rows() != 1 || cols() != 1) {
    throw ShapeError("item() on a " + std::to_string(rows()) + "x" + std::to_string(cols()) + " value");
  }
  return node_->value(0, 0);
}

Var make_result(Matrix value, const std::vector<Var>& inputs, std::function<void(Node&)> backward) {
  Var out(std::move(value), false);
  if (!g_grad_enabled) return out;
  bool needs = false;
  for (const Var& in : inputs) needs = needs || in.requires_grad();
  if (!needs) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) node.inputs.push_back(in.node());
  node.backward = std::move(backward);
  return out;
}

Var make_result(Matrix value, std::initializer_list<Var> inputs, std::function<void(Node&)> backward) {
  return make_result(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

void backward(const Var& root) {
  if (!root.defined() || root.rows() != 1 || root.cols() != 1) {
    throw ShapeError("backward() needs a scalar (1x1) root");
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order without recursion depth limits.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.size() != 0) node->backward(*node);
  }
  // Intermediate buffers are released so a retained graph does not pin memory.
  for (Node* node : order) {
    if (node->backward) node->grad.resize(0, 0);
  }
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool TensorSpec::valid() const {
  if (shape.size() != roles.size()) return false;
  for (Index d : shape) {
    if (d < 1) return false;
  }
  return true;
}

std::string TensorSpec::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

void expect_shape(const Matrix& m, Index rows, Index cols, const std::string& what) {
  if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols)) {
    std::ostringstream os;
    os << what << ": expected " << (rows >= 0 ? std::to_string(rows) : "*") << 'x'
       << (cols >= 0 ? std::to_string(cols) : "*") << ", got " << m.rows() << 'x' << m.cols();
    throw ShapeError(os.str());
  }
}

}  // namespace ptk::nn
