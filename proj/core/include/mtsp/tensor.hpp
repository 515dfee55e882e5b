#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mtsp/domain.hpp"

namespace mtsp::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One value in the gradient graph. Leaves have no parents; interior nodes
/// carry a closure that pushes their gradient into their parents.
struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;
  const char* op = "leaf";

  std::vector<double>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

/// Dense row-major matrix participating in reverse-mode differentiation.
/// Every tensor is two-dimensional; scalars are 1x1 and vectors are rows.
/// Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  std::array<std::size_t, 2> shape() const noexcept { return {node_->rows, node_->cols}; }
  std::size_t rows() const noexcept { return node_->rows; }
  std::size_t cols() const noexcept { return node_->cols; }
  std::size_t size() const noexcept { return node_->value.size(); }
  std::string shape_str() const;

  std::span<const double> data() const noexcept { return node_->value; }
  /// Mutable access to the values; only meaningful for leaves.
  std::span<double> mutable_data() noexcept { return node_->value; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return node_->value[r * node_->cols + c]; }
  double item() const;

  bool requires_grad() const noexcept { return node_->requires_grad; }
  void set_requires_grad(bool on) noexcept { node_->requires_grad = on; }
  /// Empty until a backward pass reaches this tensor.
  std::span<const double> grad() const noexcept { return node_->grad; }
  void zero_grad() noexcept;

  /// Fresh leaf holding a copy of the values.
  Tensor detach() const;
  Node* node() const noexcept { return node_.get(); }
  const NodePtr& node_ptr() const noexcept { return node_; }

 private:
  NodePtr node_;
};

/// Back-propagates from a 1x1 loss, visiting every node once in reverse
/// topological order. Leaf gradients accumulate across calls.
void backward(const Tensor& loss);

bool grad_enabled() noexcept;

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

namespace detail {

/// Allocates a result node, wiring parents and the backward rule only when
/// recording is on and some parent needs a gradient.
Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value, const char* op,
                   std::vector<Tensor> parents, std::function<void(Node&)> backward_fn);

bool any_requires_grad(std::initializer_list<const Tensor*> ts) noexcept;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b);
[[noreturn]] void shape_error(const char* op, const std::string& detail);

}  // namespace detail

}  // namespace mtsp::ad
