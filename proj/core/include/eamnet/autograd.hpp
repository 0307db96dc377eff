#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "eamnet/tensor.hpp"

namespace eamnet {

/// One vertex of the reverse-mode tape. The backward function reads
/// `grad` of the node it is attached to and accumulates into its inputs.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  /// Gradient buffer, zero-allocated on first use.
  Tensor& grad_buffer();
};

/// Shared handle to a tape node. Copies alias the same node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Accumulated gradient; a zero tensor if nothing has flowed back yet.
  const Tensor& grad() const { return node_->grad_buffer(); }
  void zero_grad() { node_->grad = Tensor{}; }

  /// Runs reverse accumulation from this scalar. Intermediate gradients are
  /// released once consumed; leaves keep theirs.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

/// Disables tape recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Wraps an op result. Inputs and the backward closure are recorded only
/// when recording is on and some input requires a gradient.
Var make_result(Tensor value, std::initializer_list<Var> inputs, const char* op,
                std::function<void(Node&)> backward_fn);
Var make_result(Tensor value, const std::vector<Var>& inputs, const char* op,
                std::function<void(Node&)> backward_fn);

}  // namespace eamnet
