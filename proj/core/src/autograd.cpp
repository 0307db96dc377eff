#include "eamnet/autograd.hpp"

#include <unordered_set>

#include "eamnet/errors.hpp"

namespace eamnet {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::backward() const {
  if (node_->value.size() != 1) {
    throw ContractError("backward() needs a scalar root, got " +
                        node_->value.shape().str());
  }
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward_fn) continue;
    if (node->grad.empty()) continue;
    node->backward_fn(*node);
    node->grad = Tensor{};
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var make_result(Tensor value, const std::vector<Var>& inputs, const char* op,
                std::function<void(Node&)> backward_fn) {
  Var out(std::move(value), false);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) {
      if (in.defined() && in.requires_grad()) {
        needs = true;
        break;
      }
    }
  }
  Node& node = *out.node();
  node.op = op;
  if (needs) {
    node.requires_grad = true;
    node.inputs.reserve(inputs.size());
    for (const auto& in : inputs) {
      if (in.defined()) node.inputs.push_back(in.node());
    }
    node.backward_fn = std::move(backward_fn);
  }
  return out;
}

Var make_result(Tensor value, std::initializer_list<Var> inputs, const char* op,
                std::function<void(Node&)> backward_fn) {
  return make_result(std::move(value), std::vector<Var>(inputs), op,
                     std::move(backward_fn));
}

}  // namespace eamnet
