#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "apm/core/tensor.hpp"

namespace apm {

namespace detail {
inline thread_local bool grad_enabled = true;
}

/// While alive, ops record no tape on this thread (inference).
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// One vertex of the reverse-mode tape. A node owns its forward value and,
/// once backward() reaches it, a gradient buffer of the same shape.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  bool has_grad() const noexcept { return !grad.empty(); }

  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a tape node. Cheap to copy; copies alias the same node.
template <typename T>
class Var {
 public:
  Var() = default;

  static Var constant(Tensor<T> value) { return make(std::move(value), false); }
  static Var leaf(Tensor<T> value, bool requires_grad) { return make(std::move(value), requires_grad); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->has_grad(); }
  const Tensor<T>& grad() const { return node_->grad; }
  void clear_grad() { node_->grad = Tensor<T>(); }

  const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }

  /// Builds an op result. The backward closure is dropped when no input
  /// needs a gradient, so constant subgraphs carry no tape.
  static Var from_op(Tensor<T> value, std::vector<Var> inputs, std::function<void(Node<T>&)> fn) {
    Var out = make(std::move(value), false);
    if (!detail::grad_enabled) return out;
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        out.node_->requires_grad = true;
        break;
      }
    }
    if (out.node_->requires_grad) {
      out.node_->inputs.reserve(inputs.size());
      for (auto& in : inputs) out.node_->inputs.push_back(in.node_);
      out.node_->backward_fn = std::move(fn);
    }
    return out;
  }

 private:
  static Var make(Tensor<T> value, bool requires_grad) {
    Var v;
    v.node_ = std::make_shared<Node<T>>();
    v.node_->value = std::move(value);
    v.node_->requires_grad = requires_grad;
    return v;
  }

  std::shared_ptr<Node<T>> node_;
};

/// Reverse pass from a single-element loss. Gradients accumulate into any
/// existing buffers, so callers clear parameter grads between steps.
template <typename T>
void backward(const Var<T>& loss) {
  if (loss.value().size() != 1) {
    throw DimensionError("backward: loss must be a single element, got " +
                         shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward_fn && node->has_grad()) node->backward_fn(*node);
  }
}

}  // namespace apm
