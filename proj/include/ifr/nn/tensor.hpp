#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace ifr::nn {

// Reverse-mode tape node. Templated on the scalar so the production model can
// run float while gradient checks instantiate double.
template <typename T>
struct Node {
  std::vector<int> shape;
  std::vector<T> val;
  std::vector<T> grad;  // allocated lazily, same length as val
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node<T>&)> backprop;

  size_t numel() const { return val.size(); }

  void ensure_grad() {
    if (grad.size() != val.size()) grad.assign(val.size(), T(0));
  }
};

// Graph recording switch; off inside inference paths to skip tape buildup.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool saved;
  NoGradGuard() : saved(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = saved; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

inline size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= static_cast<size_t>(d);
  }
  return n;
}

// Shared handle to a graph node. Copying shares the node.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->val.assign(shape_numel(shape), T(0));
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(n);
  }

  static Tensor from_data(std::vector<int> shape, std::vector<T> data, bool requires_grad = false) {
    if (shape_numel(shape) != data.size()) throw std::invalid_argument("tensor data size does not match shape");
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->val = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
  }

  static Tensor scalar(T v) { return from_data({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }

  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  size_t numel() const { return node_->val.size(); }

  std::vector<T>& val() const { return node_->val; }
  std::vector<T>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }

  T item() const {
    if (numel() != 1) throw std::logic_error("item() on non-scalar tensor");
    return node_->val[0];
  }

  void zero_grad() const {
    if (node_) node_->grad.assign(node_->val.size(), T(0));
  }

  // New leaf sharing a copy of the values, cut off from the graph.
  Tensor detach() const {
    auto n = std::make_shared<Node<T>>();
    n->shape = node_->shape;
    n->val = node_->val;
    n->requires_grad = false;
    return Tensor(n);
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Builds an op node. When recording is off or no parent carries gradient, the
// result is a plain leaf and the closure is dropped.
template <typename T>
Tensor<T> make_op(std::vector<int> shape, std::vector<T> val, std::vector<Tensor<T>> parents,
                  std::function<void(Node<T>&)> backprop) {
  if (shape_numel(shape) != val.size()) throw std::logic_error("make_op: value size does not match shape");
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->val = std::move(val);
  bool track = grad_mode();
  if (track) {
    track = false;
    for (const auto& p : parents)
      if (p.node().requires_grad) track = true;
  }
  if (track) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.ptr());
    n->backprop = std::move(backprop);
  }
  return Tensor<T>(n);
}

// Reverse pass from a scalar. Iterative topological order; gradients
// accumulate, so callers zero parameter grads between steps.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) throw std::logic_error("backward: loss must be scalar");
  Node<T>* root = &loss.node();
  if (!root->requires_grad) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.push_back({root, 0});
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) n->ensure_grad();
  root->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace ifr::nn
