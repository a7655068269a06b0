#pragma once

#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "mvs/tensor.hpp"

namespace mvs::ad {

class Tape;

// Handle to a tensor recorded on a tape. Cheap to copy; owns nothing.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode tape. Operations append value nodes and backward steps in
// execution order; backward() replays the steps strictly in reverse, with
// gradients accumulating additively. A tape is built for one forward pass
// and is not concurrently mutable; run independent samples on separate
// tapes.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false) {
    Var v = node(value.shape(), requires_grad);
    val_mut(v) = std::move(value);
    return v;
  }

  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var scalar(double v) { return constant(Tensor::scalar(v)); }

  // Leaf whose gradient is additionally accumulated into *grad_sink after
  // backward. Used to bind named parameters without copying grads by hand.
  Var leaf_with_sink(const Tensor& value, Tensor* grad_sink) {
    Var v = leaf(value, true);
    Tape* t = this;
    int id = v.id;
    record([t, id, grad_sink]() {
      const Tensor& g = t->grad(Var{t, id});
      for (long i = 0; i < g.size(); ++i) (*grad_sink)[i] += g[i];
    });
    return v;
  }

  const Tensor& val(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Gradient of the last backward() output w.r.t. this node (zeros if the
  // node was never touched).
  const Tensor& grad(Var v) {
    ensure_grad(v.id);
    return nodes_[v.id].grad;
  }

  void backward(Var output);

  // --- op-author interface ---

  Var node(std::vector<int> shape, bool requires_grad) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.value = Tensor(std::move(shape));
    n.requires_grad = requires_grad;
    return Var{this, static_cast<int>(nodes_.size()) - 1};
  }

  Tensor& val_mut(Var v) { return nodes_[v.id].value; }

  Tensor& grad_mut(Var v) {
    ensure_grad(v.id);
    return nodes_[v.id].grad;
  }

  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // lazily allocated
    bool requires_grad = false;
  };

  void ensure_grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
  }

  std::deque<Node> nodes_;
  std::vector<std::function<void()>> steps_;
};

}  // namespace mvs::ad
