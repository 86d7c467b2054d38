#pragma once

// Minimal reverse-mode differentiation over Tensor<T>.
//
// Each Var owns a node holding its value. When gradient recording is on and
// any input requires a gradient, the node also keeps its parents and a
// closure that pushes node.grad into them. backward() walks the recorded
// nodes in reverse creation order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "lfin/ops.hpp"

namespace lfin::ag {

namespace detail {
inline std::atomic<std::uint64_t>& sequence() {
  static std::atomic<std::uint64_t> seq{0};
  return seq;
}
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode(); }

/// Disables graph recording for its lifetime (inference).
class NoGradGuard {
 public:
  NoGradGuard() : saved_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = saved_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void accumulate(const Tensor<T>& g) {
    if (!requires_grad) return;
    if (grad.empty()) {
      grad = g;
      return;
    }
    if (!grad.same_shape(g)) throw ShapeError("gradient shape mismatch " + g.dims_string());
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
  }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

  const Tensor<T>& value() const { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool valid() const { return static_cast<bool>(node_); }
  void zero_grad() { node_->grad = Tensor<T>(); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->seq = detail::sequence()++;
  return Var<T>(std::move(n));
}

namespace detail {

// Creates an op node. Parents and the backward closure are only kept when
// recording is on and some input needs a gradient.
template <typename T>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->is_leaf = false;
  n->seq = sequence()++;
  const bool needs = grad_enabled() &&
                     std::any_of(inputs.begin(), inputs.end(), [](const Var<T>& v) { return v.requires_grad(); });
  if (needs) {
    n->requires_grad = true;
    for (auto& v : inputs) n->parents.push_back(v.node());
    n->backward_fn = std::move(backward);
  }
  return Var<T>(std::move(n));
}

}  // namespace detail

/// Runs reverse accumulation from `out`, seeding its gradient with `seed`
/// (shape of out). Leaf gradients accumulate across calls.
/// Throws StateError when `out` carries no recorded forward pass.
template <typename T>
void backward(const Var<T>& out, const Tensor<T>& seed) {
  if (!out.valid() || out.node()->is_leaf || !out.node()->backward_fn)
    throw StateError("backward called on a value without a recorded forward pass");
  if (!seed.same_shape(out.value())) throw ShapeError("backward seed shape mismatch");

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<Node<T>*> stack{out.node().get()};
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (auto& p : n->parents)
      if (p->requires_grad) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(), [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

  for (Node<T>* n : order)
    if (!n->is_leaf) n->grad = Tensor<T>();
  out.node()->grad = seed;
  for (Node<T>* n : order) {
    if (n->is_leaf || n->grad.empty()) continue;
    n->backward_fn(*n);
  }
}

/// backward() for a scalar output, seeded with 1.
template <typename T>
void backward(const Var<T>& out) {
  backward(out, Tensor<T>(out.value().dims(), T(1)));
}

// ---- differentiable ops ----

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, ConvGeometry geom) {
  ConvWeights<T> w{kernel.value(), bias.value(), geom};
  auto y = conv2d_forward(x.value(), w);
  return detail::make_op<T>(std::move(y), {x, kernel, bias}, [geom](Node<T>& n) {
    auto& px = *n.parents[0];
    auto& pk = *n.parents[1];
    auto& pb = *n.parents[2];
    ConvWeights<T> w{pk.value, pb.value, geom};
    auto g = conv2d_backward(px.value, w, n.grad);
    px.accumulate(g.input);
    pk.accumulate(g.kernel);
    pb.accumulate(g.bias);
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return detail::make_op<T>(relu_forward(x.value()), {x}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    p.accumulate(relu_backward(p.value, n.grad));
  });
}

template <typename T>
Var<T> pixel_shuffle(const Var<T>& x, int r) {
  return detail::make_op<T>(lfin::pixel_shuffle(x.value(), r), {x},
                            [r](Node<T>& n) { n.parents[0]->accumulate(lfin::pixel_unshuffle(n.grad, r)); });
}

template <typename T>
Var<T> upsample_nearest(const Var<T>& x, int r) {
  return detail::make_op<T>(lfin::upsample_nearest(x.value(), r), {x}, [r](Node<T>& n) {
    n.parents[0]->accumulate(lfin::upsample_nearest_backward(n.grad, r));
  });
}

template <typename T>
Var<T> upsample_bilinear(const Var<T>& x, int r) {
  return detail::make_op<T>(lfin::upsample_bilinear(x.value(), r), {x}, [r](Node<T>& n) {
    n.parents[0]->accumulate(lfin::upsample_bilinear_backward(n.grad, r));
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& xs) {
  std::vector<Tensor<T>> values;
  std::vector<std::size_t> channels;
  values.reserve(xs.size());
  for (const auto& x : xs) {
    values.push_back(x.value());
    channels.push_back(x.value().rank() == 3 ? x.value().channels() : 0);
  }
  auto y = concat_channels<T>(values);
  return detail::make_op<T>(std::move(y), xs, [channels](Node<T>& n) {
    auto parts = split_channels<T>(n.grad, channels);
    for (std::size_t i = 0; i < parts.size(); ++i) n.parents[i]->accumulate(parts[i]);
  });
}

template <typename T>
Var<T> add(const Var<T>& x, const Var<T>& y) {
  return detail::make_op<T>(residual_add(x.value(), y.value()), {x, y}, [](Node<T>& n) {
    n.parents[0]->accumulate(n.grad);
    n.parents[1]->accumulate(n.grad);
  });
}

template <typename T>
Var<T> macpi_to_sai(const Var<T>& x, int ang_res) {
  return detail::make_op<T>(macpi_to_sai_tensor(x.value(), ang_res), {x}, [ang_res](Node<T>& n) {
    n.parents[0]->accumulate(sai_to_macpi_tensor(n.grad, ang_res));
  });
}

/// Mean absolute error against a constant target; gradient sign(d)/n with
/// zero at ties. Output has dims {1}.
template <typename T>
Var<T> l1_loss(const Var<T>& pred, const Tensor<T>& target) {
  if (!pred.value().same_shape(target))
    throw ShapeError("l1_loss: prediction " + pred.value().dims_string() + " vs target " + target.dims_string());
  const auto& p = pred.value();
  const std::size_t count = p.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) acc += std::abs(static_cast<double>(p[i]) - target[i]);
  Tensor<T> out({1}, static_cast<T>(acc / static_cast<double>(count)));
  return detail::make_op<T>(std::move(out), {pred}, [target](Node<T>& n) {
    auto& pp = *n.parents[0];
    Tensor<T> g(pp.value.dims());
    const T scale = n.grad[0] / static_cast<T>(pp.value.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T d = pp.value[i] - target[i];
      g[i] = d > T(0) ? scale : (d < T(0) ? -scale : T(0));
    }
    pp.accumulate(g);
  });
}

}  // namespace lfin::ag
