#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fairtat {

/// Dense row-major tensor of doubles. Plain data: datasets, parameters and
/// attack buffers use this directly; differentiable values live on a Tape.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, double fill = 0.0);
  Tensor(std::vector<std::size_t> s, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const {
    return values[i * cols() + j];
  }

  bool all_finite() const;
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

/// Handle to a node on a Tape.
struct Var {
  int idx = -1;
};

/// Reverse-mode tape. Records each primitive during the forward pass in
/// topological order; backward() replays it once in reverse. Rebuilt per
/// forward pass, single-threaded.
class Tape {
 public:
  // Leaf node holding a copy of `value`. Gradients accumulate only for
  // requires_grad leaves (and interior nodes that need them).
  Var leaf(const Tensor& value, bool requires_grad = false);

  // y = a * b, shapes [m x k] * [k x n].
  Var matmul(Var a, Var b);
  // y = a * b^T, shapes [m x k] * [n x k].
  Var matmul_nt(Var a, Var b);
  // y[i, :] = x[i, :] + bias, bias broadcast over the batch axis.
  Var add_bias(Var x, Var bias);
  // Elementwise sum, same shape.
  Var add(Var a, Var b);
  Var relu(Var x);
  Var mul_scalar(Var x, double c);
  // Per-sample cross entropy of softmax(logits) against integer labels;
  // result shape [n]. Softmax uses max-subtraction.
  Var softmax_cross_entropy(Var logits, const std::vector<int>& labels, int k);
  // Per-sample KL(softmax(p_logits) || softmax(q_logits)); result shape [n].
  Var kl_divergence(Var p_logits, Var q_logits);
  // Mean over all entries; result is a scalar (shape [1]).
  Var mean(Var x);

  const Tensor& value(Var v) const;
  std::span<const double> grad(Var v) const;

  // Populates gradients of every requires_grad node w.r.t. `loss`.
  // Throws std::logic_error on a non-scalar loss or a second backward
  // without reset_grads().
  void backward(Var loss);
  void reset_grads();

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    bool needs_grad = false;
    std::function<void(Tape&)> backprop;  // empty for leaves
    std::string op;
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Tensor value, bool needs_grad, std::string op,
           std::function<void(Tape&)> backprop);
  void check_finite(Var v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace fairtat
