#include "fairtat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "fairtat/kernels.hpp"

namespace fairtat {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t e : shape) p *= e;
  return p;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += " x ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), values(shape_product(shape), fill) {
  for (std::size_t e : shape) {
    if (e == 0) throw std::invalid_argument("Tensor: zero extent in shape");
  }
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != shape_product(shape)) {
    throw std::invalid_argument("Tensor: values size " +
                                std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
}

bool Tensor::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

Tape::Node& Tape::node(Var v) {
  if (v.idx < 0 || static_cast<std::size_t>(v.idx) >= nodes_.size()) {
    throw std::logic_error("Tape: invalid Var handle");
  }
  return nodes_[static_cast<std::size_t>(v.idx)];
}

const Tape::Node& Tape::node(Var v) const {
  return const_cast<Tape*>(this)->node(v);
}

Var Tape::push(Tensor value, bool needs_grad, std::string op,
               std::function<void(Tape&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.op = std::move(op);
  n.backprop = std::move(backprop);
  if (needs_grad) n.grad.assign(n.value.size(), 0.0);
  nodes_.push_back(std::move(n));
  Var v{static_cast<int>(nodes_.size()) - 1};
  check_finite(v);
  return v;
}

void Tape::check_finite(Var v) const {
  const Node& n = node(v);
  if (!n.value.all_finite()) {
    throw std::runtime_error("Tape: non-finite value produced by op '" + n.op +
                             "'");
  }
}

Var Tape::leaf(const Tensor& value, bool requires_grad) {
  return push(value, requires_grad, "leaf", {});
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

std::span<const double> Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.needs_grad) {
    throw std::logic_error("Tape::grad: node '" + n.op +
                           "' does not track gradients");
  }
  return {n.grad.data(), n.grad.size()};
}

void Tape::reset_grads() {
  for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  backward_done_ = false;
}

void Tape::backward(Var loss) {
  Node& ln = node(loss);
  if (ln.value.size() != 1) {
    throw std::logic_error("Tape::backward: loss must be scalar, got shape " +
                           shape_str(ln.value.shape));
  }
  if (!ln.needs_grad) {
    throw std::logic_error("Tape::backward: loss does not track gradients");
  }
  if (backward_done_) {
    throw std::logic_error(
        "Tape::backward: tape already differentiated; call reset_grads() "
        "first");
  }
  backward_done_ = true;
  ln.grad[0] = 1.0;
  for (std::size_t i = static_cast<std::size_t>(loss.idx) + 1; i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop(*this);
  }
  for (const Node& n : nodes_) {
    if (n.needs_grad &&
        !std::all_of(n.grad.begin(), n.grad.end(),
                     [](double g) { return std::isfinite(g); })) {
      throw std::runtime_error("Tape::backward: non-finite gradient at op '" +
                               n.op + "'");
    }
  }
}

namespace {

void require_matrix(const Tensor& t, const char* op) {
  if (t.shape.size() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected 2-d tensor, got " +
                                shape_str(t.shape));
  }
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_matrix(ta, "matmul");
  require_matrix(tb, "matmul");
  if (ta.shape[1] != tb.shape[0]) {
    throw std::invalid_argument("matmul: inner dims differ, " +
                                shape_str(ta.shape) + " * " +
                                shape_str(tb.shape));
  }
  std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
  Tensor out({m, n});
  kern::gemm_nn(ta.values.data(), tb.values.data(), out.values.data(), m, k, n);
  bool ng = node(a).needs_grad || node(b).needs_grad;
  int ai = a.idx, bi = b.idx;
  int self = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, "matmul", [ai, bi, self, m, k, n](Tape& t) {
    const auto& gy = t.nodes_[self].grad;
    if (gy.empty()) return;
    Node& na = t.nodes_[ai];
    Node& nb = t.nodes_[bi];
    // dA += dY * B^T  ([m x n] * [k x n]^T)
    if (na.needs_grad) {
      kern::gemm_nt(gy.data(), nb.value.values.data(), na.grad.data(), m, n,
                    k);
    }
    // dB += A^T * dY  ([m x k]^T * [m x n])
    if (nb.needs_grad) {
      kern::gemm_tn(na.value.values.data(), gy.data(), nb.grad.data(), m, k,
                    n);
    }
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  require_matrix(ta, "matmul_nt");
  require_matrix(tb, "matmul_nt");
  if (ta.shape[1] != tb.shape[1]) {
    throw std::invalid_argument("matmul_nt: inner dims differ, " +
                                shape_str(ta.shape) + " * " +
                                shape_str(tb.shape) + "^T");
  }
  std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[0];
  Tensor out({m, n});
  kern::gemm_nt(ta.values.data(), tb.values.data(), out.values.data(), m, k, n);
  bool ng = node(a).needs_grad || node(b).needs_grad;
  int ai = a.idx, bi = b.idx;
  int self = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, "matmul_nt",
              [ai, bi, self, m, k, n](Tape& t) {
                const auto& gy = t.nodes_[self].grad;
                if (gy.empty()) return;
                Node& na = t.nodes_[ai];
                Node& nb = t.nodes_[bi];
                // dA += dY * B  ([m x n] * [n x k])
                if (na.needs_grad) {
                  kern::gemm_nn(gy.data(), nb.value.values.data(),
                                na.grad.data(), m, n, k);
                }
                // dB += dY^T * A  ([n x m] * [m x k])
                if (nb.needs_grad) {
                  kern::gemm_tn(gy.data(), na.value.values.data(),
                                nb.grad.data(), m, n, k);
                }
              });
}

Var Tape::add_bias(Var x, Var bias) {
  const Tensor& tx = node(x).value;
  const Tensor& tb = node(bias).value;
  require_matrix(tx, "add_bias");
  if (tb.shape.size() != 1 || tb.shape[0] != tx.shape[1]) {
    throw std::invalid_argument("add_bias: bias shape " + shape_str(tb.shape) +
                                " does not match row width of " +
                                shape_str(tx.shape));
  }
  std::size_t m = tx.shape[0], n = tx.shape[1];
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    kern::add(tx.values.data() + i * n, tb.values.data(),
              out.values.data() + i * n, n);
  }
  bool ng = node(x).needs_grad || node(bias).needs_grad;
  int xi = x.idx, bi = bias.idx;
  int self = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, "add_bias", [xi, bi, self, m, n](Tape& t) {
    const auto& gy = t.nodes_[self].grad;
    if (gy.empty()) return;
    Node& nx = t.nodes_[xi];
    Node& nb = t.nodes_[bi];
    if (nx.needs_grad) {
      kern::axpy(1.0, gy.data(), nx.grad.data(), m * n);
    }
    if (nb.needs_grad) {
      for (std::size_t i = 0; i < m; ++i) {
        kern::axpy(1.0, gy.data() + i * n, nb.grad.data(), n);
      }
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (!ta.same_shape(tb)) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(ta.shape) +
                                " vs " + shape_str(tb.shape));
  }
  Tensor out(ta.shape);
  kern::add(ta.values.data(), tb.values.data(), out.values.data(), ta.size());
  bool ng = node(a).needs_grad || node(b).needs_grad;
  int ai = a.idx, bi = b.idx;
  int self = static_cast<int>(nodes_.size());
  std::size_t sz = ta.size();
  return push(std::move(out), ng, "add", [ai, bi, self, sz](Tape& t) {
    const auto& gy = t.nodes_[self].grad;
    if (gy.empty()) return;
    if (t.nodes_[ai].needs_grad) {
      kern::axpy(1.0, gy.data(), t.nodes_[ai].grad.data(), sz);
    }
    if (t.nodes_[bi].needs_grad) {
      kern::axpy(1.0, gy.data(), t.nodes_[bi].grad.data(), sz);
    }
  });
}

Var Tape::relu(Var x) {
  const Tensor& tx = node(x).value;
  Tensor out(tx.shape);
  kern::relu(tx.values.data(), out.values.data(), tx.size());
  bool ng = node(x).needs_grad;
  int xi = x.idx;
  int self = static_cast<int>(nodes_.size());
  std::size_t sz = tx.size();
  return push(std::move(out), ng, "relu", [xi, self, sz](Tape& t) {
    const auto& gy = t.nodes_[self].grad;
    if (gy.empty()) return;
    Node& nx = t.nodes_[xi];
    if (nx.needs_grad) {
      // Subgradient at 0 is 0.
      kern::relu_grad(nx.value.values.data(), gy.data(), nx.grad.data(), sz);
    }
  });
}

Var Tape::mul_scalar(Var x, double c) {
  const Tensor& tx = node(x).value;
  Tensor out = tx;
  kern::scale(c, out.values.data(), out.size());
  bool ng = node(x).needs_grad;
  int xi = x.idx;
  int self = static_cast<int>(nodes_.size());
  std::size_t sz = tx.size();
  return push(std::move(out), ng, "mul_scalar", [xi, self, c, sz](Tape& t) {
    const auto& gy = t.nodes_[self].grad;
    if (gy.empty()) return;
    if (t.nodes_[xi].needs_grad) {
      kern::axpy(c, gy.data(), t.nodes_[xi].grad.data(), sz);
    }
  });
}

namespace {

// Row-wise log-softmax with max subtraction; writes log-probabilities.
void log_softmax_rows(const Tensor& logits, std::vector<double>& out) {
  std::size_t m = logits.shape[0], k = logits.shape[1];
  out.resize(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = logits.values.data() + i * k;
    double mx = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
    double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = row[j] - lse;
  }
}

}  // namespace

Var Tape::softmax_cross_entropy(Var logits, const std::vector<int>& labels,
                                int k) {
  const Tensor& tl = node(logits).value;
  require_matrix(tl, "softmax_cross_entropy");
  if (static_cast<int>(tl.shape[1]) != k) {
    throw std::invalid_argument(
        "softmax_cross_entropy: logits width != num classes");
  }
  if (labels.size() != tl.shape[0]) {
    throw std::invalid_argument(
        "softmax_cross_entropy: labels size does not match batch");
  }
  for (int y : labels) {
    if (y < 0 || y >= k) {
      throw std::domain_error("softmax_cross_entropy: label " +
                              std::to_string(y) + " outside [0, " +
                              std::to_string(k) + ")");
    }
  }
  std::size_t m = tl.shape[0], kk = tl.shape[1];
  auto logp = std::make_shared<std::vector<double>>();
  log_softmax_rows(tl, *logp);
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    out.values[i] = -(*logp)[i * kk + static_cast<std::size_t>(labels[i])];
  }
  bool ng = node(logits).needs_grad;
  int li = logits.idx;
  int self = static_cast<int>(nodes_.size());
  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  return push(std::move(out), ng, "softmax_cross_entropy",
              [li, self, m, kk, logp, labels_copy](Tape& t) {
                const auto& gy = t.nodes_[self].grad;
                if (gy.empty()) return;
                Node& nl = t.nodes_[li];
                if (!nl.needs_grad) return;
                // d loss_i / d logits_i = softmax(logits_i) - onehot(y_i)
                for (std::size_t i = 0; i < m; ++i) {
                  double g = gy[i];
                  for (std::size_t j = 0; j < kk; ++j) {
                    double p = std::exp((*logp)[i * kk + j]);
                    double oh =
                        j == static_cast<std::size_t>((*labels_copy)[i]) ? 1.0
                                                                         : 0.0;
                    nl.grad[i * kk + j] += g * (p - oh);
                  }
                }
              });
}

Var Tape::kl_divergence(Var p_logits, Var q_logits) {
  const Tensor& tp = node(p_logits).value;
  const Tensor& tq = node(q_logits).value;
  require_matrix(tp, "kl_divergence");
  if (!tp.same_shape(tq)) {
    throw std::invalid_argument("kl_divergence: shape mismatch " +
                                shape_str(tp.shape) + " vs " +
                                shape_str(tq.shape));
  }
  std::size_t m = tp.shape[0], k = tp.shape[1];
  auto logp = std::make_shared<std::vector<double>>();
  auto logq = std::make_shared<std::vector<double>>();
  log_softmax_rows(tp, *logp);
  log_softmax_rows(tq, *logq);
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    double kl = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double lp = (*logp)[i * k + j];
      kl += std::exp(lp) * (lp - (*logq)[i * k + j]);
    }
    out.values[i] = kl;
  }
  bool ng = node(p_logits).needs_grad || node(q_logits).needs_grad;
  int pi = p_logits.idx, qi = q_logits.idx;
  int self = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, "kl_divergence",
              [pi, qi, self, m, k, logp, logq](Tape& t) {
                const auto& gy = t.nodes_[self].grad;
                if (gy.empty()) return;
                Node& np = t.nodes_[pi];
                Node& nq = t.nodes_[qi];
                for (std::size_t i = 0; i < m; ++i) {
                  double g = gy[i];
                  if (g == 0.0) continue;
                  double kl = 0.0;
                  for (std::size_t j = 0; j < k; ++j) {
                    double lp = (*logp)[i * k + j];
                    kl += std::exp(lp) * (lp - (*logq)[i * k + j]);
                  }
                  for (std::size_t j = 0; j < k; ++j) {
                    double lp = (*logp)[i * k + j];
                    double lq = (*logq)[i * k + j];
                    double p = std::exp(lp);
                    double q = std::exp(lq);
                    // d KL / d p_logit_j = p_j * ((log p_j - log q_j) - KL)
                    if (np.needs_grad) {
                      np.grad[i * k + j] += g * p * ((lp - lq) - kl);
                    }
                    // d KL / d q_logit_j = q_j - p_j
                    if (nq.needs_grad) {
                      nq.grad[i * k + j] += g * (q - p);
                    }
                  }
                }
              });
}

Var Tape::mean(Var x) {
  const Tensor& tx = node(x).value;
  std::size_t sz = tx.size();
  if (sz == 0) throw std::invalid_argument("mean: empty tensor");
  double s = 0.0;
  for (double v : tx.values) s += v;
  Tensor out({1});
  out.values[0] = s / static_cast<double>(sz);
  bool ng = node(x).needs_grad;
  int xi = x.idx;
  int self = static_cast<int>(nodes_.size());
  return push(std::move(out), ng, "mean", [xi, self, sz](Tape& t) {
    const auto& gy = t.nodes_[self].grad;
    if (gy.empty()) return;
    Node& nx = t.nodes_[xi];
    if (nx.needs_grad) {
      double g = gy[0] / static_cast<double>(sz);
      for (std::size_t i = 0; i < sz; ++i) nx.grad[i] += g;
    }
  });
}

}  // namespace fairtat
