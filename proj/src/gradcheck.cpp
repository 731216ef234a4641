#include "fairtat/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace fairtat {

namespace {

struct Eval {
  double loss = 0.0;
  std::vector<bool> relu_signs;  // activation pattern across all hidden units
};

Eval eval_loss(const ModelParams& params, const Tensor& input,
               const std::vector<int>& labels) {
  Tape tape;
  Var h = tape.leaf(input);
  Eval e;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Var w = tape.leaf(l.weight);
    Var b = tape.leaf(l.bias);
    Var pre = tape.add_bias(tape.matmul_nt(h, w), b);
    if (i + 1 < params.layers.size()) {
      for (double v : tape.value(pre).values) e.relu_signs.push_back(v > 0.0);
      h = tape.relu(pre);
    } else {
      h = pre;
    }
  }
  Var loss = tape.mean(tape.softmax_cross_entropy(
      h, labels, static_cast<int>(params.dims.num_classes)));
  e.loss = tape.value(loss).values[0];
  if (!std::isfinite(e.loss)) {
    throw std::runtime_error("finite_difference_check: non-finite loss");
  }
  return e;
}

}  // namespace

CheckReport finite_difference_check(const ModelParams& params,
                                    const Tensor& input,
                                    const std::vector<int>& labels, double h,
                                    double tol) {
  if (h <= 0.0) throw std::domain_error("finite_difference_check: h must be > 0");
  if (tol <= 0.0) {
    throw std::domain_error("finite_difference_check: tol must be > 0");
  }

  // Autodiff gradients, params first then input, matching the scan below.
  Tape tape;
  Var xin = tape.leaf(input, true);
  std::vector<Var> pvars;
  Var logits = model_forward(tape, params, xin, true, &pvars);
  Var loss = tape.mean(tape.softmax_cross_entropy(
      logits, labels, static_cast<int>(params.dims.num_classes)));
  tape.backward(loss);

  std::vector<double> ad;
  for (Var pv : pvars) {
    auto g = tape.grad(pv);
    ad.insert(ad.end(), g.begin(), g.end());
  }
  {
    auto g = tape.grad(xin);
    ad.insert(ad.end(), g.begin(), g.end());
  }

  ModelParams p = params;
  Tensor x = input;
  std::vector<std::pair<std::string, double*>> coords;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    auto& l = p.layers[li];
    for (std::size_t j = 0; j < l.weight.size(); ++j) {
      coords.emplace_back(
          "layer" + std::to_string(li) + ".weight[" + std::to_string(j) + "]",
          &l.weight.values[j]);
    }
    for (std::size_t j = 0; j < l.bias.size(); ++j) {
      coords.emplace_back(
          "layer" + std::to_string(li) + ".bias[" + std::to_string(j) + "]",
          &l.bias.values[j]);
    }
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    coords.emplace_back("input[" + std::to_string(j) + "]", &x.values[j]);
  }
  if (coords.size() != ad.size()) {
    throw std::logic_error("finite_difference_check: coordinate count mismatch");
  }

  CheckReport report;
  for (std::size_t c = 0; c < coords.size(); ++c) {
    double* slot = coords[c].second;
    double orig = *slot;
    *slot = orig + h;
    Eval plus = eval_loss(p, x, labels);
    *slot = orig - h;
    Eval minus = eval_loss(p, x, labels);
    *slot = orig;
    if (plus.relu_signs != minus.relu_signs) {
      // The perturbation crosses a ReLU kink; the two-sided difference does
      // not estimate the (sub)gradient here.
      ++report.num_skipped;
      continue;
    }
    double fd = (plus.loss - minus.loss) / (2.0 * h);
    double err = std::abs(ad[c] - fd) /
                 std::max(1.0, std::abs(ad[c]) + std::abs(fd));
    ++report.num_checked;
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_coord = coords[c].first;
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace fairtat
