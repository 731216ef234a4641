#include "fairtat/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fairtat/kernels.hpp"

namespace fairtat {

void AttackConfig::validate() const {
  if (epsilon < 0.0) throw std::domain_error("AttackConfig: epsilon < 0");
  if (step_size <= 0.0) {
    throw std::domain_error("AttackConfig: step_size must be > 0");
  }
  if (num_steps < 1) {
    throw std::domain_error("AttackConfig: num_steps must be >= 1");
  }
  if (clamp_lo >= clamp_hi) {
    throw std::domain_error("AttackConfig: empty clamp range");
  }
  if (epsilon > clamp_hi - clamp_lo) {
    throw std::domain_error(
        "AttackConfig: epsilon exceeds the clamp range width");
  }
}

Tensor project_linf(const Tensor& candidate, const Tensor& center, double eps,
                    double clamp_lo, double clamp_hi) {
  if (!candidate.same_shape(center)) {
    throw std::invalid_argument("project_linf: shape mismatch");
  }
  Tensor out = candidate;
  std::vector<double> eps_buf(out.size(), eps);
  kern::project_box(center.values.data(), eps_buf.data(), clamp_lo, clamp_hi,
                    out.values.data(), out.size());
  return out;
}

namespace {

// Shared PGD engine. direction=+1 ascends on the label loss (untargeted),
// direction=-1 descends (targeted). FGSM is the steps=1 special case of the
// same code path, so their outputs agree bitwise by construction.
AdvBatch run_pgd(const char* op, const ModelParams& params, const Tensor& x,
                 const std::vector<int>& labels, const AttackConfig& config,
                 double direction, Rng* rng,
                 const std::vector<double>* per_sample_eps) {
  config.validate();
  if (x.shape.size() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected [n x d] input");
  }
  std::size_t n = x.shape[0], d = x.shape[1];
  if (labels.size() != n) {
    throw std::invalid_argument(std::string(op) + ": label count mismatch");
  }
  int k = static_cast<int>(params.dims.num_classes);
  if (per_sample_eps && per_sample_eps->size() != n) {
    throw std::invalid_argument(std::string(op) +
                                ": per-sample epsilon count mismatch");
  }

  // Per-element margin buffer (constant per sample row).
  std::vector<double> eps(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double e = per_sample_eps ? (*per_sample_eps)[i] : config.epsilon;
    if (e < 0.0 || e > config.clamp_hi - config.clamp_lo) {
      throw std::domain_error(std::string(op) + ": per-sample epsilon " +
                              std::to_string(e) + " out of range");
    }
    std::fill(eps.begin() + i * d, eps.begin() + (i + 1) * d, e);
  }

  Tensor cur = x;
  if (config.random_start && rng) {
    for (std::size_t j = 0; j < cur.size(); ++j) {
      if (eps[j] > 0.0) cur.values[j] += rng->uniform(-eps[j], eps[j]);
    }
    kern::project_box(x.values.data(), eps.data(), config.clamp_lo,
                      config.clamp_hi, cur.values.data(), cur.size());
  }

  for (std::size_t step = 0; step < config.num_steps; ++step) {
    std::vector<double> grad;
    try {
      Tape tape;
      Var xin = tape.leaf(cur, true);
      Var logits = model_forward(tape, params, xin);
      Var loss = tape.mean(tape.softmax_cross_entropy(logits, labels, k));
      tape.backward(loss);
      auto g = tape.grad(xin);
      grad.assign(g.begin(), g.end());
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(op) + ": step " +
                               std::to_string(step) + ": " + e.what());
    }
    kern::sign_step(cur.values.data(), grad.data(),
                    direction * config.step_size, cur.values.data(),
                    cur.size());
    kern::clamp(config.clamp_lo, config.clamp_hi, cur.values.data(),
                cur.size());
    kern::project_box(x.values.data(), eps.data(), config.clamp_lo,
                      config.clamp_hi, cur.values.data(), cur.size());
  }

  AdvBatch out;
  out.original = x;
  out.perturbed = std::move(cur);
  out.labels = labels;
  return out;
}

}  // namespace

AdvBatch fgsm(const ModelParams& params, const Tensor& x,
              const std::vector<int>& y, const AttackConfig& config) {
  AttackConfig c = config;
  c.num_steps = 1;
  c.step_size = std::max(config.epsilon,
                         std::numeric_limits<double>::min());  // validate()>0
  c.random_start = false;
  return run_pgd("fgsm", params, x, y, c, +1.0, nullptr, nullptr);
}

AdvBatch pgd_untargeted(const ModelParams& params, const Tensor& x,
                        const std::vector<int>& y, const AttackConfig& config,
                        Rng* rng) {
  return run_pgd("pgd_untargeted", params, x, y, config, +1.0, rng, nullptr);
}

AdvBatch pgd_targeted(const ModelParams& params, const Tensor& x,
                      const std::vector<int>& y_t, const AttackConfig& config,
                      Rng* rng, const std::vector<double>* per_sample_eps) {
  double direction = config.eq4_literal ? +1.0 : -1.0;
  AdvBatch out = run_pgd("pgd_targeted", params, x, y_t, config, direction,
                         rng, per_sample_eps);
  out.targets = y_t;
  return out;
}

}  // namespace fairtat
