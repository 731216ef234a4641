#pragma once

#include <optional>
#include <vector>

#include "fairtat/model.hpp"
#include "fairtat/rng.hpp"
#include "fairtat/tensor.hpp"

namespace fairtat {

struct AttackConfig {
  double epsilon = 8.0 / 255.0;
  double step_size = 2.0 / 255.0;
  std::size_t num_steps = 10;
  bool random_start = false;
  double clamp_lo = 0.0;
  double clamp_hi = 1.0;
  // Reproduces the paper's printed targeted update (ascent on the target
  // loss) instead of the algorithmic descent form. Comparison only.
  bool eq4_literal = false;

  void validate() const;
};

struct AdvBatch {
  Tensor original;
  Tensor perturbed;
  std::vector<int> labels;
  std::optional<std::vector<int>> targets;
};

// result = clamp(center + clip(candidate - center, -eps, +eps), lo, hi).
// Total and idempotent.
Tensor project_linf(const Tensor& candidate, const Tensor& center, double eps,
                    double clamp_lo, double clamp_hi);

// x' = clamp(x + eps * sign(grad_x L(f(x), y))). Single step, no random
// start: identical arithmetic to pgd_untargeted with num_steps=1,
// step_size=eps.
AdvBatch fgsm(const ModelParams& params, const Tensor& x,
              const std::vector<int>& y, const AttackConfig& config);

// Iterated sign-gradient ascent on the true-label loss with L-inf projection
// after every step.
AdvBatch pgd_untargeted(const ModelParams& params, const Tensor& x,
                        const std::vector<int>& y, const AttackConfig& config,
                        Rng* rng = nullptr);

// Sign-gradient descent on the target-label loss: drives inputs toward the
// target class. `per_sample_eps`, when given, overrides config.epsilon with
// one margin per sample. Callers guarantee y_t[i] != y[i].
AdvBatch pgd_targeted(const ModelParams& params, const Tensor& x,
                      const std::vector<int>& y_t, const AttackConfig& config,
                      Rng* rng = nullptr,
                      const std::vector<double>* per_sample_eps = nullptr);

}  // namespace fairtat
