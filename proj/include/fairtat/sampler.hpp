#pragma once

#include <vector>

#include "fairtat/rng.hpp"

namespace fairtat {

enum class PriorKind { cfps_prior, uniform };

/// Multinomial target-class prior. Immutable once built.
struct TargetDistribution {
  std::vector<double> probs;
  PriorKind kind = PriorKind::uniform;
  std::vector<double> source_cfps;  // snapshot the prior was built from

  int num_classes() const { return static_cast<int>(probs.size()); }
};

// kind=cfps_prior: probs proportional to the C_FPS vector (uniform when the
// vector is all zero). kind=uniform: 1/K each. Negative entries are a
// domain error.
TargetDistribution build_prior(const std::vector<double>& cfps_vector,
                               PriorKind kind);

// One target per label, never equal to the ground-truth class. Default path
// zeroes the ground-truth probability and renormalizes (the closed form of
// the resample loop). Deterministic given the rng state. Throws
// std::domain_error when the ground-truth class holds all the mass.
std::vector<int> sample_targets(const std::vector<int>& labels,
                                const TargetDistribution& dist, Rng& rng);

// Literal rejection-sampling variant of the resample loop; statistically
// identical to sample_targets, kept for the equivalence property test.
std::vector<int> sample_targets_rejection(const std::vector<int>& labels,
                                          const TargetDistribution& dist,
                                          Rng& rng);

}  // namespace fairtat
