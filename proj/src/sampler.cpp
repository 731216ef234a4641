#include "fairtat/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fairtat {

TargetDistribution build_prior(const std::vector<double>& cfps_vector,
                               PriorKind kind) {
  if (cfps_vector.size() < 2) {
    throw std::domain_error("build_prior: need at least 2 classes");
  }
  for (double v : cfps_vector) {
    if (v < 0.0) throw std::domain_error("build_prior: negative entry");
  }
  TargetDistribution dist;
  dist.kind = kind;
  dist.source_cfps = cfps_vector;
  std::size_t k = cfps_vector.size();
  if (kind == PriorKind::uniform) {
    dist.probs.assign(k, 1.0 / static_cast<double>(k));
    return dist;
  }
  double total = std::accumulate(cfps_vector.begin(), cfps_vector.end(), 0.0);
  if (total <= 0.0) {
    dist.probs.assign(k, 1.0 / static_cast<double>(k));
  } else {
    dist.probs.resize(k);
    for (std::size_t i = 0; i < k; ++i) dist.probs[i] = cfps_vector[i] / total;
  }
  return dist;
}

namespace {

void check_dist(const TargetDistribution& dist) {
  if (dist.probs.size() < 2) {
    throw std::domain_error("sample_targets: need at least 2 classes");
  }
  double sum = std::accumulate(dist.probs.begin(), dist.probs.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::domain_error("sample_targets: prior does not sum to 1");
  }
}

// Index of the first positive-probability class != excluded, or -1.
int sole_candidate(const TargetDistribution& dist, int excluded) {
  int found = -1;
  for (int c = 0; c < dist.num_classes(); ++c) {
    if (c == excluded || dist.probs[c] <= 0.0) continue;
    if (found >= 0) return -2;  // more than one
    found = c;
  }
  return found;
}

}  // namespace

std::vector<int> sample_targets(const std::vector<int>& labels,
                                const TargetDistribution& dist, Rng& rng) {
  check_dist(dist);
  int k = dist.num_classes();
  std::vector<int> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i];
    if (y < 0 || y >= k) {
      throw std::domain_error("sample_targets: label outside [0, K)");
    }
    double rest = 1.0 - dist.probs[y];
    if (rest <= 0.0) {
      throw std::domain_error(
          "sample_targets: ground-truth class carries all probability mass, "
          "no valid target exists");
    }
    int only = sole_candidate(dist, y);
    if (only >= 0) {
      // Single valid target (e.g. K=2): no randomness to consume.
      targets[i] = only;
      continue;
    }
    double u = rng.uniform(0.0, rest);
    double acc = 0.0;
    int chosen = -1;
    for (int c = 0; c < k; ++c) {
      if (c == y) continue;
      acc += dist.probs[c];
      if (u < acc) {
        chosen = c;
        break;
      }
    }
    if (chosen < 0) {
      // Guard against accumulated rounding at u ~ rest.
      for (int c = k - 1; c >= 0; --c) {
        if (c != y && dist.probs[c] > 0.0) {
          chosen = c;
          break;
        }
      }
    }
    targets[i] = chosen;
  }
  return targets;
}

std::vector<int> sample_targets_rejection(const std::vector<int>& labels,
                                          const TargetDistribution& dist,
                                          Rng& rng) {
  check_dist(dist);
  int k = dist.num_classes();
  // CDF once; inverse-transform draws inside the rejection loop.
  std::vector<double> cdf(dist.probs.size());
  std::partial_sum(dist.probs.begin(), dist.probs.end(), cdf.begin());
  std::vector<int> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i];
    if (y < 0 || y >= k) {
      throw std::domain_error("sample_targets_rejection: label outside [0, K)");
    }
    if (1.0 - dist.probs[y] <= 0.0) {
      throw std::domain_error(
          "sample_targets_rejection: no valid target exists");
    }
    int drawn = y;
    while (drawn == y) {
      double u = rng.uniform(0.0, 1.0);
      drawn = static_cast<int>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      if (drawn >= k) drawn = k - 1;
      if (dist.probs[drawn] <= 0.0) drawn = y;  // zero-mass class, redraw
    }
    targets[i] = drawn;
  }
  return targets;
}

}  // namespace fairtat
