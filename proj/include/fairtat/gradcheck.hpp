#pragma once

#include <string>
#include <vector>

#include "fairtat/model.hpp"

namespace fairtat {

struct CheckReport {
  double max_rel_error = 0.0;
  std::string worst_coord;
  std::size_t num_checked = 0;
  std::size_t num_skipped = 0;  // coordinates at ReLU kinks, non-comparable
  bool passed = false;
};

// Central finite differences on the mean cross-entropy loss, over every
// parameter and input coordinate. Coordinates whose +/-h evaluations flip a
// ReLU activation pattern are reported as skipped rather than failed.
CheckReport finite_difference_check(const ModelParams& params,
                                    const Tensor& input,
                                    const std::vector<int>& labels, double h,
                                    double tol);

}  // namespace fairtat
