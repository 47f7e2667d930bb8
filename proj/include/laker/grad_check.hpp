#pragma once

#include <functional>

#include "laker/tensor.hpp"

namespace laker {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // elements excluded for subgradient ambiguity
  bool pass = false;
};

// Central finite-difference check of a scalar-valued tensor function against
// reverse-mode gradients. f must be pure: it is re-evaluated on perturbed
// copies of x. Elements where the one-sided derivatives disagree (a kink,
// e.g. relu at exactly 0) are excluded from the comparison.
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double eps = 1e-5, double tol = 1e-4);

}  // namespace laker
