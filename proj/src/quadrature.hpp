// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

namespace paoi::detail {

struct QuadratureResult {
  double value;
  double error;
  int panels;
};

// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]. Panels with the
// largest error estimate are bisected until the total estimate drops below
// min(abs_tol, rel_tol * |value|) or max_panels is reached. Throws
// kNumericalFailure in the latter case.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol, double rel_tol, int max_panels);

}  // namespace paoi::detail
