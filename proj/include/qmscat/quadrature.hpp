#pragma once

#include <functional>

namespace qmscat {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
};

/// Adaptive Gauss(7)-Kronrod(15) integration on [a, b]. Subdivides the
/// worst interval until the accumulated error estimate meets
/// max(abs_tol, rel_tol * |integral|). Throws on non-convergence.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double rel_tol = 1e-9,
                           double abs_tol = 0.0, int max_segments = 4000);

}  // namespace qmscat
