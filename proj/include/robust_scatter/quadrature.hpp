// SPDX-License-Identifier: Apache-2.0
//
// Adaptive Gauss-Legendre integration on finite intervals.
#pragma once

#include <functional>
#include <span>

namespace robust_scatter::quadrature {

struct Options {
  double rel_tol = 1e-13;
  double abs_tol = 1e-300;
  int max_depth = 40;
};

/// Integral of f over [a, b]; panels are bisected until the 20-point rule on a
/// panel agrees with the sum over its halves.
double integrate(const std::function<double(double)>& f, double a, double b, const Options& options = {});

/// Same, with the interval first split at every breakpoint inside (a, b).
double integrate_split(const std::function<double(double)>& f, double a, double b, std::span<const double> breakpoints,
                       const Options& options = {});

/// Density of Gamma(shape, scale) at x >= 0.
double gamma_density(double x, double shape, double scale);

}  // namespace robust_scatter::quadrature
