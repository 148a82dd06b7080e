// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "robust_scatter/error.hpp"

namespace robust_scatter::quadrature {

namespace {

constexpr int kPoints = 20;

struct Rule {
  std::array<double, kPoints> nodes{};
  std::array<double, kPoints> weights{};
};

// Legendre nodes by Newton iteration from the Chebyshev-like initial guess.
Rule make_rule() {
  Rule rule;
  for (int i = 0; i < kPoints; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (kPoints + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= kPoints; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = kPoints * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const Rule& rule() {
  static const Rule r = make_rule();
  return r;
}

double panel(const std::function<double(double)>& f, double a, double b) {
  const Rule& r = rule();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (int i = 0; i < kPoints; ++i) acc += r.weights[i] * f(mid + half * r.nodes[i]);
  return acc * half;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = panel(f, a, mid);
  const double right = panel(f, mid, b);
  const double halves = left + right;
  if (depth <= 0 || std::abs(halves - whole) <= tol || mid <= a || mid >= b) return halves;
  return adapt(f, a, mid, left, tol, depth - 1) + adapt(f, mid, b, right, tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, const Options& options) {
  if (!(b > a)) {
    if (a == b) return 0.0;
    throw InvalidArgument("integrate: need a <= b");
  }
  const double whole = panel(f, a, b);
  const double tol = std::max(options.abs_tol, options.rel_tol * std::abs(whole));
  return adapt(f, a, b, whole, tol, options.max_depth);
}

double integrate_split(const std::function<double(double)>& f, double a, double b, std::span<const double> breakpoints,
                       const Options& options) {
  std::vector<double> edges{a};
  std::vector<double> inner(breakpoints.begin(), breakpoints.end());
  std::sort(inner.begin(), inner.end());
  for (const double x : inner)
    if (x > edges.back() && x < b) edges.push_back(x);
  edges.push_back(b);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) total += integrate(f, edges[k], edges[k + 1], options);
  return total;
}

double gamma_density(double x, double shape, double scale) {
  if (x < 0.0) return 0.0;
  if (x == 0.0) return shape == 1.0 ? 1.0 / scale : (shape < 1.0 ? INFINITY : 0.0);
  return std::exp((shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale));
}

}  // namespace robust_scatter::quadrature
