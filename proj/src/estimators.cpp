// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/estimators.hpp"

#include <boost/math/tools/toms748_solve.hpp>
#include <charconv>
#include <algorithm>
#include <cmath>
#include <limits>

#include "robust_scatter/kernels.hpp"

namespace robust_scatter {

WeightFunction::WeightFunction(std::string id, Fn u, Fn psi, Fn psi_prime, std::vector<double> breakpoints,
                               std::map<std::string, double> params)
    : id_(std::move(id)),
      u_(std::move(u)),
      psi_(std::move(psi)),
      psi_prime_(std::move(psi_prime)),
      breakpoints_(std::move(breakpoints)),
      params_(std::move(params)) {}

double WeightFunction::param(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw InvalidArgument("weight '" + id_ + "' has no parameter '" + name + "'");
  return it->second;
}

namespace {

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  return out;
}

}  // namespace

double WeightFunction::psi_sup() const {
  const double far = psi(1e15);
  if (far > psi(1e14) * (1.0 + 1e-9) && far > 1e6) return std::numeric_limits<double>::infinity();
  double sup = psi(0.0);
  for (const double s : log_grid(1e-8, 1e15, 4000)) sup = std::max(sup, psi(s));
  for (const double b : breakpoints_) sup = std::max(sup, psi(b));
  return sup;
}

void WeightFunction::check_conditions(std::size_t m) const {
  auto grid = log_grid(1e-8, 1e8, 2000);
  grid.insert(grid.begin(), 0.0);
  const double tiny = 1e-12;
  double u_max = 0.0;
  for (const double s : grid) u_max = std::max(u_max, std::abs(u(s)));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double uk = u(grid[k]);
    if (uk < 0.0 || std::isnan(uk)) throw InvalidArgument("weight '" + id_ + "': u is negative");
    if (k == 0) continue;
    const double prev = u(grid[k - 1]);
    if (uk > prev + tiny * std::max(1.0, std::abs(prev)))
      throw InvalidArgument("weight '" + id_ + "': u is not non-increasing");
    if (std::abs(uk - prev) > 0.1 * u_max)
      throw InvalidArgument("weight '" + id_ + "': u appears discontinuous");
    if (psi(grid[k]) + tiny * std::max(1.0, std::abs(psi(grid[k - 1]))) < psi(grid[k - 1]))
      throw InvalidArgument("weight '" + id_ + "': psi is not non-decreasing");
  }
  const double sup = psi_sup();
  if (!(static_cast<double>(m) < sup))
    throw InvalidArgument("weight '" + id_ + "': sup psi must exceed the dimension m");
}

WeightFunction WeightFunction::argument_scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidArgument("argument_scaled: factor must be positive");
  auto bps = breakpoints_;
  for (auto& b : bps) b *= factor;
  Fn u = u_;
  Fn psi = psi_;
  Fn dpsi = psi_prime_;
  return WeightFunction(
      id_ + "/arg*" + std::to_string(factor), [u, factor](double s) { return u(s / factor); },
      [psi, factor](double s) { return factor * psi(s / factor); },
      [dpsi, factor](double s) { return dpsi(s / factor); }, std::move(bps), params_);
}

HuberTuning huber_tuning(double q, std::size_t m) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("huber_tuning: q must lie strictly inside (0, 1)");
  if (m == 0) throw InvalidArgument("huber_tuning: dimension must be positive");
  const double dm = static_cast<double>(m);
  HuberTuning t;
  t.q = q;
  t.k2 = 0.5 * chi2_quantile(q, 2.0 * dm);
  t.beta = chi2_cdf(2.0 * t.k2, 2.0 * dm + 2.0) + t.k2 * (1.0 - q) / dm;
  return t;
}

namespace {

std::string shortest(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace

WeightFunction huber_weight(const HuberTuning& t) {
  const double k2 = t.k2;
  const double inv_beta = 1.0 / t.beta;
  return WeightFunction(
      "huber:" + shortest(t.q), [=](double s) { return s <= k2 ? inv_beta : inv_beta * k2 / s; },
      [=](double s) { return inv_beta * std::min(s, k2); },
      [=](double s) { return s <= k2 ? inv_beta : 0.0; }, {k2},
      {{"q", t.q}, {"k2", k2}, {"beta", t.beta}});
}

WeightFunction huber_weight(double q, std::size_t m) { return huber_weight(huber_tuning(q, m)); }

WeightFunction scm_weight() {
  return WeightFunction("scm", [](double) { return 1.0; }, [](double s) { return s; }, [](double) { return 1.0; });
}

WeightFunction constant_weight(double c) {
  if (!(c > 0.0)) throw InvalidArgument("constant_weight: c must be positive");
  return WeightFunction("const:" + shortest(c), [c](double) { return c; }, [c](double s) { return c * s; },
                        [c](double) { return c; }, {}, {{"c", c}});
}

WeightFunction tyler_weight(std::size_t m) {
  const double dm = static_cast<double>(m);
  return WeightFunction("tyler", [dm](double s) { return s > 0.0 ? dm / s : std::numeric_limits<double>::infinity(); },
                        [dm](double) { return dm; }, [](double) { return 0.0; });
}

namespace {

HermitianMatrix default_init(const SampleSet& samples) {
  double power = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) power += squared_norm(samples[i]);
  power /= static_cast<double>(samples.size() * samples.dim());
  if (!(power > 0.0)) throw InvalidArgument("fixed point: all samples are zero");
  return HermitianMatrix::identity(samples.dim()).scaled(power);
}

// Rank test on the directions z_i / |z_i|, which is insensitive to wildly
// different sample powers.
void require_full_rank(const SampleSet& samples, const char* who) {
  const std::size_t m = samples.dim();
  if (samples.size() <= m)
    throw InvalidArgument(std::string(who) + ": need more samples than the dimension (n > m)");
  // Unit directions, scaled by the largest component first so that tiny
  // samples do not underflow.
  SampleSet unit(samples.size(), m);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto z = samples[i];
    double peak = 0.0;
    for (const cplx& x : z) peak = std::max({peak, std::abs(x.real()), std::abs(x.imag())});
    if (peak == 0.0) continue;
    auto u = unit[i];
    for (std::size_t k = 0; k < m; ++k) u[k] = z[k] / peak;
    const double nrm = std::sqrt(squared_norm(u));
    for (std::size_t k = 0; k < m; ++k) u[k] /= nrm;
  }
  const HermitianMatrix directions(kernels::weighted_scatter_sum(unit, std::vector<double>(samples.size(), 1.0)));
  try {
    const Cholesky chol(directions);
    if (chol.condition_estimate() > 1e14) throw NotPositiveDefinite("ill-conditioned");
  } catch (const NotPositiveDefinite&) {
    throw InvalidArgument(std::string(who) + ": samples do not span the space (rank deficient)");
  }
}

Cholesky factor_iterate(const HermitianMatrix& m, double cap) {
  try {
    Cholesky chol(m);
    const double cond = chol.condition_estimate();
    if (cond > cap) throw SingularMatrix("fixed point: iterate condition number exceeds cap", cond);
    return chol;
  } catch (const NotPositiveDefinite&) {
    throw SingularMatrix("fixed point: iterate lost positive definiteness", std::numeric_limits<double>::infinity());
  }
}

double relative_change(const CMatrix& next, const CMatrix& current) {
  return (next - current).frobenius_norm() / current.frobenius_norm();
}

}  // namespace

ScatterEstimate scm(const SampleSet& samples) {
  if (samples.empty()) throw InvalidArgument("scm: need at least one sample");
  const std::vector<double> ones(samples.size(), 1.0 / static_cast<double>(samples.size()));
  ScatterEstimate out;
  out.matrix = HermitianMatrix(kernels::weighted_scatter_sum(samples, ones));
  out.estimator_id = "scm";
  out.positive_definite = samples.size() >= samples.dim();
  if (out.positive_definite) {
    try {
      Cholesky chol(out.matrix);
    } catch (const NotPositiveDefinite&) {
      out.positive_definite = false;
    }
  }
  return out;
}

namespace {

// Factor c with (1/n) sum psi(s_i / c) = m, or 1 when there is no sign change
// (constant psi, or the root lies beyond 1e+-300).
double scale_root(const std::vector<double>& s, const WeightFunction& w, double m) {
  const auto f = [&](double log_c) {
    const double c = std::exp(log_c);
    double acc = 0.0;
    for (const double x : s) acc += w.psi(x / c);
    return acc / static_cast<double>(s.size()) - m;
  };
  double lo = 0.0;
  double hi = 0.0;
  double flo = f(lo);
  if (flo == 0.0) return 1.0;
  double fhi = flo;
  const double step = flo > 0.0 ? 1.0 : -1.0;
  for (int k = 0; k < 700 && std::signbit(fhi) == std::signbit(flo) && fhi != 0.0; ++k) {
    lo = hi;
    flo = fhi;
    hi += step;
    fhi = f(hi);
  }
  if (fhi == 0.0) return std::exp(hi);
  if (std::signbit(fhi) == std::signbit(flo)) return 1.0;
  std::uintmax_t evals = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, std::min(lo, hi), std::max(lo, hi),
                                                        step > 0.0 ? flo : fhi, step > 0.0 ? fhi : flo,
                                                        boost::math::tools::eps_tolerance<double>(50), evals);
  return std::exp(0.5 * (a + b));
}

}  // namespace

ScatterEstimate m_estimate_fixed_point(const SampleSet& samples, const WeightFunction& w,
                                       const FixedPointOptions& options) {
  require_full_rank(samples, "m_estimate_fixed_point");
  const auto n = static_cast<double>(samples.size());
  HermitianMatrix current = options.init ? *options.init : default_init(samples);
  if (current.dim() != samples.dim()) throw InvalidArgument("m_estimate_fixed_point: init dimension mismatch");

  ScatterEstimate out;
  out.estimator_id = w.id();
  out.sigma = w.id().starts_with("huber") || w.id() == "scm" ? 1.0 : std::numeric_limits<double>::quiet_NaN();

  std::vector<double> weights(samples.size());
  for (int it = 0; it < options.max_iter + 1; ++it) {
    const Cholesky chol = factor_iterate(current, options.condition_cap);
    auto s = kernels::inverse_quad_forms(samples, chol);
    if (options.rescale) {
      const double c = scale_root(s, w, static_cast<double>(samples.dim()));
      if (c != 1.0) {
        current = current.scaled(c);
        for (double& x : s) x /= c;
      }
    }
    for (std::size_t i = 0; i < s.size(); ++i) weights[i] = w.u(s[i]) / n;
    HermitianMatrix next(kernels::weighted_scatter_sum(samples, weights));
    const double change = relative_change(next.mat(), current.mat());
    out.changes.push_back(change);
    // `current` satisfies the estimating equation to `change` exactly.
    if (change < options.tol) {
      out.matrix = std::move(current);
      out.iterations = it;
      out.residual = change;
      return out;
    }
    if (it == options.max_iter) break;
    current = std::move(next);
  }
  throw NonConvergence("m_estimate_fixed_point: no convergence within " + std::to_string(options.max_iter) +
                           " iterations (last relative change " + std::to_string(out.changes.back()) + ")",
                       current, out.changes.back(), options.max_iter);
}

ScatterEstimate huber_estimate(const SampleSet& samples, double q, const FixedPointOptions& options) {
  return m_estimate_fixed_point(samples, huber_weight(q, samples.dim()), options);
}

namespace {

HermitianMatrix normalize(const HermitianMatrix& a, TylerNormalization how) {
  const auto m = static_cast<double>(a.dim());
  if (how == TylerNormalization::Trace) return a.scaled(m / a.trace());
  const Cholesky chol(a);
  double log_det = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) log_det += 2.0 * std::log(chol.factor()(i, i).real());
  return a.scaled(std::exp(-log_det / m));
}

}  // namespace

ScatterEstimate tyler_estimate(const SampleSet& samples, const FixedPointOptions& options,
                               TylerNormalization normalization) {
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (squared_norm(samples[i]) == 0.0) throw InvalidArgument("tyler_estimate: sample " + std::to_string(i) + " is zero");
  require_full_rank(samples, "tyler_estimate");
  const auto n = static_cast<double>(samples.size());
  const auto m = static_cast<double>(samples.dim());
  HermitianMatrix current =
      normalize(options.init ? *options.init : HermitianMatrix::identity(samples.dim()), normalization);

  ScatterEstimate out;
  out.estimator_id = "tyler";
  std::vector<double> weights(samples.size());
  for (int it = 0; it < options.max_iter + 1; ++it) {
    const Cholesky chol = factor_iterate(current, options.condition_cap);
    const auto s = kernels::inverse_quad_forms(samples, chol);
    for (std::size_t i = 0; i < s.size(); ++i) weights[i] = m / (s[i] * n);
    const HermitianMatrix raw(kernels::weighted_scatter_sum(samples, weights));
    HermitianMatrix next = normalize(raw, normalization);
    const double change = relative_change(next.mat(), current.mat());
    out.changes.push_back(change);
    if (change < options.tol) {
      out.residual = relative_change(raw.mat(), current.mat());
      out.matrix = std::move(current);
      out.iterations = it;
      return out;
    }
    if (it == options.max_iter) break;
    current = std::move(next);
  }
  throw NonConvergence("tyler_estimate: no convergence within " + std::to_string(options.max_iter) + " iterations",
                       current, out.changes.back(), options.max_iter);
}

double estimating_equation_residual(const SampleSet& samples, const WeightFunction& w, const HermitianMatrix& m) {
  const Cholesky chol(m);
  const auto s = kernels::inverse_quad_forms(samples, chol);
  std::vector<double> weights(s.size());
  const auto n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < s.size(); ++i) weights[i] = w.u(s[i]) / n;
  const CMatrix rhs = kernels::weighted_scatter_sum(samples, weights);
  return relative_change(rhs, m.mat());
}

HuberUpdateForms huber_update_forms(const SampleSet& samples, const HuberTuning& tuning, const HermitianMatrix& m) {
  const Cholesky chol(m);
  const auto s = kernels::inverse_quad_forms(samples, chol);
  const auto n = static_cast<double>(samples.size());
  std::vector<double> inlier(s.size());
  std::vector<double> outlier(s.size());
  std::vector<double> single(s.size());
  const WeightFunction w = huber_weight(tuning);
  HuberUpdateForms out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool clipped = s[i] <= tuning.k2;
    inlier[i] = clipped ? 1.0 : 0.0;
    outlier[i] = clipped ? 0.0 : 1.0 / s[i];
    single[i] = w.u(s[i]);
    out.clipped += clipped ? 1 : 0;
  }
  const double scale = 1.0 / (n * tuning.beta);
  out.two_sum = kernels::weighted_scatter_sum(samples, inlier) * cplx(scale) +
                kernels::weighted_scatter_sum(samples, outlier) * cplx(scale * tuning.k2);
  out.single_sum = kernels::weighted_scatter_sum(samples, single) * cplx(1.0 / n);
  return out;
}

std::string EstimatorSpec::id() const {
  switch (kind) {
    case EstimatorKind::Scm:
      return "scm";
    case EstimatorKind::Huber:
      return "huber:" + shortest(q);
    case EstimatorKind::Tyler:
      return "tyler";
  }
  return "scm";
}

EstimatorSpec parse_estimator_id(std::string_view id) {
  if (id == "scm") return {EstimatorKind::Scm, 0.0};
  if (id == "tyler") return {EstimatorKind::Tyler, 0.0};
  constexpr std::string_view kHuber = "huber:";
  if (id.starts_with(kHuber)) {
    const auto text = id.substr(kHuber.size());
    double q = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), q);
    if (ec != std::errc() || ptr != text.data() + text.size() || !(q > 0.0 && q < 1.0))
      throw InvalidArgument("invalid Huber parameter in '" + std::string(id) + "' (need 0 < q < 1)");
    return {EstimatorKind::Huber, q};
  }
  throw InvalidArgument("unknown estimator '" + std::string(id) + "' (expected scm, huber:<q> or tyler)");
}

WeightFunction weight_for(const EstimatorSpec& spec, std::size_t m) {
  switch (spec.kind) {
    case EstimatorKind::Scm:
      return scm_weight();
    case EstimatorKind::Huber:
      return huber_weight(spec.q, m);
    case EstimatorKind::Tyler:
      return tyler_weight(m);
  }
  return scm_weight();
}

ScatterEstimate estimate(const EstimatorSpec& spec, const SampleSet& samples, const FixedPointOptions& options) {
  switch (spec.kind) {
    case EstimatorKind::Scm:
      return scm(samples);
    case EstimatorKind::Huber:
      return huber_estimate(samples, spec.q, options);
    case EstimatorKind::Tyler:
      return tyler_estimate(samples, options);
  }
  return scm(samples);
}

}  // namespace robust_scatter
