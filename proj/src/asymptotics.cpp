// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/asymptotics.hpp"

#include <cmath>
#include <limits>

#include "robust_scatter/quadrature.hpp"

namespace robust_scatter {

namespace {

constexpr double kTailProbability = 1e-12;

std::vector<double> draw_radii(const RadialModel& model, double shape, double scale, std::size_t n,
                               std::uint64_t stream) {
  RngStream rng(RadialLaw::kMonteCarloSeed, stream);
  std::vector<double> out(n);
  for (auto& x : out) {
    const double tau = model.draw_texture(rng);
    x = tau * gamma_sampler(shape, scale, rng);
  }
  return out;
}

}  // namespace

RadialLaw RadialLaw::complex(const RadialModel& model, std::size_t m, bool force_monte_carlo, std::size_t draws) {
  if (m == 0) throw InvalidArgument("RadialLaw: dimension must be positive");
  RadialLaw law;
  law.m_ = m;
  law.real_ = false;
  law.model_id_ = robust_scatter::model_id(model);
  law.shape_ = static_cast<double>(m);
  law.scale_ = 1.0;
  if (model.kind != ModelKind::ComplexGaussian || force_monte_carlo)
    law.draws_ = draw_radii(model, law.shape_, law.scale_, draws, 1);
  return law;
}

RadialLaw RadialLaw::real(const RadialModel& model, std::size_t m, bool force_monte_carlo, std::size_t draws) {
  if (m == 0) throw InvalidArgument("RadialLaw: dimension must be positive");
  RadialLaw law;
  law.m_ = m;
  law.real_ = true;
  law.model_id_ = robust_scatter::model_id(model);
  law.shape_ = 0.5 * static_cast<double>(m);
  law.scale_ = 2.0;
  if (model.kind != ModelKind::ComplexGaussian || force_monte_carlo)
    law.draws_ = draw_radii(model, law.shape_, law.scale_, draws, 2);
  return law;
}

Expectation RadialLaw::expect(const std::function<double(double)>& g, std::span<const double> kinks) const {
  if (!draws_.empty()) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const double x : draws_) {
      const double v = g(x);
      sum += v;
      sum_sq += v * v;
    }
    const auto n = static_cast<double>(draws_.size());
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
  }
  const double upper = 0.5 * scale_ * chi2_quantile(1.0 - kTailProbability, 2.0 * shape_);
  const auto integrand = [&](double x) { return g(x) * quadrature::gamma_density(x, shape_, scale_); };
  const double body = quadrature::integrate_split(integrand, 0.0, upper, kinks);
  const double tail = quadrature::integrate_split(integrand, upper, 4.0 * upper, kinks);
  return {body + tail, 0.0};
}

namespace {

std::vector<double> scaled_kinks(const WeightFunction& w, double sigma) {
  std::vector<double> out;
  for (const double b : w.breakpoints()) out.push_back(b / sigma);
  return out;
}

Expectation expect_psi(const WeightFunction& w, const RadialLaw& law, double sigma) {
  const auto kinks = scaled_kinks(w, sigma);
  return law.expect([&](double x) { return w.psi(sigma * x); }, kinks);
}

}  // namespace

double solve_sigma(const WeightFunction& w, const RadialLaw& law) {
  const auto m = static_cast<double>(law.dim());
  if (w.psi(1e-8) == w.psi(1e8)) return 1.0;
  double lo = 1e-6;
  double hi = 1e6;
  // Very impulsive laws put the root far outside the default bracket; widen it
  // geometrically before giving up.
  for (int widen = 0; widen < 49 && !(expect_psi(w, law, lo).value - m < 0.0); ++widen) {
    hi = lo;
    lo *= 1e-6;
  }
  for (int widen = 0; widen < 49 && !(expect_psi(w, law, hi).value - m > 0.0); ++widen) {
    lo = hi;
    hi *= 1e6;
  }
  if (!(expect_psi(w, law, lo).value - m < 0.0 && expect_psi(w, law, hi).value - m > 0.0))
    throw NumericalError("solve_sigma: E[psi(sigma |t|^2)] - m has no sign change for '" + w.id() + "'");
  for (int it = 0; it < 200 && hi / lo - 1.0 > 1e-15; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (expect_psi(w, law, mid).value - m < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double sigma = std::sqrt(lo * hi);
  const double residual = std::abs(expect_psi(w, law, sigma).value - m);
  const double tol = law.quadrature() ? 1e-8 : 1e-3;
  if (residual > tol * std::max(1.0, m))
    throw NumericalError("solve_sigma: residual " + std::to_string(residual) + " above tolerance for '" + w.id() + "'");
  return sigma;
}

namespace {

struct Moments {
  double sigma;
  Expectation psi_sq;
  Expectation s_dpsi;
};

Moments moments(const WeightFunction& w, const RadialLaw& law) {
  const double sigma = solve_sigma(w, law);
  const auto kinks = scaled_kinks(w, sigma);
  const auto psi_sq = law.expect(
      [&](double x) {
        const double p = w.psi(sigma * x);
        return p * p;
      },
      kinks);
  const auto s_dpsi = law.expect([&](double x) { return sigma * x * w.psi_prime(sigma * x); }, kinks);
  return {sigma, psi_sq, s_dpsi};
}

AsymptoticVariance base(const WeightFunction& w, const RadialLaw& law, const Moments& mo, double a1_denom) {
  const auto m = static_cast<double>(law.dim());
  AsymptoticVariance av;
  av.sigma = mo.sigma;
  av.a1 = mo.psi_sq.value / a1_denom;
  av.a2 = mo.s_dpsi.value / m;
  av.a1_stderr = mo.psi_sq.std_error / a1_denom;
  av.a2_stderr = mo.s_dpsi.std_error / m;
  av.m = law.dim();
  av.estimator_id = w.id();
  av.model_id = law.model_id();
  av.real = law.is_real();
  av.monte_carlo = !law.quadrature();
  return av;
}

}  // namespace

AsymptoticVariance complex_sigma12(const WeightFunction& w, const RadialLaw& law) {
  if (law.is_real()) throw InvalidArgument("complex_sigma12: radial law is real");
  const auto m = static_cast<double>(law.dim());
  AsymptoticVariance av = base(w, law, moments(w, law), m * (m + 1.0));
  const double a1 = av.a1;
  const double a2 = av.a2;
  av.sigma1 = a1 * (m + 1.0) * (m + 1.0) / ((a2 + m) * (a2 + m));
  if (a2 == 0.0) {
    av.sigma2 = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double g = 2.0 * a2 + 2.0 * m;
    av.sigma2 = ((a1 - 1.0) - 2.0 * a1 * (a2 - 1.0) / (g * g) * (2.0 * m + (2.0 * m + 4.0) * a2)) / (a2 * a2);
  }
  return av;
}

AsymptoticVariance complex_sigma12(const WeightFunction& w, std::size_t m, const RadialModel& model) {
  return complex_sigma12(w, RadialLaw::complex(model, m));
}

AsymptoticVariance real_sigma12(const WeightFunction& w, const RadialLaw& law) {
  if (!law.is_real()) throw InvalidArgument("real_sigma12: radial law is complex");
  const auto m = static_cast<double>(law.dim());
  AsymptoticVariance av = base(w, law, moments(w, law), m * (m + 2.0));
  const double a1 = av.a1;
  const double a2 = av.a2;
  const double g = 2.0 * a2 + m;
  av.sigma1 = a1 * (m + 2.0) * (m + 2.0) / (g * g);
  if (a2 == 0.0)
    av.sigma2 = std::numeric_limits<double>::quiet_NaN();
  else
    av.sigma2 = ((a1 - 1.0) - 2.0 * a1 * (a2 - 1.0) / (g * g) * (m + (m + 4.0) * a2)) / (a2 * a2);
  return av;
}

AsymptoticVariance real_sigma12(const WeightFunction& w, std::size_t m, const RadialModel& model) {
  return real_sigma12(w, RadialLaw::real(model, m));
}

namespace {

CMatrix transpose_kron(const HermitianMatrix& m) { return kron(m.mat().transpose(), m.mat()); }

CMatrix column(const CVector& v) { return CMatrix(v.size(), 1, v); }

}  // namespace

CovariancePair theorem1_covariance(const HermitianMatrix& m, double sigma1, double sigma2) {
  if (!std::isfinite(sigma1) || !std::isfinite(sigma2))
    throw InvalidArgument("theorem1_covariance: sigma1 and sigma2 must be finite");
  const std::size_t d = m.dim();
  const CommutationMatrix k(d);
  const CMatrix km = transpose_kron(m);
  const CVector v = vec(m.mat());
  CVector v_conj(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) v_conj[i] = std::conj(v[i]);
  CovariancePair out;
  out.sigma = km * cplx(sigma1) + outer(v, v) * cplx(sigma2);
  out.omega = k.right_multiply(km) * cplx(sigma1) + outer(v, v_conj) * cplx(sigma2);
  const double defect = pseudo_covariance_defect(out);
  if (defect > 1e-12) throw NumericalError("theorem1_covariance: Omega != Sigma K (defect " + std::to_string(defect) + ")");
  return out;
}

CovariancePair theorem1_covariance(const HermitianMatrix& m, const AsymptoticVariance& av) {
  if (av.m != 0 && av.m != m.dim()) throw InvalidArgument("theorem1_covariance: dimension mismatch");
  return theorem1_covariance(m, av.sigma1, av.sigma2);
}

CovariancePair wishart_covariance(const HermitianMatrix& lambda) { return theorem1_covariance(lambda, 1.0, 0.0); }

double pseudo_covariance_defect(const CovariancePair& pair) {
  const std::size_t n = pair.sigma.rows();
  const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (d * d != n) throw InvalidArgument("pseudo_covariance_defect: size is not a square");
  const CommutationMatrix k(d);
  const double scale = pair.sigma.frobenius_norm();
  const double diff = (pair.omega - k.right_multiply(pair.sigma)).frobenius_norm();
  return scale > 0.0 ? diff / scale : diff;
}

CovariancePair propagate_covariance(const CMatrix& jacobian, const CovariancePair& pair) {
  return {jacobian * pair.sigma * jacobian.adjoint(), jacobian * pair.omega * jacobian.transpose()};
}

CMatrix project_out_scale(const CMatrix& jacobian, const HermitianMatrix& m) {
  const CVector v = vec(m.mat());
  const double nv = squared_norm(v);
  const CMatrix jv = jacobian * column(v);
  return jacobian - jv * column(v).adjoint() * cplx(1.0 / nv);
}

double homogeneity_defect(const CMatrix& jacobian, const HermitianMatrix& m) {
  const CVector v = vec(m.mat());
  const double scale = jacobian.frobenius_norm() * std::sqrt(squared_norm(v));
  if (scale == 0.0) return 0.0;
  const CVector jv = jacobian * std::span<const cplx>(v);
  double worst = 0.0;
  for (const auto& x : jv) worst = std::max(worst, std::abs(x));
  return worst / scale;
}

CovariancePair theorem2_variance(const CMatrix& jacobian, const HermitianMatrix& m, double nu1,
                                 HomogeneityCheck check) {
  if (jacobian.cols() != m.dim() * m.dim()) throw InvalidArgument("theorem2_variance: Jacobian must have m^2 columns");
  CMatrix j = jacobian;
  if (check == HomogeneityCheck::Project) {
    j = project_out_scale(jacobian, m);
  } else {
    const double defect = homogeneity_defect(jacobian, m);
    if (defect > 1e-6)
      throw InvalidArgument("theorem2_variance: functional is not degree-0 (|J vec(M)| relative " +
                            std::to_string(defect) + ")");
  }
  const CommutationMatrix k(m.dim());
  const CMatrix km = transpose_kron(m);
  return {j * km * j.adjoint() * cplx(nu1), j * k.right_multiply(km) * j.transpose() * cplx(nu1)};
}

CMatrix numeric_jacobian_H(const MatrixFunctional& h, const HermitianMatrix& m, double step) {
  const std::size_t d = m.dim();
  const double hstep = step > 0.0 ? step : 1e-5 * m.frobenius_norm();
  const CVector h0 = h(m);
  const std::size_t r = h0.size();
  CMatrix jac(r, d * d);

  const auto central = [&](const CMatrix& direction) {
    const CVector plus = h(HermitianMatrix(m.mat() + direction * cplx(hstep)));
    const CVector minus = h(HermitianMatrix(m.mat() - direction * cplx(hstep)));
    CVector out(r);
    for (std::size_t k = 0; k < r; ++k) out[k] = (plus[k] - minus[k]) / (2.0 * hstep);
    return out;
  };

  for (std::size_t i = 0; i < d; ++i) {
    CMatrix e(d, d);
    e(i, i) = 1.0;
    const CVector di = central(e);
    for (std::size_t k = 0; k < r; ++k) jac(k, i + i * d) = di[k];
    for (std::size_t j = i + 1; j < d; ++j) {
      CMatrix ex(d, d);
      ex(i, j) = 1.0;
      ex(j, i) = 1.0;
      CMatrix ey(d, d);
      ey(i, j) = cplx(0.0, 1.0);
      ey(j, i) = cplx(0.0, -1.0);
      const CVector dx = central(ex);
      const CVector dy = central(ey);
      const cplx iu(0.0, 1.0);
      for (std::size_t k = 0; k < r; ++k) {
        jac(k, i + j * d) = 0.5 * (dx[k] - iu * dy[k]);
        jac(k, j + i * d) = 0.5 * (dx[k] + iu * dy[k]);
      }
    }
  }
  return jac;
}

}  // namespace robust_scatter
