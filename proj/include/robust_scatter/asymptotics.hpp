// SPDX-License-Identifier: Apache-2.0
//
// Asymptotic quantities of M-estimators under elliptical data: the consistency
// scale sigma, the coefficients (sigma1, sigma2) of the limiting covariance,
// the covariance/pseudo-covariance pair (Sigma, Omega), and the variance of
// scale-invariant functionals of the estimate.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "robust_scatter/distributions.hpp"
#include "robust_scatter/estimators.hpp"
#include "robust_scatter/linalg.hpp"

namespace robust_scatter {

/// Expectation with its Monte-Carlo standard error (0 for quadrature).
struct Expectation {
  double value = 0.0;
  double std_error = 0.0;
};

/// Law of the squared radius |t|^2 of a standardized elliptical vector
/// (scatter = identity). Gaussian laws are Gamma and use quadrature; other
/// laws are represented by a fixed-seed Monte-Carlo sample.
class RadialLaw {
 public:
  static constexpr std::size_t kMonteCarloDraws = 1'000'000;
  static constexpr std::uint64_t kMonteCarloSeed = 0x5eed0f1a;

  /// Complex t in C^m. Gaussian: |t|^2 ~ Gamma(m, 1).
  static RadialLaw complex(const RadialModel& model, std::size_t m, bool force_monte_carlo = false,
                           std::size_t draws = kMonteCarloDraws);
  /// Real t in R^m. Gaussian: |t|^2 ~ chi-square with m degrees of freedom.
  static RadialLaw real(const RadialModel& model, std::size_t m, bool force_monte_carlo = false,
                        std::size_t draws = kMonteCarloDraws);

  bool quadrature() const noexcept { return draws_.empty(); }
  std::size_t dim() const noexcept { return m_; }
  bool is_real() const noexcept { return real_; }
  const std::string& model_id() const noexcept { return model_id_; }

  /// E[g(|t|^2)]; g may have kinks at the given points.
  Expectation expect(const std::function<double(double)>& g, std::span<const double> kinks = {}) const;

 private:
  RadialLaw() = default;

  std::size_t m_ = 0;
  bool real_ = false;
  std::string model_id_;
  double shape_ = 0.0;
  double scale_ = 0.0;
  std::vector<double> draws_;
};

/// Root of E[psi(sigma |t|^2)] = m by geometric bisection on [1e-6, 1e6],
/// widened by factors of 1e6 (up to 1e-300 and 1e300) when the root lies outside.
/// A weight with constant psi (Tyler's) has no unique scale; 1 is returned.
double solve_sigma(const WeightFunction& w, const RadialLaw& law);

struct AsymptoticVariance {
  double sigma = 1.0;
  double sigma1 = 1.0;
  double sigma2 = 0.0;  // NaN when a2 = 0
  double a1 = 1.0;
  double a2 = 1.0;
  double a1_stderr = 0.0;
  double a2_stderr = 0.0;
  std::size_t m = 0;
  std::string estimator_id;
  std::string model_id;
  bool real = false;
  bool monte_carlo = false;
};

/// sigma1 = a1 (m+1)^2 / (a2+m)^2 and
/// sigma2 = a2^-2 [(a1-1) - 2 a1 (a2-1) (2m + (2m+4) a2) / (2a2+2m)^2].
AsymptoticVariance complex_sigma12(const WeightFunction& w, const RadialLaw& law);
AsymptoticVariance complex_sigma12(const WeightFunction& w, std::size_t m, const RadialModel& model);

/// sigma1 = a1 (m+2)^2 / (2a2+m)^2 and
/// sigma2 = a2^-2 [(a1-1) - 2 a1 (a2-1) (m + (m+4) a2) / (2a2+m)^2].
AsymptoticVariance real_sigma12(const WeightFunction& w, const RadialLaw& law);
AsymptoticVariance real_sigma12(const WeightFunction& w, std::size_t m, const RadialModel& model);

/// Limiting covariance Sigma and pseudo-covariance Omega of sqrt(N) vec(M_hat - M).
struct CovariancePair {
  CMatrix sigma;
  CMatrix omega;
};

/// Sigma = s1 (M^T kron M) + s2 vec(M) vec(M)^H,
/// Omega = s1 (M^T kron M) K + s2 vec(M) vec(M)^T.
CovariancePair theorem1_covariance(const HermitianMatrix& m, double sigma1, double sigma2);
CovariancePair theorem1_covariance(const HermitianMatrix& m, const AsymptoticVariance& av);

/// (sigma1, sigma2) = (1, 0).
CovariancePair wishart_covariance(const HermitianMatrix& lambda);

/// ||Omega - Sigma K||_F / ||Sigma||_F.
double pseudo_covariance_defect(const CovariancePair& pair);

/// Sigma_H = J Sigma J^H, Omega_H = J Omega J^T.
CovariancePair propagate_covariance(const CMatrix& jacobian, const CovariancePair& pair);

/// J (I - vec(M) vec(M)^H / ||vec M||^2): removes the scale direction.
CMatrix project_out_scale(const CMatrix& jacobian, const HermitianMatrix& m);

enum class HomogeneityCheck { Require, Project };

/// Sigma_H = nu1 J (M^T kron M) J^H, Omega_H = nu1 J (M^T kron M) K J^T for a
/// degree-0 functional with Jacobian J. Require: throws when J vec(M) is not
/// negligible. Project: applies project_out_scale first.
CovariancePair theorem2_variance(const CMatrix& jacobian, const HermitianMatrix& m, double nu1,
                                 HomogeneityCheck check = HomogeneityCheck::Require);

/// |J vec(M)| relative to ||J||_F ||vec M||, maximized over rows.
double homogeneity_defect(const CMatrix& jacobian, const HermitianMatrix& m);

using MatrixFunctional = std::function<CVector(const HermitianMatrix&)>;

/// dH/dvec(M) by central differences over Hermitian perturbations. Column
/// i + j m holds the derivative with respect to M_ij in the convention
/// dH = sum_k J_k dvec(M)_k, so for i < j it is (d/dx - i d/dy)/2 with
/// M_ij = x + iy, and the conjugate combination for M_ji.
/// Default step: 1e-5 ||M||_F.
CMatrix numeric_jacobian_H(const MatrixFunctional& h, const HermitianMatrix& m, double step = 0.0);

}  // namespace robust_scatter
