// SPDX-License-Identifier: Apache-2.0
//
// Scatter-matrix estimators: the sample covariance matrix, complex M-estimators
// solving M = (1/n) sum u(z^H M^{-1} z) z z^H by fixed-point iteration (Huber's
// weight in particular), and Tyler's normalized fixed point.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robust_scatter/distributions.hpp"
#include "robust_scatter/linalg.hpp"

namespace robust_scatter {

/// The triple (u, psi, psi') defining an M-estimator, with psi(s) = s u(s).
class WeightFunction {
 public:
  using Fn = std::function<double(double)>;

  WeightFunction(std::string id, Fn u, Fn psi, Fn psi_prime, std::vector<double> breakpoints = {},
                 std::map<std::string, double> params = {});

  double u(double s) const { return u_(s); }
  double psi(double s) const { return psi_(s); }
  double psi_prime(double s) const { return psi_prime_(s); }

  const std::string& id() const noexcept { return id_; }
  /// Points in s where psi or psi' is not smooth (quadrature splits there).
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::map<std::string, double>& params() const noexcept { return params_; }
  double param(const std::string& name) const;

  /// Checks u >= 0, non-increasing and psi non-decreasing on a log grid, and
  /// m < sup psi. Throws InvalidArgument naming the violated condition.
  void check_conditions(std::size_t m) const;

  /// sup psi over a wide log grid (infinity when unbounded).
  double psi_sup() const;

  /// u_r(s) = u(s / factor) with psi and psi' transformed accordingly.
  WeightFunction argument_scaled(double factor) const;

 private:
  std::string id_;
  Fn u_;
  Fn psi_;
  Fn psi_prime_;
  std::vector<double> breakpoints_;
  std::map<std::string, double> params_;
};

struct HuberTuning {
  double q = 0.0;
  double k2 = 0.0;    // threshold on z^H M^{-1} z
  double beta = 0.0;  // consistency scaling
};

/// k^2 = F^{-1}_{2m}(q) / 2 and beta = F_{2m+2}(2k^2) + k^2 (1 - q) / m.
HuberTuning huber_tuning(double q, std::size_t m);

/// u(s) = min(1, k^2/s) / beta.
WeightFunction huber_weight(double q, std::size_t m);
WeightFunction huber_weight(const HuberTuning& tuning);

/// u == 1.
WeightFunction scm_weight();
/// u == c.
WeightFunction constant_weight(double c);
/// u(s) = m / s (Tyler); psi is constant, so the Maronna bound m < sup psi fails.
WeightFunction tyler_weight(std::size_t m);

struct ScatterEstimate {
  HermitianMatrix matrix;
  int iterations = 0;
  /// Relative estimating-equation residual at the returned matrix.
  double residual = 0.0;
  std::string estimator_id;
  double sigma = 1.0;
  bool positive_definite = true;
  /// Relative change ||M_{k+1} - M_k||_F / ||M_k||_F per iteration.
  std::vector<double> changes;
};

/// Thrown when the iteration cap is reached; carries the last iterate.
class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, HermitianMatrix last, double change, int iterations)
      : NumericalError(what), last_(std::move(last)), change_(change), iterations_(iterations) {}
  const HermitianMatrix& last_iterate() const noexcept { return last_; }
  double last_change() const noexcept { return change_; }
  int iterations() const noexcept { return iterations_; }

 private:
  HermitianMatrix last_;
  double change_;
  int iterations_;
};

struct FixedPointOptions {
  double tol = 1e-9;
  int max_iter = 200;
  double condition_cap = kDefaultConditionCap;
  /// Rescale each iterate so that (1/n) sum psi(z^H M^-1 z) = m before the
  /// update. Fixed points are unchanged.
  bool rescale = true;
  /// Default: identity scaled to the average per-coordinate sample power.
  std::optional<HermitianMatrix> init;
};

enum class TylerNormalization { Trace, Determinant };

/// (1/n) sum z z^H. Warns through positive_definite = false when n < m.
ScatterEstimate scm(const SampleSet& samples);

ScatterEstimate m_estimate_fixed_point(const SampleSet& samples, const WeightFunction& w,
                                       const FixedPointOptions& options = {});

ScatterEstimate huber_estimate(const SampleSet& samples, double q, const FixedPointOptions& options = {});

ScatterEstimate tyler_estimate(const SampleSet& samples, const FixedPointOptions& options = {},
                               TylerNormalization normalization = TylerNormalization::Trace);

/// ||M - (1/n) sum u(z^H M^{-1} z) z z^H||_F / ||M||_F.
double estimating_equation_residual(const SampleSet& samples, const WeightFunction& w, const HermitianMatrix& m);

/// One Huber update written as the clipped (SCM-like) sum plus the normalized
/// outlier sum, and the same update written with the single weighted sum.
struct HuberUpdateForms {
  CMatrix two_sum;
  CMatrix single_sum;
  std::size_t clipped = 0;  // samples with z^H M^{-1} z <= k^2
};
HuberUpdateForms huber_update_forms(const SampleSet& samples, const HuberTuning& tuning, const HermitianMatrix& m);

enum class EstimatorKind { Scm, Huber, Tyler };

/// Estimator selection string: "scm", "huber:<q>" or "tyler".
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Scm;
  double q = 0.0;

  std::string id() const;
  bool operator==(const EstimatorSpec&) const = default;
};

EstimatorSpec parse_estimator_id(std::string_view id);

/// The weight an estimator uses in dimension m (Tyler's for "tyler").
WeightFunction weight_for(const EstimatorSpec& spec, std::size_t m);

ScatterEstimate estimate(const EstimatorSpec& spec, const SampleSet& samples, const FixedPointOptions& options = {});

}  // namespace robust_scatter
