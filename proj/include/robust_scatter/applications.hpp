// SPDX-License-Identifier: Apache-2.0
//
// Scale-invariant functionals of a scatter estimate: MUSIC direction finding on
// a uniform linear array and the adaptive normalized matched filter statistic.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "robust_scatter/distributions.hpp"
#include "robust_scatter/linalg.hpp"

namespace robust_scatter {

struct UlaConfig {
  std::size_t m = 3;
  double spacing = 0.5;  // wavelengths
  std::size_t sources = 1;

  void validate() const;
};

/// exp(j 2 pi spacing i sin(theta)), i = 0..m-1, theta in degrees.
CVector steering(double theta_deg, const UlaConfig& cfg);

/// Angles start + k step for start + k step < stop.
struct DegreeGrid {
  double start = -90.0;
  double stop = 90.0;
  double step = 0.01;

  std::size_t size() const;
  double at(std::size_t k) const { return start + static_cast<double>(k) * step; }
  std::vector<double> points() const;
};

struct MusicEstimate {
  std::vector<double> doas;  // degrees, ascending
  /// Set when a spectral peak sits on the first or last grid point; such a peak
  /// is returned unrefined.
  bool boundary = false;
};

/// Grid search with steering vectors precomputed once; reuse across trials.
class MusicSearch {
 public:
  MusicSearch(UlaConfig cfg, DegreeGrid grid);

  const UlaConfig& config() const noexcept { return cfg_; }
  const DegreeGrid& grid() const noexcept { return grid_; }

  /// P(theta) = 1 / (a^H E_n E_n^H a) over the grid.
  std::vector<double> spectrum(const HermitianMatrix& m) const;

  /// Largest peaks refined by a parabola through log P at the peak and its
  /// neighbors. Ties go to the lowest angle.
  MusicEstimate doa(const HermitianMatrix& m) const;

 private:
  UlaConfig cfg_;
  DegreeGrid grid_;
  CVector steering_;  // grid point k occupies [k m, (k+1) m)
};

std::vector<double> music_spectrum(const HermitianMatrix& m, const UlaConfig& cfg, const DegreeGrid& grid);
MusicEstimate music_doa(const HermitianMatrix& m, const UlaConfig& cfg, const DegreeGrid& grid = {});

struct DetectionInput {
  CVector y;
  CVector p;
  HermitianMatrix m;
};

/// |p^H M^-1 y|^2 / ((p^H M^-1 p)(y^H M^-1 y)), clamped to [0, 1].
double anmf_statistic(const DetectionInput& input);
double anmf_statistic(const Cholesky& chol, std::span<const cplx> y, std::span<const cplx> p);

/// Snapshots z = sum_k s_k a(theta_k) + w with s_k ~ CN(0, 10^(snr_db/10)) and
/// w drawn from the noise model.
class ArrayScenario {
 public:
  ArrayScenario(UlaConfig cfg, std::vector<double> doas, double snr_db, EllipticalModel noise);

  std::size_t dim() const noexcept { return cfg_.m; }
  void draw(RngStream& rng, std::span<cplx> out) const;
  /// n consecutive snapshots, so a shorter draw is a prefix of a longer one.
  SampleSet draw_many(std::size_t n, RngStream& rng) const;

  /// Population covariance sum_k P a_k a_k^H + E[tau] Lambda (only finite
  /// texture means are supported).
  HermitianMatrix covariance() const;

 private:
  UlaConfig cfg_;
  std::vector<double> doas_;
  double amplitude_;
  std::vector<CVector> steering_;
  EllipticalSampler noise_;
};

}  // namespace robust_scatter
