// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/applications.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace robust_scatter {

void UlaConfig::validate() const {
  if (m < 2) throw InvalidArgument("UlaConfig: need at least 2 sensors");
  if (!(spacing > 0.0 && spacing <= 0.5)) throw InvalidArgument("UlaConfig: spacing must lie in (0, 0.5] wavelengths");
  if (sources < 1 || sources >= m) throw InvalidArgument("UlaConfig: need 1 <= sources < m");
}

CVector steering(double theta_deg, const UlaConfig& cfg) {
  const double phase = 2.0 * std::numbers::pi * cfg.spacing * std::sin(theta_deg * std::numbers::pi / 180.0);
  CVector a(cfg.m);
  for (std::size_t i = 0; i < cfg.m; ++i) a[i] = std::polar(1.0, phase * static_cast<double>(i));
  return a;
}

std::size_t DegreeGrid::size() const {
  if (!(step > 0.0) || !(stop > start)) throw InvalidArgument("DegreeGrid: need step > 0 and stop > start");
  const double span = (stop - start) / step;
  const double nearest = std::round(span);
  auto n = static_cast<std::size_t>(std::abs(span - nearest) < 1e-9 * std::max(1.0, span) ? nearest : std::ceil(span));
  return std::max<std::size_t>(n, 1);
}

std::vector<double> DegreeGrid::points() const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(k);
  return out;
}

MusicSearch::MusicSearch(UlaConfig cfg, DegreeGrid grid) : cfg_(cfg), grid_(grid) {
  cfg_.validate();
  const std::size_t n = grid_.size();
  steering_.resize(n * cfg_.m);
  for (std::size_t k = 0; k < n; ++k) {
    const CVector a = steering(grid_.at(k), cfg_);
    std::copy(a.begin(), a.end(), steering_.begin() + static_cast<std::ptrdiff_t>(k * cfg_.m));
  }
}

std::vector<double> MusicSearch::spectrum(const HermitianMatrix& m) const {
  if (m.dim() != cfg_.m) throw InvalidArgument("music_spectrum: matrix dimension differs from the array size");
  const HermitianEigen eig = herm_eig(m);
  const std::size_t d = cfg_.m;
  const std::size_t noise_dim = d - cfg_.sources;
  // Conjugated noise eigenvectors, row per vector, so e^H a is a plain dot product.
  CVector en(noise_dim * d);
  for (std::size_t k = 0; k < noise_dim; ++k)
    for (std::size_t i = 0; i < d; ++i) en[k * d + i] = std::conj(eig.vectors(i, k));

  const std::size_t n = grid_.size();
  std::vector<double> out(n);
  for (std::size_t g = 0; g < n; ++g) {
    const cplx* a = steering_.data() + g * d;
    double denom = 0.0;
    for (std::size_t k = 0; k < noise_dim; ++k) {
      cplx acc{};
      for (std::size_t i = 0; i < d; ++i) acc += en[k * d + i] * a[i];
      denom += std::norm(acc);
    }
    out[g] = 1.0 / std::max(denom, std::numeric_limits<double>::min());
  }
  return out;
}

namespace {

double refine(const std::vector<double>& p, std::size_t k, const DegreeGrid& grid) {
  const double ym = std::log(p[k - 1]);
  const double y0 = std::log(p[k]);
  const double yp = std::log(p[k + 1]);
  const double curvature = ym - 2.0 * y0 + yp;
  double delta = 0.0;
  if (curvature < 0.0) delta = std::clamp(0.5 * (ym - yp) / curvature, -0.5, 0.5);
  return grid.at(k) + delta * grid.step;
}

}  // namespace

MusicEstimate MusicSearch::doa(const HermitianMatrix& m) const {
  const std::vector<double> p = spectrum(m);
  const std::size_t n = p.size();
  std::vector<std::size_t> peaks;
  if (cfg_.sources == 1) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (p[k] > p[best]) best = k;
    peaks.push_back(best);
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const bool left = k == 0 || p[k] > p[k - 1];
      const bool right = k + 1 == n || p[k] >= p[k + 1];
      if (left && right) peaks.push_back(k);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    if (peaks.size() > cfg_.sources) peaks.resize(cfg_.sources);
  }
  MusicEstimate out;
  for (const std::size_t k : peaks) {
    if (k == 0 || k + 1 == n) {
      out.boundary = true;
      out.doas.push_back(grid_.at(k));
    } else {
      out.doas.push_back(refine(p, k, grid_));
    }
  }
  std::sort(out.doas.begin(), out.doas.end());
  return out;
}

std::vector<double> music_spectrum(const HermitianMatrix& m, const UlaConfig& cfg, const DegreeGrid& grid) {
  return MusicSearch(cfg, grid).spectrum(m);
}

MusicEstimate music_doa(const HermitianMatrix& m, const UlaConfig& cfg, const DegreeGrid& grid) {
  return MusicSearch(cfg, grid).doa(m);
}

double anmf_statistic(const Cholesky& chol, std::span<const cplx> y, std::span<const cplx> p) {
  if (y.size() != chol.dim() || p.size() != chol.dim()) throw InvalidArgument("anmf_statistic: dimension mismatch");
  if (squared_norm(y) == 0.0 || squared_norm(p) == 0.0) throw InvalidArgument("anmf_statistic: y and p must be nonzero");
  const CVector wy = chol.solve_lower(y);
  const CVector wp = chol.solve_lower(p);
  const double num = std::norm(dot_conj(wp, wy));
  const double den = squared_norm(wp) * squared_norm(wy);
  return std::clamp(num / den, 0.0, 1.0);
}

double anmf_statistic(const DetectionInput& input) {
  return anmf_statistic(Cholesky(input.m), input.y, input.p);
}

ArrayScenario::ArrayScenario(UlaConfig cfg, std::vector<double> doas, double snr_db, EllipticalModel noise)
    : cfg_(cfg),
      doas_(std::move(doas)),
      amplitude_(std::sqrt(std::pow(10.0, snr_db / 10.0))),
      noise_(std::move(noise)) {
  if (noise_.dim() != cfg_.m) throw InvalidArgument("ArrayScenario: noise dimension differs from the array size");
  for (const double theta : doas_) steering_.push_back(steering(theta, cfg_));
}

void ArrayScenario::draw(RngStream& rng, std::span<cplx> out) const {
  noise_.draw(rng, out);
  for (const auto& a : steering_) {
    const cplx s = amplitude_ * rng.complex_normal();
    for (std::size_t i = 0; i < cfg_.m; ++i) out[i] += s * a[i];
  }
}

SampleSet ArrayScenario::draw_many(std::size_t n, RngStream& rng) const {
  SampleSet out(n, cfg_.m);
  for (std::size_t i = 0; i < n; ++i) draw(rng, out[i]);
  return out;
}

HermitianMatrix ArrayScenario::covariance() const {
  const RadialModel& radial = noise_.model().radial;
  double texture_mean = 1.0;
  if (radial.kind == ModelKind::StudentT) {
    if (!(radial.parameter > 2.0)) throw InvalidArgument("ArrayScenario::covariance: infinite noise power");
    texture_mean = radial.parameter / (radial.parameter - 2.0);
  }
  CMatrix c = noise_.model().scatter.mat() * cplx(texture_mean);
  for (const auto& a : steering_) c += outer(a, a) * cplx(amplitude_ * amplitude_);
  return HermitianMatrix(c);
}

}  // namespace robust_scatter
