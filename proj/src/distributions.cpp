// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/distributions.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace robust_scatter {

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  auto seq = make_seed_seq(seed, stream);
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform() {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
}

double RngStream::normal() {
  if (spare_) {
    const double out = *spare_;
    spare_.reset();
    return out;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double phi = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(phi);
  return r * std::cos(phi);
}

cplx RngStream::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re * std::numbers::sqrt2 * 0.5, im * std::numbers::sqrt2 * 0.5};
}

double gamma_sampler(double shape, double scale, RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw InvalidArgument("gamma_sampler: shape and scale must be positive");
  if (shape < 1.0) {
    // G(shape) = G(shape + 1) * U^{1/shape}; the exponent form keeps tiny values
    // representable instead of rounding U^{1/shape} through pow.
    const double boosted = gamma_sampler(shape + 1.0, 1.0, rng);
    return scale * boosted * std::exp(std::log(rng.uniform()) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

RadialModel RadialModel::k_distributed(double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("K-distribution shape must be positive");
  return {ModelKind::KDistributed, nu};
}

RadialModel RadialModel::student_t(double dof) {
  if (!(dof > 0.0)) throw InvalidArgument("Student-t degrees of freedom must be positive");
  return {ModelKind::StudentT, dof};
}

double RadialModel::draw_texture(RngStream& rng) const {
  switch (kind) {
    case ModelKind::ComplexGaussian:
      return 1.0;
    case ModelKind::KDistributed:
      return gamma_sampler(parameter, 1.0 / parameter, rng);
    case ModelKind::StudentT:
      // tau = dof / chi2_dof
      return parameter / gamma_sampler(0.5 * parameter, 2.0, rng);
  }
  return 1.0;
}

namespace {

double parse_positive(std::string_view text, std::string_view id) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !(value > 0.0) || !std::isfinite(value))
    throw InvalidArgument("invalid model parameter in '" + std::string(id) + "'");
  return value;
}

}  // namespace

RadialModel parse_model_id(std::string_view id) {
  if (id == "gaussian") return RadialModel::gaussian();
  constexpr std::string_view kK = "k-dist:";
  constexpr std::string_view kT = "student-t:";
  if (id.starts_with(kK)) return RadialModel::k_distributed(parse_positive(id.substr(kK.size()), id));
  if (id.starts_with(kT)) return RadialModel::student_t(parse_positive(id.substr(kT.size()), id));
  throw InvalidArgument("unknown model '" + std::string(id) + "' (expected gaussian, k-dist:<nu> or student-t:<dof>)");
}

namespace {

std::string shortest(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace

std::string model_id(const RadialModel& model) {
  switch (model.kind) {
    case ModelKind::ComplexGaussian:
      return "gaussian";
    case ModelKind::KDistributed:
      return "k-dist:" + shortest(model.parameter);
    case ModelKind::StudentT:
      return "student-t:" + shortest(model.parameter);
  }
  return "gaussian";
}

SampleSet::SampleSet(std::size_t n, std::size_t m, CVector data) : n_(n), m_(m), data_(std::move(data)) {
  if (data_.size() != n_ * m_) throw InvalidArgument("SampleSet: data size does not match n * m");
}

SampleSet SampleSet::prefix(std::size_t count) const {
  if (count > n_) throw InvalidArgument("SampleSet::prefix: count exceeds size");
  return SampleSet(count, m_, CVector(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(count * m_)));
}

SampleSet SampleSet::transformed(const CMatrix& a) const {
  if (a.cols() != m_) throw InvalidArgument("SampleSet::transformed: dimension mismatch");
  SampleSet out(n_, a.rows());
  for (std::size_t i = 0; i < n_; ++i) {
    const auto z = (*this)[i];
    auto dst = out[i];
    for (std::size_t r = 0; r < a.rows(); ++r) {
      cplx acc{};
      for (std::size_t c = 0; c < m_; ++c) acc += a(r, c) * z[c];
      dst[r] = acc;
    }
  }
  return out;
}

EllipticalSampler::EllipticalSampler(EllipticalModel model)
    : model_(std::move(model)), sqrt_scatter_(herm_sqrt(model_.scatter)) {}

double EllipticalSampler::draw(RngStream& rng, std::span<cplx> out) const {
  const std::size_t m = dim();
  const double tau = model_.radial.draw_texture(rng);
  cplx w[64];
  CVector heap;
  cplx* buf = w;
  if (m > 64) {
    heap.resize(m);
    buf = heap.data();
  }
  for (std::size_t i = 0; i < m; ++i) buf[i] = rng.complex_normal();
  const double amp = std::sqrt(tau);
  const CMatrix& s = sqrt_scatter_.mat();
  for (std::size_t r = 0; r < m; ++r) {
    cplx acc{};
    for (std::size_t c = 0; c < m; ++c) acc += s(r, c) * buf[c];
    out[r] = amp * acc;
  }
  return tau;
}

SampleSet EllipticalSampler::draw_many(std::size_t n, RngStream& rng, std::vector<double>* textures) const {
  SampleSet out(n, dim());
  if (textures) textures->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = draw(rng, out[i]);
    if (textures) (*textures)[i] = tau;
  }
  return out;
}

SampleSet sample_complex_gaussian(const HermitianMatrix& scatter, std::size_t n, RngStream& rng) {
  return EllipticalSampler({scatter, RadialModel::gaussian()}).draw_many(n, rng);
}

SampleSet sample_k_distributed(const HermitianMatrix& scatter, double nu, std::size_t n, RngStream& rng,
                               std::vector<double>* textures) {
  return EllipticalSampler({scatter, RadialModel::k_distributed(nu)}).draw_many(n, rng, textures);
}

SampleSet sample_student_t(const HermitianMatrix& scatter, double dof, std::size_t n, RngStream& rng) {
  return EllipticalSampler({scatter, RadialModel::student_t(dof)}).draw_many(n, rng);
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw InvalidArgument("regularized_gamma_p: a must be positive");
  if (x < 0.0) throw InvalidArgument("regularized_gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    // Series: P = e^{-x} x^a / Gamma(a+1) * sum x^n / ((a+1)...(a+n))
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefactor));
  }
  // Continued fraction for Q (modified Lentz).
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefactor) * h);
}

double chi2_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw InvalidArgument("chi2_cdf: degrees of freedom must be positive");
  if (x < 0.0 || std::isnan(x)) throw InvalidArgument("chi2_cdf: x must be non-negative");
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("chi2_quantile: p must lie in (0, 1)");
  if (!(dof > 0.0)) throw InvalidArgument("chi2_quantile: degrees of freedom must be positive");
  double lo = 0.0;
  double hi = std::max(1.0, dof);
  while (chi2_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (chi2_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace robust_scatter
