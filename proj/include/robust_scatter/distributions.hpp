// SPDX-License-Identifier: Apache-2.0
//
// Complex elliptical samplers (compound-Gaussian representation z = sqrt(tau) x)
// and the chi-square special functions used for Huber tuning.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robust_scatter/linalg.hpp"

namespace robust_scatter {

/// Independent, reproducible random stream identified by (seed, stream id).
/// One stream per Monte-Carlo trial; no global state.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal();

  /// Circular complex normal: real and imaginary parts independent N(0, 1/2).
  cplx complex_normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Gamma(shape, scale) variate, Marsaglia-Tsang with the shape-boost for shape < 1.
double gamma_sampler(double shape, double scale, RngStream& rng);

enum class ModelKind { ComplexGaussian, KDistributed, StudentT };

/// The texture law of an elliptical model, independent of its scatter.
struct RadialModel {
  ModelKind kind = ModelKind::ComplexGaussian;
  double parameter = 0.0;  // K shape nu, or Student degrees of freedom

  static RadialModel gaussian() { return {}; }
  static RadialModel k_distributed(double nu);
  static RadialModel student_t(double dof);

  /// Draws the texture tau (1 for the Gaussian model).
  double draw_texture(RngStream& rng) const;

  bool operator==(const RadialModel&) const = default;
};

/// Parses "gaussian", "k-dist:<nu>" or "student-t:<dof>".
RadialModel parse_model_id(std::string_view id);
std::string model_id(const RadialModel& model);

/// Zero-mean complex elliptical model: scatter plus texture law.
struct EllipticalModel {
  HermitianMatrix scatter;
  RadialModel radial;
};

/// n samples of dimension m, stored sample-major.
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(std::size_t n, std::size_t m) : n_(n), m_(m), data_(n * m) {}
  SampleSet(std::size_t n, std::size_t m, CVector data);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return m_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<cplx> operator[](std::size_t i) { return {data_.data() + i * m_, m_}; }
  std::span<const cplx> operator[](std::size_t i) const { return {data_.data() + i * m_, m_}; }

  /// First `count` samples.
  SampleSet prefix(std::size_t count) const;

  /// Applies z -> A z to every sample.
  SampleSet transformed(const CMatrix& a) const;

  const CVector& storage() const noexcept { return data_; }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  CVector data_;
};

/// Draws one sample at a time, so sequences drawn with n and with n' > n from
/// the same stream share their first n samples.
class EllipticalSampler {
 public:
  explicit EllipticalSampler(EllipticalModel model);

  std::size_t dim() const noexcept { return sqrt_scatter_.dim(); }
  const EllipticalModel& model() const noexcept { return model_; }

  /// Writes one sample into out and returns its texture.
  double draw(RngStream& rng, std::span<cplx> out) const;

  SampleSet draw_many(std::size_t n, RngStream& rng, std::vector<double>* textures = nullptr) const;

 private:
  EllipticalModel model_;
  HermitianMatrix sqrt_scatter_;
};

SampleSet sample_complex_gaussian(const HermitianMatrix& scatter, std::size_t n, RngStream& rng);
SampleSet sample_k_distributed(const HermitianMatrix& scatter, double nu, std::size_t n, RngStream& rng,
                               std::vector<double>* textures = nullptr);
SampleSet sample_student_t(const HermitianMatrix& scatter, double dof, std::size_t n, RngStream& rng);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

double chi2_cdf(double x, double dof);
double chi2_quantile(double p, double dof);

}  // namespace robust_scatter
