// SPDX-License-Identifier: Apache-2.0
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>

#include "robust_scatter/distributions.hpp"
#include "test_support.hpp"

using namespace robust_scatter;
using Catch::Approx;
using rs_test::rel_diff;

namespace {

HermitianMatrix sample_covariance(const SampleSet& x) {
  CMatrix s(x.dim(), x.dim());
  for (std::size_t i = 0; i < x.size(); ++i) s += outer(x[i], x[i]);
  return HermitianMatrix(s * cplx(1.0 / static_cast<double>(x.size())));
}

double pseudo_covariance_norm(const SampleSet& x, double* worst_entry = nullptr) {
  CMatrix s(x.dim(), x.dim());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t a = 0; a < x.dim(); ++a)
      for (std::size_t b = 0; b < x.dim(); ++b) s(a, b) += x[i][a] * x[i][b];
  s *= cplx(1.0 / static_cast<double>(x.size()));
  if (worst_entry) {
    *worst_entry = 0.0;
    for (std::size_t a = 0; a < x.dim(); ++a)
      for (std::size_t b = 0; b < x.dim(); ++b) *worst_entry = std::max(*worst_entry, std::abs(s(a, b)));
  }
  return s.frobenius_norm();
}

}  // namespace

TEST_CASE("RngStream reproduces byte-identical sequences") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  RngStream c(42, 8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  REQUIRE(differs);

  const HermitianMatrix lambda = HermitianMatrix::identity(3);
  RngStream r1(5, 1);
  RngStream r2(5, 1);
  REQUIRE(sample_k_distributed(lambda, 0.1, 100, r1).storage() == sample_k_distributed(lambda, 0.1, 100, r2).storage());
}

TEST_CASE("uniform and normal moments") {
  RngStream rng(1, 0);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  double umin = 1.0, umax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  REQUIRE(umin > 0.0);
  REQUIRE(umax < 1.0);
  REQUIRE(su / n == Approx(0.5).margin(5e-3));
  REQUIRE(sn / n == Approx(0.0).margin(1e-2));
  REQUIRE(sn2 / n == Approx(1.0).margin(1e-2));
}

TEST_CASE("gamma sampler moments for shape below one") {
  RngStream rng(2, 0);
  for (const double shape : {0.1, 0.01}) {
    // Scale 1/shape, the K texture law.
    const double scale = 1.0 / shape;
    const int n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = gamma_sampler(shape, scale, rng);
      REQUIRE(g >= 0.0);
      s += g;
      s2 += g * g;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    if (shape == 0.1) {
      REQUIRE(mean == Approx(shape * scale).epsilon(0.01));
      REQUIRE(var == Approx(shape * scale * scale).epsilon(0.03));
    } else {
      // Kurtosis is 6/shape, so only the mean is checked at this size.
      REQUIRE(mean == Approx(1.0).epsilon(0.05));
    }
  }
}

TEST_CASE("gamma sampler with shape 1 is exponential (Kolmogorov-Smirnov)") {
  RngStream rng(3, 0);
  const int n = 100000;
  std::vector<double> x(n);
  for (auto& v : x) v = gamma_sampler(1.0, 2.0, rng);
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = 1.0 - std::exp(-x[i] / 2.0);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  // 1% critical value 1.63 / sqrt(n)
  REQUIRE(d < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gamma sampler matches Boost quantiles for shape 0.3") {
  RngStream rng(4, 0);
  const int n = 200000;
  std::vector<double> x(n);
  for (auto& v : x) v = gamma_sampler(0.3, 1.5, rng);
  std::sort(x.begin(), x.end());
  const boost::math::gamma_distribution<double> oracle(0.3, 1.5);
  double d = 0.0;
  for (int i = 0; i < n; i += 17) d = std::max(d, std::abs(boost::math::cdf(oracle, x[i]) - (i + 0.5) / n));
  REQUIRE(d < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("complex Gaussian sampler") {
  RngStream rng(5, 0);
  REQUIRE(sample_complex_gaussian(HermitianMatrix::identity(3), 0, rng).empty());

  const SampleSet x = sample_complex_gaussian(HermitianMatrix::identity(3), 100000, rng);
  REQUIRE(rel_diff(sample_covariance(x).mat(), CMatrix::identity(3)) < 0.03);
  double worst = 0.0;
  REQUIRE(pseudo_covariance_norm(x, &worst) < 0.03);
  REQUIRE(worst < 5.0 / std::sqrt(1e5));

  const double d[] = {1.0, 2.0, 3.0};
  const HermitianMatrix lambda(HermitianMatrix::diagonal(d));
  const std::size_t n = 50000;
  const SampleSet y = sample_complex_gaussian(lambda, n, rng);
  REQUIRE(rel_diff(sample_covariance(y).mat(), lambda.mat()) < 5.0 * 3.0 / std::sqrt(static_cast<double>(n)));

  const double neg[] = {1.0, -1.0};
  REQUIRE_THROWS_AS(sample_complex_gaussian(HermitianMatrix::diagonal(neg), 1, rng), NotPositiveDefinite);
}

TEST_CASE("K-distributed sampler") {
  RngStream rng(6, 0);
  SECTION("large shape behaves like a Gaussian") {
    const SampleSet x = sample_k_distributed(HermitianMatrix::identity(3), 1e6, 100000, rng);
    double s2 = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i][0].real();
      s2 += r * r;
      s4 += r * r * r * r;
    }
    const double n = static_cast<double>(x.size());
    const double excess = (s4 / n) / ((s2 / n) * (s2 / n)) - 3.0;
    REQUIRE(std::abs(excess) < 0.1);
  }
  SECTION("unit-mean texture keeps the scatter as covariance") {
    const SampleSet x = sample_k_distributed(HermitianMatrix::identity(3), 0.1, 1000000, rng);
    REQUIRE(rel_diff(sample_covariance(x).mat(), CMatrix::identity(3)) < 0.10);
  }
  SECTION("scatter recovery for nu >= 0.5") {
    const std::size_t n = 100000;
    const SampleSet x = sample_k_distributed(HermitianMatrix::identity(3), 0.5, n, rng);
    REQUIRE(rel_diff(sample_covariance(x).mat(), CMatrix::identity(3)) < 5.0 * 3.0 / std::sqrt(static_cast<double>(n)));
    double worst = 0.0;
    pseudo_covariance_norm(x, &worst);
    REQUIRE(worst < 5.0 / std::sqrt(static_cast<double>(n)));
  }
  SECTION("conditional on the texture the speckle is Gaussian") {
    std::vector<double> tau;
    const std::size_t n = 100000;
    const SampleSet x = sample_k_distributed(HermitianMatrix::identity(2), 0.1, n, rng, &tau);
    REQUIRE(tau.size() == n);
    SampleSet speckle(n, 2);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(tau[i] > 1e-250)) continue;
      for (std::size_t k = 0; k < 2; ++k) speckle[kept][k] = x[i][k] / std::sqrt(tau[i]);
      ++kept;
    }
    const SampleSet w = speckle.prefix(kept);
    REQUIRE(kept > n * 9 / 10);
    REQUIRE(rel_diff(sample_covariance(w).mat(), CMatrix::identity(2)) < 0.03);
    // |w|^2 of a 2-dim circular Gaussian is Gamma(2, 1).
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double q = squared_norm(w[i]);
      s += q;
      s2 += q * q;
    }
    const double nn = static_cast<double>(w.size());
    REQUIRE(s / nn == Approx(2.0).epsilon(0.02));
    REQUIRE(s2 / nn - (s / nn) * (s / nn) == Approx(2.0).epsilon(0.05));
  }
  REQUIRE_THROWS_AS(RadialModel::k_distributed(0.0), InvalidArgument);
  REQUIRE_THROWS_AS(RadialModel::k_distributed(-1.0), InvalidArgument);
}

TEST_CASE("Student-t sampler circularity") {
  RngStream rng(7, 0);
  const std::size_t n = 100000;
  const SampleSet x = sample_student_t(HermitianMatrix::identity(2), 5.0, n, rng);
  double worst = 0.0;
  pseudo_covariance_norm(x, &worst);
  REQUIRE(worst < 5.0 * 5.0 / 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("samples drawn one at a time extend as prefixes") {
  const EllipticalSampler sampler(EllipticalModel{HermitianMatrix::identity(3), RadialModel::k_distributed(0.1)});
  RngStream a(9, 3);
  RngStream b(9, 3);
  const SampleSet small = sampler.draw_many(50, a);
  const SampleSet large = sampler.draw_many(80, b);
  REQUIRE(large.prefix(50).storage() == small.storage());
}

TEST_CASE("model ids") {
  REQUIRE(parse_model_id("gaussian") == RadialModel::gaussian());
  REQUIRE(parse_model_id("k-dist:0.1") == RadialModel::k_distributed(0.1));
  REQUIRE(parse_model_id("student-t:4") == RadialModel::student_t(4.0));
  for (const char* id : {"gaussian", "k-dist:0.01", "student-t:2.5"}) REQUIRE(model_id(parse_model_id(id)) == id);
  for (const char* bad : {"", "gauss", "k-dist:", "k-dist:-1", "k-dist:abc", "student-t:0"})
    REQUIRE_THROWS_AS(parse_model_id(bad), InvalidArgument);
}

TEST_CASE("chi-square CDF and quantile") {
  for (const double k : {1.0, 2.0, 5.0, 6.0, 8.0, 30.0}) REQUIRE(chi2_cdf(0.0, k) == 0.0);
  REQUIRE(chi2_cdf(2.0 * std::log(2.0), 2.0) == Approx(0.5).epsilon(1e-14));
  for (const double x : {1.0, 5.0, 10.0}) REQUIRE(std::abs(chi2_cdf(x, 2.0) - (1.0 - std::exp(-x / 2.0))) < 1e-12);
  REQUIRE(chi2_quantile(0.5, 2.0) == Approx(2.0 * std::log(2.0)).epsilon(1e-10));
  REQUIRE(chi2_quantile(1e-12, 6.0) < 1e-2);
  REQUIRE_THROWS_AS(chi2_cdf(-1.0, 2.0), InvalidArgument);
  REQUIRE_THROWS_AS(chi2_quantile(0.0, 2.0), InvalidArgument);
  REQUIRE_THROWS_AS(chi2_quantile(1.0, 2.0), InvalidArgument);

  RngStream rng(8, 0);
  for (int t = 0; t < 300; ++t) {
    const double k = 1.0 + std::floor(rng.uniform() * 20.0);
    const double x = 40.0 * rng.uniform();
    const double y = x + 5.0 * rng.uniform();
    const boost::math::chi_squared_distribution<double> oracle(k);
    REQUIRE(std::abs(chi2_cdf(x, k) - boost::math::cdf(oracle, x)) < 1e-12);
    REQUIRE(chi2_cdf(x, k) <= chi2_cdf(y, k));
    const double p = chi2_cdf(x, k);
    if (p > 1e-10 && p < 1.0 - 1e-10) {
      const double xq = chi2_quantile(p, k);
      REQUIRE(std::abs(chi2_cdf(xq, k) - p) < 1e-10);
      REQUIRE(xq == Approx(x).epsilon(1e-6));
    }
  }
}
