// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <catch_amalgamated.hpp>
#include <cmath>

#include "robust_scatter/linalg.hpp"
#include "test_support.hpp"

using namespace robust_scatter;
using Catch::Approx;
using rs_test::random_hermitian;
using rs_test::random_matrix;
using rs_test::random_pd;
using rs_test::rel_diff;

namespace {

CMatrix from_rows(std::size_t r, std::size_t c, std::vector<cplx> v) { return CMatrix(r, c, std::move(v)); }

Eigen::MatrixXcd to_eigen(const CMatrix& a) {
  Eigen::MatrixXcd out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

double eigen_rel_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).norm() / b.norm(); }

RMatrix transfer_tr(std::size_t m) {
  // T_r = [[0, -I], [I, 0]]
  RMatrix t(2 * m, 2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    t(i, m + i) = -1.0;
    t(m + i, i) = 1.0;
  }
  return t;
}

}  // namespace

TEST_CASE("vec stacks columns") {
  const CMatrix a = from_rows(2, 2, {1.0, 3.0, 2.0, 4.0});
  const CVector v = vec(a);
  REQUIRE(v == CVector{1.0, 2.0, 3.0, 4.0});
  REQUIRE(vec(CMatrix::identity(2)) == CVector{1.0, 0.0, 0.0, 1.0});

  RngStream rng(1, 0);
  const CMatrix b = random_matrix(3, 3, rng);
  REQUIRE(unvec(vec(b), 3, 3) == b);
}

TEST_CASE("kron block structure") {
  REQUIRE(kron(CMatrix::identity(2), CMatrix::identity(2)) == CMatrix::identity(4));
  RngStream rng(2, 0);
  const CMatrix b = random_matrix(2, 3, rng);
  REQUIRE(kron(from_rows(1, 1, {2.0}), b) == b * cplx(2.0));

  const CMatrix a = random_matrix(3, 3, rng);
  const CMatrix x = random_matrix(3, 3, rng);
  const CMatrix c = random_matrix(3, 3, rng);
  const CVector lhs = vec(a * x * c);
  const CVector rhs = kron(c.transpose(), a) * vec(x);
  double err = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) err = std::max(err, std::abs(lhs[i] - rhs[i]));
  REQUIRE(err < 1e-13);
}

TEST_CASE("commutation matrix transposes vec") {
  const CommutationMatrix k2(2);
  REQUIRE(commutation_apply(k2, vec(from_rows(2, 2, {1.0, 3.0, 2.0, 4.0}))) == CVector{1.0, 3.0, 2.0, 4.0});

  RngStream rng(3, 0);
  for (const std::size_t m : {1u, 2u, 3u, 5u}) {
    const CommutationMatrix k(m);
    const CMatrix a = random_matrix(m, m, rng);
    REQUIRE(k.apply(vec(a)) == vec(a.transpose()));
    REQUIRE(k.apply(k.apply(vec(a))) == vec(a));
    const CMatrix s = a + a.transpose();
    REQUIRE(k.apply(vec(s)) == vec(s));
    REQUIRE(k.dense() * vec(a) == vec(a.transpose()));
    const CMatrix big = random_matrix(m * m, m * m, rng);
    REQUIRE(k.right_multiply(big) == big * k.dense());
  }
  REQUIRE_THROWS_AS(commutation_apply(k2, CVector(3)), InvalidArgument);
}

TEST_CASE("HermitianMatrix symmetrizes on construction") {
  RngStream rng(4, 0);
  const HermitianMatrix h(random_matrix(4, 4, rng));
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(h(i, i).imag() == 0.0);
    for (std::size_t j = 0; j < 4; ++j) REQUIRE(h(i, j) == std::conj(h(j, i)));
  }
}

TEST_CASE("herm_eig") {
  const double d[] = {3.0, 1.0, 2.0};
  const HermitianEigen diag = herm_eig(HermitianMatrix::diagonal(d));
  REQUIRE(diag.values == std::vector<double>{1.0, 2.0, 3.0});

  const HermitianEigen two = herm_eig(HermitianMatrix(from_rows(2, 2, {2.0, cplx(0, 1), cplx(0, -1), 2.0})));
  REQUIRE(two.values[0] == Approx(1.0).epsilon(1e-14));
  REQUIRE(two.values[1] == Approx(3.0).epsilon(1e-14));

  RngStream rng(5, 0);
  for (const std::size_t m : {2u, 3u, 8u, 16u}) {
    for (int t = 0; t < 10; ++t) {
      const HermitianMatrix a = random_hermitian(m, rng);
      const HermitianEigen e = herm_eig(a);
      REQUIRE(std::is_sorted(e.values.begin(), e.values.end()));
      const CMatrix lam = CMatrix::diagonal(e.values);
      REQUIRE((a.mat() * e.vectors - e.vectors * lam).frobenius_norm() <= 1e-10 * a.frobenius_norm());
      REQUIRE(rel_diff(e.vectors * lam * e.vectors.adjoint(), a.mat()) < 1e-10);
      REQUIRE((e.vectors.adjoint() * e.vectors - CMatrix::identity(m)).frobenius_norm() < 1e-12);

      // Eigenvalues against Eigen's self-adjoint solver.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> oracle(to_eigen(a.mat()));
      for (std::size_t i = 0; i < m; ++i)
        REQUIRE(e.values[i] == Approx(oracle.eigenvalues()(static_cast<Eigen::Index>(i))).margin(1e-11));
    }
  }
}

TEST_CASE("herm_sqrt and herm_inv") {
  REQUIRE(rel_diff(herm_sqrt(HermitianMatrix::identity(3)).mat(), CMatrix::identity(3)) < 1e-15);
  const double d[] = {4.0, 9.0};
  const double r[] = {2.0, 3.0};
  REQUIRE(rel_diff(herm_sqrt(HermitianMatrix::diagonal(d)).mat(), CMatrix::diagonal(r)) < 1e-15);
  const double d2[] = {2.0, 4.0};
  const double i2[] = {0.5, 0.25};
  REQUIRE(rel_diff(herm_inv(HermitianMatrix::diagonal(d2)).mat(), CMatrix::diagonal(i2)) < 1e-15);
  REQUIRE(rel_diff(herm_inv(HermitianMatrix::identity(3)).mat(), CMatrix::identity(3)) < 1e-15);

  RngStream rng(6, 0);
  for (const std::size_t m : {2u, 3u, 8u}) {
    const HermitianMatrix a = random_pd(m, rng);
    const HermitianMatrix s = herm_sqrt(a);
    REQUIRE(rel_diff(s.mat() * s.mat(), a.mat()) < 1e-10);
    REQUIRE(herm_eig(s).values.front() > 0.0);
    const HermitianMatrix inv = herm_inv(a);
    REQUIRE((a.mat() * inv.mat() - CMatrix::identity(m)).frobenius_norm() < 1e-10);
    REQUIRE(eigen_rel_diff(to_eigen(inv.mat()), to_eigen(a.mat()).inverse()) < 1e-12);
  }

  const double bad[] = {1.0, 1e-14};
  REQUIRE_THROWS_AS(herm_inv(HermitianMatrix::diagonal(bad)), SingularMatrix);
  const double neg[] = {1.0, -1.0};
  REQUIRE_THROWS_AS(herm_sqrt(HermitianMatrix::diagonal(neg)), NotPositiveDefinite);
}

TEST_CASE("Cholesky") {
  RngStream rng(7, 0);
  const HermitianMatrix a = random_pd(4, rng);
  const Cholesky chol(a);
  const CMatrix& l = chol.factor();
  REQUIRE(rel_diff(l * l.adjoint(), a.mat()) < 1e-14);
  const CVector z = random_matrix(4, 1, rng).storage();
  const HermitianMatrix inv = herm_inv(a);
  const CVector iz = inv.mat() * z;
  REQUIRE(chol.inverse_quad_form(z) == Approx(dot_conj(z, iz).real()).epsilon(1e-12));
  REQUIRE(chol.condition_estimate() >= 1.0);

  const double neg[] = {1.0, -1.0};
  REQUIRE_THROWS_AS(Cholesky(HermitianMatrix::diagonal(neg)), NotPositiveDefinite);
}

TEST_CASE("lu_inverse matches Eigen") {
  RngStream rng(8, 0);
  const CMatrix a = random_matrix(5, 5, rng);
  const CMatrix inv = lu_inverse(a);
  REQUIRE(eigen_rel_diff(to_eigen(inv), to_eigen(a).inverse()) < 1e-12);
}

TEST_CASE("real embedding f") {
  REQUIRE(rel_diff(embed_f(HermitianMatrix::identity(3)).mat(), RMatrix::identity(6) * 0.5) == 0.0);

  RngStream rng(9, 0);
  for (const std::size_t m : {2u, 3u, 8u}) {
    const RMatrix tr = transfer_tr(m);
    for (int t = 0; t < 100; ++t) {
      const HermitianMatrix a = random_pd(m, rng);
      const RealSymMatrix fa = embed_f(a);
      const RMatrix fa_inv = lu_inverse(fa.mat());

      // f(A^-1) = f(A)^-1 / 4
      REQUIRE(rel_diff(embed_f(herm_inv(a)).mat(), fa_inv * 0.25) < 1e-12);

      // A = g^H f(A) g exactly
      REQUIRE(rel_diff(unembed_f(fa).mat(), a.mat()) < 1e-15);

      CVector z(m);
      for (auto& x : z) x = rng.complex_normal();
      const std::vector<double> u = stack_real(z);
      const std::vector<double> v = stack_rotated(z);
      const double quad = Cholesky(a).inverse_quad_form(z);
      const auto form = [&](const std::vector<double>& w) {
        const std::vector<double> iw = fa_inv * w;
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * iw[i];
        return s;
      };
      REQUIRE(std::abs(quad - 0.5 * form(u)) < 1e-12 * quad);
      REQUIRE(std::abs(quad - 0.5 * form(v)) < 1e-12 * quad);

      // f(z z^H) = (u u^T + v v^T) / 2
      const RMatrix fz = embed_f(HermitianMatrix(outer(z, z))).mat();
      RMatrix uv(2 * m, 2 * m);
      for (std::size_t i = 0; i < 2 * m; ++i)
        for (std::size_t j = 0; j < 2 * m; ++j) uv(i, j) = 0.5 * (u[i] * u[j] + v[i] * v[j]);
      REQUIRE(rel_diff(fz, uv) < 1e-14);

      // T_r commutes with f(A) and maps u to v
      REQUIRE(rel_diff(tr * fa.mat(), fa.mat() * tr) < 1e-15);
      REQUIRE(tr * u == v);
    }
  }
}
