// SPDX-License-Identifier: Apache-2.0
//
// Small dense complex/real linear algebra for desk-scale dimensions (m <= 64),
// plus the structural operators used by the asymptotic formulas: column
// stacking, Kronecker products, the commutation permutation and the
// Hermitian-to-real-symmetric embedding.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "robust_scatter/error.hpp"

namespace robust_scatter {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

/// Row-major dense matrix.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw InvalidArgument("Matrix: data size does not match shape");
  }

  static Matrix identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = T(1);
    return out;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix out(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out(i, i) = T(d[i]);
    return out;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  Matrix& operator+=(const Matrix& other) {
    check_same_shape(other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& other) {
    check_same_shape(other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
  }
  Matrix& operator*=(T scalar) {
    for (auto& x : data_) x *= scalar;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, T s) { return a *= s; }
  friend Matrix operator*(T s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw InvalidArgument("Matrix product: inner dimensions differ");
    Matrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T aik = a(i, k);
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend std::vector<T> operator*(const Matrix& a, std::span<const T> x) {
    if (a.cols_ != x.size()) throw InvalidArgument("Matrix-vector product: size mismatch");
    std::vector<T> out(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      T acc{};
      for (std::size_t j = 0; j < a.cols_; ++j) acc += a(i, j) * x[j];
      out[i] = acc;
    }
    return out;
  }
  friend std::vector<T> operator*(const Matrix& a, const std::vector<T>& x) {
    return a * std::span<const T>(x);
  }

  Matrix transpose() const {
    Matrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

  /// Conjugate transpose (plain transpose for real T).
  Matrix adjoint() const {
    Matrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = conj_of((*this)(i, j));
    return out;
  }

  Matrix conjugate() const {
    Matrix out = *this;
    for (auto& x : out.data_) x = conj_of(x);
    return out;
  }

  double frobenius_norm() const {
    double acc = 0.0;
    for (const auto& x : data_) acc += std::norm(x);
    return std::sqrt(acc);
  }

  T trace() const {
    T acc{};
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) acc += (*this)(i, i);
    return acc;
  }

  bool operator==(const Matrix&) const = default;

 private:
  static T conj_of(const T& x) {
    if constexpr (std::is_same_v<T, cplx>) {
      return std::conj(x);
    } else {
      return x;
    }
  }
  void check_same_shape(const Matrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw InvalidArgument("Matrix: shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using CMatrix = Matrix<cplx>;
using RMatrix = Matrix<double>;

/// Complex square matrix with conjugate symmetry. Construction replaces the
/// input by (A + A^H)/2, so every value of this type is exactly Hermitian.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(CMatrix a);

  static HermitianMatrix identity(std::size_t m) { return HermitianMatrix(CMatrix::identity(m)); }
  static HermitianMatrix diagonal(std::span<const double> d) { return HermitianMatrix(CMatrix::diagonal(d)); }

  std::size_t dim() const noexcept { return a_.rows(); }
  const CMatrix& mat() const noexcept { return a_; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return a_(i, j); }

  double trace() const { return a_.trace().real(); }
  double frobenius_norm() const { return a_.frobenius_norm(); }

  HermitianMatrix scaled(double alpha) const;

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
    return HermitianMatrix(a.a_ + b.a_);
  }
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
    return HermitianMatrix(a.a_ - b.a_);
  }
  bool operator==(const HermitianMatrix&) const = default;

 private:
  CMatrix a_;
};

/// Real symmetric matrix, symmetrized on construction.
class RealSymMatrix {
 public:
  RealSymMatrix() = default;
  explicit RealSymMatrix(RMatrix a);

  std::size_t dim() const noexcept { return a_.rows(); }
  const RMatrix& mat() const noexcept { return a_; }
  double operator()(std::size_t i, std::size_t j) const { return a_(i, j); }

 private:
  RMatrix a_;
};

/// The m^2 x m^2 permutation K with K vec(A) = vec(A^T), kept as an index map.
class CommutationMatrix {
 public:
  explicit CommutationMatrix(std::size_t m) : m_(m) {}

  std::size_t m() const noexcept { return m_; }
  std::size_t size() const noexcept { return m_ * m_; }

  /// Source index of entry k of K x: (K x)[k] = x[source(k)].
  std::size_t source(std::size_t k) const noexcept {
    const std::size_t i = k % m_;
    const std::size_t j = k / m_;
    return j + i * m_;
  }

  CVector apply(std::span<const cplx> x) const;

  /// Right multiplication A K (columns permuted).
  CMatrix right_multiply(const CMatrix& a) const;

  /// Dense form, for tests only.
  CMatrix dense() const;

 private:
  std::size_t m_;
};

/// Column-major stacking of an m x n matrix.
CVector vec(const CMatrix& a);
CMatrix unvec(std::span<const cplx> v, std::size_t rows, std::size_t cols);

CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector commutation_apply(const CommutationMatrix& k, std::span<const cplx> x);

/// Outer product x y^H.
CMatrix outer(std::span<const cplx> x, std::span<const cplx> y);
cplx dot_conj(std::span<const cplx> x, std::span<const cplx> y);  // x^H y
double squared_norm(std::span<const cplx> x);

struct HermitianEigen {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // columns are eigenvectors
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
HermitianEigen herm_eig(const HermitianMatrix& a);

/// Principal square root of a positive-definite Hermitian matrix.
HermitianMatrix herm_sqrt(const HermitianMatrix& a);

inline constexpr double kDefaultConditionCap = 1e12;

/// Inverse through the eigendecomposition. Throws SingularMatrix when the
/// spectral condition number exceeds `condition_cap` and NotPositiveDefinite
/// on a non-positive eigenvalue.
HermitianMatrix herm_inv(const HermitianMatrix& a, double condition_cap = kDefaultConditionCap);

/// General square inverse by Gauss-Jordan elimination with partial pivoting.
template <class T>
Matrix<T> lu_inverse(const Matrix<T>& a);

/// Lower Cholesky factor A = L L^H of a positive-definite Hermitian matrix.
class Cholesky {
 public:
  /// Throws NotPositiveDefinite on a non-positive pivot.
  explicit Cholesky(const HermitianMatrix& a);

  std::size_t dim() const noexcept { return l_.rows(); }
  const CMatrix& factor() const noexcept { return l_; }

  /// Writes L^{-1} x into out.
  void solve_lower(std::span<const cplx> x, std::span<cplx> out) const;
  CVector solve_lower(std::span<const cplx> x) const;

  /// x^H A^{-1} x.
  double inverse_quad_form(std::span<const cplx> x) const;

  /// (max L_ii / min L_ii)^2, a lower bound on the spectral condition number.
  double condition_estimate() const;

 private:
  CMatrix l_;
};

/// f(A) = 1/2 [[Re A, -Im A], [Im A, Re A]].
RealSymMatrix embed_f(const HermitianMatrix& a);

/// Inverse of embed_f: A = g^H f(A) g with g^T = (I, -jI). The input must have
/// the block structure produced by embed_f.
HermitianMatrix unembed_f(const RealSymMatrix& f);

/// u = (Re z; Im z).
std::vector<double> stack_real(std::span<const cplx> z);
/// v = (-Im z; Re z).
std::vector<double> stack_rotated(std::span<const cplx> z);

}  // namespace robust_scatter
