// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/linalg.hpp"

#include <limits>
#include <numeric>
#include <string>

namespace robust_scatter {

namespace {

void require_square(const CMatrix& a, const char* who) {
  if (!a.square()) throw InvalidArgument(std::string(who) + ": matrix is not square");
}

}  // namespace

HermitianMatrix::HermitianMatrix(CMatrix a) : a_(std::move(a)) {
  require_square(a_, "HermitianMatrix");
  const std::size_t n = a_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    a_(i, i) = cplx(a_(i, i).real(), 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx avg = 0.5 * (a_(i, j) + std::conj(a_(j, i)));
      a_(i, j) = avg;
      a_(j, i) = std::conj(avg);
    }
  }
}

HermitianMatrix HermitianMatrix::scaled(double alpha) const { return HermitianMatrix(a_ * cplx(alpha)); }

RealSymMatrix::RealSymMatrix(RMatrix a) : a_(std::move(a)) {
  if (!a_.square()) throw InvalidArgument("RealSymMatrix: matrix is not square");
  const std::size_t n = a_.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (a_(i, j) + a_(j, i));
      a_(i, j) = avg;
      a_(j, i) = avg;
    }
}

CVector CommutationMatrix::apply(std::span<const cplx> x) const {
  if (x.size() != size()) throw InvalidArgument("commutation_apply: vector length is not m^2");
  CVector out(x.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[source(k)];
  return out;
}

CMatrix CommutationMatrix::right_multiply(const CMatrix& a) const {
  if (a.cols() != size()) throw InvalidArgument("CommutationMatrix::right_multiply: column count is not m^2");
  CMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t c = 0; c < a.cols(); ++c) out(i, c) = a(i, source(c));
  return out;
}

CMatrix CommutationMatrix::dense() const {
  CMatrix out(size(), size());
  for (std::size_t k = 0; k < size(); ++k) out(k, source(k)) = 1.0;
  return out;
}

CVector vec(const CMatrix& a) {
  CVector out(a.rows() * a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) out[i + j * a.rows()] = a(i, j);
  return out;
}

CMatrix unvec(std::span<const cplx> v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw InvalidArgument("unvec: length does not match shape");
  CMatrix out(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) out(i, j) = v[i + j * rows];
  return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

CVector commutation_apply(const CommutationMatrix& k, std::span<const cplx> x) { return k.apply(x); }

CMatrix outer(std::span<const cplx> x, std::span<const cplx> y) {
  CMatrix out(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) out(i, j) = x[i] * std::conj(y[j]);
  return out;
}

cplx dot_conj(std::span<const cplx> x, std::span<const cplx> y) {
  if (x.size() != y.size()) throw InvalidArgument("dot_conj: size mismatch");
  cplx acc{};
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

double squared_norm(std::span<const cplx> x) {
  double acc = 0.0;
  for (const auto& v : x) acc += std::norm(v);
  return acc;
}

HermitianEigen herm_eig(const HermitianMatrix& input) {
  constexpr int kMaxSweeps = 100;
  const std::size_t n = input.dim();
  CMatrix a = input.mat();
  CMatrix v = CMatrix::identity(n);
  const double scale = a.frobenius_norm();
  const double eps = std::numeric_limits<double>::epsilon();

  auto off_diagonal = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) acc += std::norm(a(i, j));
    return std::sqrt(2.0 * acc);
  };

  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal() <= eps * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double b = std::abs(a(p, q));
        if (b == 0.0 || b < std::numeric_limits<double>::min()) continue;
        const cplx phase = a(p, q) / b;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * b);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // U = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on the (p, q) plane.
        const cplx upp = c;
        const cplx upq = s;
        const cplx uqp = -s * std::conj(phase);
        const cplx uqq = c * std::conj(phase);

        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q);
          v(k, p) = vkp * upp + vkq * uqp;
          v(k, q) = vkp * upq + vkq * uqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }
  if (sweep == kMaxSweeps && off_diagonal() > eps * scale * 16.0)
    throw NumericalError("herm_eig: Jacobi sweeps did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

  HermitianEigen out;
  out.values.resize(n);
  out.vectors = CMatrix(n, n);
  out.sweeps = sweep;
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]).real();
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

namespace {

HermitianMatrix spectral_function(const HermitianEigen& e, auto&& fn) {
  const std::size_t n = e.values.size();
  CMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double g = fn(e.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const cplx vik = e.vectors(i, k) * g;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * std::conj(e.vectors(j, k));
    }
  }
  return HermitianMatrix(std::move(out));
}

}  // namespace

HermitianMatrix herm_sqrt(const HermitianMatrix& a) {
  const auto e = herm_eig(a);
  if (e.values.empty()) return a;
  if (!(e.values.front() > 0.0)) throw NotPositiveDefinite("herm_sqrt: matrix is not positive definite");
  return spectral_function(e, [](double x) { return std::sqrt(x); });
}

HermitianMatrix herm_inv(const HermitianMatrix& a, double condition_cap) {
  const auto e = herm_eig(a);
  if (e.values.empty()) return a;
  const double lo = e.values.front();
  const double hi = e.values.back();
  if (!(lo > 0.0)) throw NotPositiveDefinite("herm_inv: matrix is not positive definite");
  const double condition = hi / lo;
  if (condition > condition_cap)
    throw SingularMatrix("herm_inv: condition number " + std::to_string(condition) + " exceeds cap", condition);
  return spectral_function(e, [](double x) { return 1.0 / x; });
}

template <class T>
Matrix<T> lu_inverse(const Matrix<T>& input) {
  if (!input.square()) throw InvalidArgument("lu_inverse: matrix is not square");
  const std::size_t n = input.rows();
  Matrix<T> a = input;
  Matrix<T> inv = Matrix<T>::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) == 0.0) throw SingularMatrix("lu_inverse: zero pivot", std::numeric_limits<double>::infinity());
    if (pivot != col)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(pivot, j), a(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
    const T d = a(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      a(col, j) /= d;
      inv(col, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const T f = a(r, col);
      if (f == T(0)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

template RMatrix lu_inverse(const RMatrix&);
template CMatrix lu_inverse(const CMatrix&);

Cholesky::Cholesky(const HermitianMatrix& a) : l_(a.dim(), a.dim()) {
  const std::size_t n = a.dim();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l_(j, k));
    if (!(d > 0.0)) throw NotPositiveDefinite("Cholesky: non-positive pivot at column " + std::to_string(j));
    const double ljj = std::sqrt(d);
    l_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * std::conj(l_(j, k));
      l_(i, j) = s / ljj;
    }
  }
}

void Cholesky::solve_lower(std::span<const cplx> x, std::span<cplx> out) const {
  const std::size_t n = dim();
  for (std::size_t i = 0; i < n; ++i) {
    cplx s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * out[k];
    out[i] = s / l_(i, i).real();
  }
}

CVector Cholesky::solve_lower(std::span<const cplx> x) const {
  if (x.size() != dim()) throw InvalidArgument("Cholesky::solve_lower: size mismatch");
  CVector out(x.size());
  solve_lower(x, out);
  return out;
}

double Cholesky::inverse_quad_form(std::span<const cplx> x) const {
  const std::size_t n = dim();
  double acc = 0.0;
  // Forward substitution without allocation for the small dimensions used here.
  cplx buf[64];
  CVector heap;
  cplx* w = buf;
  if (n > 64) {
    heap.resize(n);
    w = heap.data();
  }
  for (std::size_t i = 0; i < n; ++i) {
    cplx s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * w[k];
    w[i] = s / l_(i, i).real();
    acc += std::norm(w[i]);
  }
  return acc;
}

double Cholesky::condition_estimate() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    lo = std::min(lo, l_(i, i).real());
    hi = std::max(hi, l_(i, i).real());
  }
  const double r = hi / lo;
  return r * r;
}

RealSymMatrix embed_f(const HermitianMatrix& a) {
  const std::size_t m = a.dim();
  RMatrix f(2 * m, 2 * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double re = 0.5 * a(i, j).real();
      const double im = 0.5 * a(i, j).imag();
      f(i, j) = re;
      f(i, j + m) = -im;
      f(i + m, j) = im;
      f(i + m, j + m) = re;
    }
  return RealSymMatrix(std::move(f));
}

HermitianMatrix unembed_f(const RealSymMatrix& f) {
  if (f.dim() % 2 != 0) throw InvalidArgument("unembed_f: dimension is odd");
  const std::size_t m = f.dim() / 2;
  // g^H f g with g = (I; -jI): blocks combine as F11 + F22 + j(F21 - F12).
  CMatrix a(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      a(i, j) = cplx(f(i, j) + f(i + m, j + m), f(i + m, j) - f(i, j + m));
  return HermitianMatrix(std::move(a));
}

std::vector<double> stack_real(std::span<const cplx> z) {
  const std::size_t m = z.size();
  std::vector<double> u(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    u[i] = z[i].real();
    u[i + m] = z[i].imag();
  }
  return u;
}

std::vector<double> stack_rotated(std::span<const cplx> z) {
  const std::size_t m = z.size();
  std::vector<double> v(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    v[i] = -z[i].imag();
    v[i + m] = z[i].real();
  }
  return v;
}

}  // namespace robust_scatter
