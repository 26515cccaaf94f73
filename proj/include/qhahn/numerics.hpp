#pragma once

// Dense and tridiagonal linear algebra used by the rest of the library.
// Everything is templated on the scalar so the same code runs in double
// and in software extended precision (boost::multiprecision).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qhahn/errors.hpp"

namespace qhahn {

namespace detail {

template <class Real>
Real hypot2(const Real& a, const Real& b) {
  using std::abs;
  using std::sqrt;
  const Real x = abs(a);
  const Real y = abs(b);
  const Real big = x > y ? x : y;
  if (big == Real(0)) return Real(0);
  const Real small = x > y ? y : x;
  const Real r = small / big;
  return big * sqrt(Real(1) + r * r);
}

template <class Real>
Real with_sign(const Real& magnitude, const Real& sign_of) {
  using std::abs;
  return sign_of < Real(0) ? -abs(magnitude) : abs(magnitude);
}

}  // namespace detail

/// Row-major dense matrix with value semantics.
template <class Real>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const Real& fill = Real(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Real(1);
    return m;
  }

  static Matrix diagonal(std::span<const Real> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  Real& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Real& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const Real> data() const noexcept { return data_; }

  std::vector<Real> diagonal_entries() const {
    std::vector<Real> d(std::min(rows_, cols_));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (*this)(i, i);
    return d;
  }

  std::vector<Real> column(std::size_t j) const {
    std::vector<Real> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o, "+=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    require_same_shape(o, "-=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(const Real& s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, const Real& s) { return a *= s; }
  friend Matrix operator*(const Real& s, Matrix a) { return a *= s; }
  friend Matrix operator-(Matrix a) { return a *= Real(-1); }
  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_)
      throw ShapeMismatch("matmul: " + a.shape_string() + " * " + b.shape_string());
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const Real& aik = a(i, k);
        if (aik == Real(0)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

 private:
  void require_same_shape(const Matrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw ShapeMismatch(std::string(what) + ": " + shape_string() + " vs " + o.shape_string());
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

template <class Real>
Matrix<Real> matmul(const Matrix<Real>& a, const Matrix<Real>& b) {
  return a * b;
}

template <class Real>
Matrix<Real> commutator(const Matrix<Real>& l, const Matrix<Real>& m) {
  return l * m - m * l;
}

template <class Real>
Matrix<Real> anticommutator(const Matrix<Real>& l, const Matrix<Real>& m) {
  return l * m + m * l;
}

/// q-mutator q*L*M - q^{-1}*M*L.
template <class Real>
Matrix<Real> q_mutator(const Matrix<Real>& l, const Matrix<Real>& m, const Real& q) {
  return q * (l * m) - (m * l) * (Real(1) / q);
}

template <class Real>
Real frobenius(const Matrix<Real>& m) {
  using std::sqrt;
  // scaled accumulation keeps entries near 1e150 from overflowing
  Real scale(0);
  for (const auto& v : m.data()) {
    using std::abs;
    scale = std::max(scale, Real(abs(v)));
  }
  if (scale == Real(0)) return Real(0);
  Real sum(0);
  for (const auto& v : m.data()) {
    const Real t = v / scale;
    sum += t * t;
  }
  return scale * sqrt(sum);
}

template <class Real>
Real max_abs(const Matrix<Real>& m) {
  using std::abs;
  Real best(0);
  for (const auto& v : m.data()) best = std::max(best, Real(abs(v)));
  return best;
}

template <class Real>
Matrix<Real> kron(const Matrix<Real>& a, const Matrix<Real>& b) {
  Matrix<Real> k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (a(i, j) == Real(0)) continue;
      for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t c = 0; c < b.cols(); ++c)
          k(i * b.rows() + r, j * b.cols() + c) = a(i, j) * b(r, c);
    }
  return k;
}

/// Residual norm divided by the summed norms of the terms that produced it.
/// Exact identities evaluated in floating point land near machine epsilon
/// on this scale regardless of how much the terms cancel.
template <class Real>
Real relative_residual(const Real& residual_norm, std::initializer_list<Real> term_norms) {
  Real scale(0);
  for (const auto& t : term_norms) scale += t;
  return scale > Real(0) ? residual_norm / scale : residual_norm;
}

template <class Real>
Real relative_residual(const Matrix<Real>& residual, std::initializer_list<Real> term_norms) {
  return relative_residual(frobenius(residual), term_norms);
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigenproblem

template <class Real>
struct SymTridiagonal {
  std::vector<Real> diag;
  std::vector<Real> offdiag;  // offdiag[i] couples i and i+1

  std::size_t size() const noexcept { return diag.size(); }

  Matrix<Real> to_matrix() const {
    Matrix<Real> m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    for (std::size_t i = 0; i < offdiag.size(); ++i) {
      m(i + 1, i) = offdiag[i];
      m(i, i + 1) = offdiag[i];
    }
    return m;
  }

  Real max_norm() const {
    using std::abs;
    Real best(0);
    for (const auto& d : diag) best = std::max(best, Real(abs(d)));
    for (const auto& e : offdiag) best = std::max(best, Real(abs(e)));
    return best;
  }
};

template <class Real>
struct EigenDecomposition {
  std::vector<Real> values;  // ascending
  Matrix<Real> vectors;      // column j belongs to values[j]
};

namespace detail {

// Implicit QL with Wilkinson shift. Deflation uses the relative test
// e^2 <= eps^2 |d_m d_{m+1}|, which keeps small eigenvalues of graded
// matrices accurate provided the grading increases towards the bottom.
template <class Real>
void ql_implicit(std::vector<Real>& d, std::vector<Real>& e, Matrix<Real>& z, std::size_t max_iter) {
  using std::abs;
  const std::size_t n = d.size();
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real eps2 = eps * eps;
  const Real tiny = std::numeric_limits<Real>::min();
  std::size_t iterations = 0;

  for (std::size_t l = 0; l < n; ++l) {
    for (;;) {
      std::size_t m = l;
      for (; m + 1 < n; ++m) {
        if (e[m] * e[m] <= eps2 * abs(d[m]) * abs(d[m + 1]) + tiny) break;
      }
      if (m == l) break;
      if (++iterations > max_iter)
        throw ConvergenceFailure("tridiagonal QL exceeded " + std::to_string(max_iter) +
                                 " iterations");

      Real g = (d[l + 1] - d[l]) / (Real(2) * e[l]);
      Real r = hypot2(g, Real(1));
      g = d[m] - d[l] + e[l] / (g + with_sign(r, g));
      Real s(1), c(1), p(0);
      bool early = false;
      for (std::size_t ii = m; ii-- > l;) {
        const std::size_t i = ii;
        Real f = s * e[i];
        const Real b = c * e[i];
        r = hypot2(f, g);
        e[i + 1] = r;
        if (r == Real(0)) {
          d[i + 1] -= p;
          e[m] = Real(0);
          early = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + Real(2) * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        for (std::size_t k = 0; k < z.rows(); ++k) {
          f = z(k, i + 1);
          z(k, i + 1) = s * z(k, i) + c * f;
          z(k, i) = c * z(k, i) - s * f;
        }
      }
      if (early) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = Real(0);
    }
  }
}

}  // namespace detail

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric
/// tridiagonal matrix. Throws ConvergenceFailure after 50*m QL sweeps.
template <class Real>
EigenDecomposition<Real> eig_sym_tridiagonal(const SymTridiagonal<Real>& t) {
  using std::abs;
  const std::size_t n = t.size();
  if (n == 0) throw ShapeMismatch("eig_sym_tridiagonal: empty matrix");
  if (t.offdiag.size() + 1 != n)
    throw ShapeMismatch("eig_sym_tridiagonal: offdiag must have length m-1");

  // QL converges from the top; flip matrices whose large entries sit on top.
  const bool flip = abs(t.diag.back()) < abs(t.diag.front());
  std::vector<Real> d(n), e(n, Real(0));
  for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[flip ? n - 1 - i : i];
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = t.offdiag[flip ? n - 2 - i : i];
  Matrix<Real> z = Matrix<Real>::identity(n);

  detail::ql_implicit(d, e, z, 50 * n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  EigenDecomposition<Real> out{std::vector<Real>(n), Matrix<Real>(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = d[order[j]];
    for (std::size_t i = 0; i < n; ++i) out.vectors(flip ? n - 1 - i : i, j) = z(i, order[j]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Least squares

template <class Real>
struct LeastSquaresResult {
  std::vector<Real> solution;
  Real residual{0};  // ||A x - b||_2
  std::size_t rank = 0;
  bool rank_deficient = false;
  std::vector<Real> singular_values;  // descending
};

/// Minimum-norm least-squares solution via one-sided Jacobi SVD.
/// Singular values below rcond * sigma_max are treated as zero.
template <class Real>
LeastSquaresResult<Real> least_squares(const Matrix<Real>& design, std::span<const Real> rhs,
                                       Real rcond = Real(-1)) {
  using std::abs;
  using std::sqrt;
  const std::size_t m = design.rows();
  const std::size_t n = design.cols();
  if (rhs.size() != m)
    throw ShapeMismatch("least_squares: design is " + design.shape_string() + ", rhs has " +
                        std::to_string(rhs.size()) + " entries");
  const Real eps = std::numeric_limits<Real>::epsilon();
  if (rcond < Real(0)) rcond = Real(static_cast<double>(std::max(m, n))) * eps;

  Matrix<Real> u = design;
  Matrix<Real> v = Matrix<Real>::identity(n);
  auto col_dot = [&](std::size_t p, std::size_t q) {
    Real s(0);
    for (std::size_t i = 0; i < m; ++i) s += u(i, p) * u(i, q);
    return s;
  };

  bool rotated = true;
  for (int sweep = 0; sweep < 80 && rotated; ++sweep) {
    rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const Real alpha = col_dot(p, p);
        const Real beta = col_dot(q, q);
        const Real gamma = col_dot(p, q);
        if (gamma == Real(0) || abs(gamma) <= eps * sqrt(alpha * beta)) continue;
        rotated = true;
        const Real zeta = (beta - alpha) / (Real(2) * gamma);
        const Real t = detail::with_sign(Real(1), zeta) / (abs(zeta) + sqrt(Real(1) + zeta * zeta));
        const Real c = Real(1) / sqrt(Real(1) + t * t);
        const Real s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const Real up = u(i, p);
          const Real uq = u(i, q);
          u(i, p) = c * up - s * uq;
          u(i, q) = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const Real vp = v(i, p);
          const Real vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
  }

  std::vector<Real> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = sqrt(col_dot(j, j));
  const Real smax = n ? *std::max_element(sigma.begin(), sigma.end()) : Real(0);

  LeastSquaresResult<Real> out;
  out.solution.assign(n, Real(0));
  for (std::size_t j = 0; j < n; ++j) {
    if (sigma[j] <= rcond * smax || sigma[j] == Real(0)) continue;
    ++out.rank;
    Real proj(0);
    for (std::size_t i = 0; i < m; ++i) proj += u(i, j) * rhs[i];
    const Real coef = proj / (sigma[j] * sigma[j]);
    for (std::size_t i = 0; i < n; ++i) out.solution[i] += coef * v(i, j);
  }
  out.rank_deficient = out.rank < n;

  Real res(0);
  for (std::size_t i = 0; i < m; ++i) {
    Real ax(0);
    for (std::size_t j = 0; j < n; ++j) ax += design(i, j) * out.solution[j];
    res += (ax - rhs[i]) * (ax - rhs[i]);
  }
  out.residual = sqrt(res);
  out.singular_values = sigma;
  std::sort(out.singular_values.begin(), out.singular_values.end(), std::greater<Real>());
  return out;
}

}  // namespace qhahn
