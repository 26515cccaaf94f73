#pragma once

// Clebsch-Gordan overlaps between the product basis (rows n = n_a) and the
// coupled basis (columns x, coupled weight mu_a + mu_b + x) on one sector.
// Three routes: diagonalization of the sector Casimir, the three-term
// recurrence in n, and a terminating 3phi2 in base q^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qhahn/algebra.hpp"
#include "qhahn/coupling.hpp"
#include "qhahn/errors.hpp"
#include "qhahn/numerics.hpp"
#include "qhahn/qcore.hpp"

namespace qhahn {

enum class Labeling { analytic, rank_order };

inline const char* labeling_name(Labeling l) { return l == Labeling::analytic ? "analytic" : "rank-order"; }

template <class Real = double>
struct CGTable {
  int N = 0;
  Matrix<Real> coeffs;       // (n, x)
  std::vector<Real> eigenvalues;  // attached to columns
  Labeling labeling = Labeling::analytic;
};

/// lambda(x) = Q_C(mu_a + mu_b + x), x = 0..N.
template <class Real>
std::vector<Real> coupled_eigenvalues(const SectorRep<Real>& s) {
  std::vector<Real> out;
  for (int x = 0; x <= s.N; ++x) out.push_back(casimir_value(s.specC, s.mu_a + s.mu_b + Real(x)));
  return out;
}

namespace detail {

template <class Real>
void require_unitary(const SectorRep<Real>& s) {
  if (!s.unitary) throw RequiresUnitary("CG requires unitary mode (some factor has r_n^2 <= 0)");
}

// Flip the column so that its first entry above 2^-26 * max|v| is positive.
// The threshold is fixed so every number type picks the same pivot.
template <class Real>
void fix_column_sign(Matrix<Real>& m, std::size_t col) {
  using std::abs;
  Real big(0);
  for (std::size_t i = 0; i < m.rows(); ++i) big = std::max(big, Real(abs(m(i, col))));
  const Real threshold = Real(1.4901161193847656e-8) * big;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (abs(m(i, col)) > threshold) {
      if (m(i, col) < Real(0))
        for (std::size_t k = 0; k < m.rows(); ++k) m(k, col) = -m(k, col);
      return;
    }
  }
}

template <class Real>
void normalize_column(Matrix<Real>& m, std::size_t col) {
  using std::abs;
  using std::sqrt;
  Real big(0);
  for (std::size_t i = 0; i < m.rows(); ++i) big = std::max(big, Real(abs(m(i, col))));
  if (big == Real(0)) return;
  Real sum(0);
  for (std::size_t i = 0; i < m.rows(); ++i) sum += (m(i, col) / big) * (m(i, col) / big);
  const Real norm = big * sqrt(sum);
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, col) /= norm;
}

// Order in which columns x = 0..N appear under rank-order labeling.
template <class Real>
std::vector<std::size_t> ascending_order(const std::vector<Real>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

}  // namespace detail

struct DiagonalizationOptions {
  double degeneracy = 1e-8;  // minimal eigenvalue gap, relative to the larger of the pair
  double matching = 1e-6;    // analytic label tolerance, relative to max |Q|
};

/// Columns are the eigenvectors of the sector Casimir.
template <class Real>
CGTable<Real> cg_by_diagonalization(const SectorRep<Real>& s, const DiagonalizationOptions& opt = {}) {
  using std::abs;
  detail::require_unitary(s);
  const std::size_t m = s.size();
  SymTridiagonal<Real> t;
  for (std::size_t i = 0; i < m; ++i) t.diag.push_back(s.QC(i, i));
  for (std::size_t i = 0; i + 1 < m; ++i) t.offdiag.push_back(s.QC(i, i + 1));
  const auto eig = eig_sym_tridiagonal(t);

  // Sector spectra are geometric, so gaps are judged locally.
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (eig.values[i + 1] - eig.values[i] <=
        Real(opt.degeneracy) * std::max(Real(abs(eig.values[i])), Real(abs(eig.values[i + 1]))))
      throw DegenerateSpectrum("sector N = " + std::to_string(s.N) + ": eigenvalues " + std::to_string(i) +
                               " and " + std::to_string(i + 1) + " coincide");

  CGTable<Real> table{s.N, Matrix<Real>(m, m), std::vector<Real>(m), Labeling::rank_order};
  std::vector<std::size_t> column_of(m);  // eigen index for column x
  std::iota(column_of.begin(), column_of.end(), std::size_t{0});

  if (s.specC.a1 * s.specC.a2 != Real(0)) {
    // Sorted-to-sorted matching is the optimal assignment on the line.
    const auto target = coupled_eigenvalues(s);
    const auto order = detail::ascending_order(target);
    Real scale(0), worst(0);
    for (const auto& v : target) scale = std::max(scale, Real(abs(v)));
    for (std::size_t k = 0; k < m; ++k) worst = std::max(worst, Real(abs(eig.values[k] - target[order[k]])));
    if (worst <= Real(opt.matching) * scale) {
      table.labeling = Labeling::analytic;
      for (std::size_t k = 0; k < m; ++k) column_of[order[k]] = k;
    }
  }

  for (std::size_t x = 0; x < m; ++x) {
    const std::size_t k = column_of[x];
    table.eigenvalues[x] = eig.values[k];
    for (std::size_t n = 0; n < m; ++n) table.coeffs(n, x) = eig.vectors(n, k);
    detail::fix_column_sign(table.coeffs, x);
  }
  return table;
}

/// Solution of (T - lambda) v = 0 for a tridiagonal T, from forward ratios
/// v_n / v_{n-1} and backward ratios v_n / v_{n+1} spliced where the twisted
/// pivot is smallest. Scaled so that the splice entry equals 1.
template <class Real>
std::vector<Real> twisted_null_vector(const Matrix<Real>& T, const Real& lambda) {
  using std::abs;
  const std::size_t m = T.rows();
  std::vector<Real> v(m, Real(0));
  if (m == 1) {
    v[0] = Real(1);
    return v;
  }
  const Real tiny = std::numeric_limits<Real>::min();
  auto guard = [&](const Real& x) { return x == Real(0) ? tiny : x; };

  // fwd[n] = v_n / v_{n-1}, n >= 1
  std::vector<Real> fwd(m, Real(0)), bwd(m, Real(0));
  fwd[1] = (lambda - T(0, 0)) / T(0, 1);
  for (std::size_t n = 1; n + 1 < m; ++n)
    fwd[n + 1] = ((lambda - T(n, n)) - T(n, n - 1) / guard(fwd[n])) / T(n, n + 1);
  // bwd[n] = v_n / v_{n+1}, n <= m-2
  bwd[m - 2] = (lambda - T(m - 1, m - 1)) / T(m - 1, m - 2);
  for (std::size_t n = m - 2; n >= 1; --n) bwd[n - 1] = ((lambda - T(n, n)) - T(n, n + 1) / guard(bwd[n])) / T(n, n - 1);

  std::size_t k = 0;
  Real best = std::numeric_limits<Real>::infinity();
  for (std::size_t n = 0; n < m; ++n) {
    Real gamma = T(n, n) - lambda;
    if (n >= 1) gamma += T(n, n - 1) / guard(fwd[n]);
    if (n + 1 < m) gamma += T(n, n + 1) / guard(bwd[n]);
    if (abs(gamma) < best) {
      best = abs(gamma);
      k = n;
    }
  }
  v[k] = Real(1);
  for (std::size_t n = k; n >= 1; --n) v[n - 1] = v[n] / guard(fwd[n]);
  for (std::size_t n = k; n + 1 < m; ++n) v[n + 1] = v[n] / guard(bwd[n]);
  return v;
}

namespace detail {

template <class Real>
void require_nonzero_offdiagonals(const SectorRep<Real>& s) {
  using std::abs;
  const Real scale = max_abs(s.QC);
  const Real floor = std::numeric_limits<Real>::min() * (scale > Real(0) ? scale : Real(1));
  for (int n = 0; n < s.N; ++n)
    if (abs(s.QC(n, n + 1)) <= floor || abs(s.QC(n + 1, n)) <= floor) throw ZeroSubdiagonal(n + 1);
}

}  // namespace detail

/// P_n(x) with P_0(x) = 1, from the recurrence
///   lambda(x) P_n = Z_n P_n + W_n P_{n-1} + W_{n+1} P_{n+1},
/// Z_n, W_n read from the sector matrix. Evaluated through the twisted
/// solution, so entries keep full relative accuracy where they are large.
template <class Real>
Matrix<Real> recurrence_polynomials(const SectorRep<Real>& s) {
  detail::require_nonzero_offdiagonals(s);
  const auto lambda = coupled_eigenvalues(s);
  const std::size_t m = s.size();
  Matrix<Real> P(m, m);
  for (std::size_t x = 0; x < m; ++x) {
    const auto v = twisted_null_vector(s.QC, lambda[x]);
    for (std::size_t n = 0; n < m; ++n) P(n, x) = v[n] / v[0];
    P(0, x) = Real(1);
  }
  return P;
}

template <class Real>
CGTable<Real> cg_by_recurrence(const SectorRep<Real>& s) {
  detail::require_unitary(s);
  detail::require_nonzero_offdiagonals(s);
  const auto lambda = coupled_eigenvalues(s);
  const std::size_t m = s.size();
  const bool analytic = s.specC.a1 * s.specC.a2 != Real(0);
  const auto order = analytic ? [&] {
    std::vector<std::size_t> id(m);
    std::iota(id.begin(), id.end(), std::size_t{0});
    return id;
  }()
                              : detail::ascending_order(lambda);

  CGTable<Real> table{s.N, Matrix<Real>(m, m), std::vector<Real>(m),
                      analytic ? Labeling::analytic : Labeling::rank_order};
  for (std::size_t col = 0; col < m; ++col) {
    const std::size_t x = order[col];
    const auto v = twisted_null_vector(s.QC, lambda[x]);
    for (std::size_t n = 0; n < m; ++n) table.coeffs(n, col) = v[n];
    table.eigenvalues[col] = lambda[x];
    detail::normalize_column(table.coeffs, col);
    detail::fix_column_sign(table.coeffs, col);
  }
  return table;
}

/// max |C^T C - I| and |C C^T - I| entries.
template <class Real>
Real orthogonality_check(const CGTable<Real>& t) {
  const auto I = Matrix<Real>::identity(t.coeffs.rows());
  const Matrix<Real> ct = t.coeffs.transpose();
  return std::max(max_abs(ct * t.coeffs - I), max_abs(t.coeffs * ct - I));
}

template <class Real>
Real max_entry_deviation(const CGTable<Real>& a, const CGTable<Real>& b) {
  if (a.coeffs.rows() != b.coeffs.rows() || a.coeffs.cols() != b.coeffs.cols())
    throw ShapeMismatch("tables of different shapes: " + a.coeffs.shape_string() + " vs " + b.coeffs.shape_string());
  return max_abs(a.coeffs - b.coeffs);
}

// ---------------------------------------------------------------------------
// Closed q-Hahn form

/// r = (a1/a2) q^{4 mu_a - 2}, s = sign (b2/b1) q^{4 mu_b}, and the Z_n
/// coefficients D, E. The sign lets both readings of the sign relation
/// between a1 and b2 be tried.
template <class Real = double>
struct QHahnParams {
  Real r{0}, s{0};
  Real s_inv_r{0};  // s^{-1} r, formed directly so it stays finite when a1 = b2 = 0
  Real D{0}, E{0};
  int N = 0;
  int s_sign = 1;
  bool defined = true;  // false when a2 b1 = 0
};

template <class Real>
QHahnParams<Real> make_qhahn_params(const SectorRep<Real>& sec, int s_sign = 1) {
  const auto& q = sec.q();
  const Real a2 = sec.specA.a2, a1 = sec.specA.a1;
  const Real b2 = sec.specB.a2, b1 = sec.specB.a1;
  const Real sign(s_sign < 0 ? -1 : 1);
  const int N = sec.N;

  QHahnParams<Real> p;
  p.N = N;
  p.s_sign = s_sign < 0 ? -1 : 1;
  p.defined = a2 != Real(0) && b1 != Real(0);
  if (!p.defined) return p;
  p.r = a1 / a2 * q.pow(Real(4) * sec.mu_a - Real(2));
  p.s = sign * b2 / b1 * q.pow(Real(4) * sec.mu_b);
  p.s_inv_r = sign * b1 / a2 * q.pow(Real(4) * sec.mu_a - Real(4) * sec.mu_b - Real(2));
  const Real qq = q.value();
  const Real q2 = qq * qq;
  p.D = a2 * q.pow(Real(-2) * (sec.mu_a + sec.mu_b)) *
        (q.pow(Real(-2 * N)) + p.s_inv_r * q2 + p.r * q2 * (q2 + q.pow(Real(-2 * N))));
  p.E = a1 * (qq + q.inverse()) * q.pow(Real(2) * (sec.mu_a - sec.mu_b - Real(N)));
  return p;
}

enum class LowerParameter { rq, rq2 };

inline const char* lower_parameter_name(LowerParameter l) { return l == LowerParameter::rq ? "r q" : "r q^2"; }

/// 3phi2(q^{-2n}, q^{-2x}, s^{-1} r q^{2x}; q^{-2N}, lower; q^2, q^2) for all (n, x).
template <class Real>
Matrix<Real> qhahn_phi_table(const QHahnParams<Real>& p, const QBase<Real>& q, LowerParameter lower) {
  if (!p.defined) throw IncompatibleParameters("q-Hahn parameters need a2 b1 != 0");
  const std::size_t m = static_cast<std::size_t>(p.N) + 1;
  const Real q2 = q.value() * q.value();
  const Real low = lower == LowerParameter::rq ? p.r * q.value() : p.r * q2;
  Matrix<Real> phi(m, m);
  for (std::size_t n = 0; n < m; ++n)
    for (std::size_t x = 0; x < m; ++x) {
      const Real xn = Real(static_cast<double>(x));
      const Real nn = Real(static_cast<double>(n));
      const std::array<Real, 3> num{q.pow(Real(-2) * nn), q.pow(Real(-2) * xn), p.s_inv_r * q.pow(Real(2) * xn)};
      const std::array<Real, 2> den{q.pow(Real(-2 * p.N)), low};
      phi(n, x) = phi_3_2_terminating(num, den, q2, q2, std::min(n, x));
    }
  return phi;
}

template <class Real = double>
struct QHahnNormalization {
  std::vector<Real> h;  // row factors, h_0 = 1
  Real orthogonality_residual{0};
  bool positive_weights = true;  // every fitted h_n^2 > 0
};

/// Row factors h_n making the columns of h_n phi(n, x) mutually orthogonal
/// (dual orthogonality), with h_0 = 1. Signs make column `positive_column`
/// entrywise nonnegative.
template <class Real>
QHahnNormalization<Real> fit_row_normalization(const Matrix<Real>& phi, std::size_t positive_column) {
  using std::abs;
  using std::sqrt;
  const std::size_t m = phi.rows();
  QHahnNormalization<Real> out;
  out.h.assign(m, Real(1));
  if (m == 1) return out;

  const std::size_t eqs = m * (m - 1) / 2;
  Matrix<Real> design(eqs, m - 1);
  std::vector<Real> rhs(eqs);
  std::size_t row = 0;
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t y = x + 1; y < m; ++y, ++row) {
      Real scale = abs(phi(0, x) * phi(0, y));
      for (std::size_t n = 1; n < m; ++n) scale += abs(phi(n, x) * phi(n, y));
      if (scale == Real(0)) scale = Real(1);
      for (std::size_t n = 1; n < m; ++n) design(row, n - 1) = phi(n, x) * phi(n, y) / scale;
      rhs[row] = -phi(0, x) * phi(0, y) / scale;
    }
  std::vector<Real> col_norm(m - 1);
  for (std::size_t j = 0; j + 1 < m; ++j) {
    Real s(0);
    for (std::size_t i = 0; i < eqs; ++i) s += design(i, j) * design(i, j);
    col_norm[j] = sqrt(s);
    if (col_norm[j] > Real(0))
      for (std::size_t i = 0; i < eqs; ++i) design(i, j) /= col_norm[j];
  }
  const auto ls = least_squares(design, std::span<const Real>(rhs));
  out.orthogonality_residual = ls.residual;
  for (std::size_t n = 1; n < m; ++n) {
    const Real w = col_norm[n - 1] > Real(0) ? ls.solution[n - 1] / col_norm[n - 1] : Real(0);
    if (!(w > Real(0))) out.positive_weights = false;
    out.h[n] = sqrt(abs(w));
    if (phi(n, positive_column) < Real(0)) out.h[n] = -out.h[n];
  }
  return out;
}

/// Table from the closed form: C(n, x) proportional to h_n phi(n, x), columns
/// normalized. The sign column is the one with the largest lambda(x), whose
/// eigenvector has no sign changes because the off-diagonals are positive.
template <class Real>
CGTable<Real> cg_by_qhahn(const SectorRep<Real>& s, const QHahnParams<Real>& p, LowerParameter lower,
                          QHahnNormalization<Real>* normalization = nullptr) {
  detail::require_unitary(s);
  const auto phi = qhahn_phi_table(p, s.q(), lower);
  const auto lambda = coupled_eigenvalues(s);
  const std::size_t m = s.size();
  const std::size_t top = static_cast<std::size_t>(std::max_element(lambda.begin(), lambda.end()) - lambda.begin());
  const auto norm = fit_row_normalization(phi, top);
  if (normalization) *normalization = norm;

  const bool analytic = s.specC.a1 * s.specC.a2 != Real(0);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!analytic) order = detail::ascending_order(lambda);

  CGTable<Real> table{s.N, Matrix<Real>(m, m), std::vector<Real>(m),
                      analytic ? Labeling::analytic : Labeling::rank_order};
  for (std::size_t col = 0; col < m; ++col) {
    const std::size_t x = order[col];
    for (std::size_t n = 0; n < m; ++n) table.coeffs(n, col) = norm.h[n] * phi(n, x);
    table.eigenvalues[col] = lambda[x];
    detail::normalize_column(table.coeffs, col);
    detail::fix_column_sign(table.coeffs, col);
  }
  return table;
}

template <class Real = double>
struct QHahnCandidate {
  LowerParameter lower = LowerParameter::rq;
  int s_sign = 1;
  std::string status;  // "ok", "undefined", or the evaluation error
  std::optional<Real> max_deviation;  // against the recurrence table
  // max |R(n,x) R(0,0) / (R(n,0) R(0,x)) - 1| with R = C / phi; zero iff the
  // true table factors as (row factor) * phi * (column factor)
  std::optional<Real> separability;
  bool positive_weights = false;
  bool matches = false;
};

template <class Real = double>
struct QHahnAudit {
  int N = 0;
  Real tolerance{1e-6};
  std::vector<QHahnCandidate<Real>> candidates;
  bool any_match() const {
    return std::any_of(candidates.begin(), candidates.end(), [](const auto& c) { return c.matches; });
  }
};

template <class Real>
QHahnAudit<Real> qhahn_audit(const SectorRep<Real>& s, const CGTable<Real>& reference, Real tolerance = Real(1e-6)) {
  using std::abs;
  QHahnAudit<Real> audit;
  audit.N = s.N;
  audit.tolerance = tolerance;
  for (const auto lower : {LowerParameter::rq, LowerParameter::rq2})
    for (const int sign : {1, -1}) {
      QHahnCandidate<Real> c;
      c.lower = lower;
      c.s_sign = sign;
      const auto p = make_qhahn_params(s, sign);
      if (!p.defined) {
        c.status = "undefined";
        audit.candidates.push_back(c);
        continue;
      }
      try {
        QHahnNormalization<Real> norm;
        const auto table = cg_by_qhahn(s, p, lower, &norm);
        c.positive_weights = norm.positive_weights;
        c.max_deviation = max_entry_deviation(table, reference);
        c.matches = *c.max_deviation <= tolerance;

        const auto phi = qhahn_phi_table(p, s.q(), lower);
        Real sep(0);
        const std::size_t m = s.size();
        if (reference.labeling == Labeling::analytic && m > 1) {
          auto R = [&](std::size_t n, std::size_t x) { return reference.coeffs(n, x) / phi(n, x); };
          for (std::size_t n = 1; n < m; ++n)
            for (std::size_t x = 1; x < m; ++x) {
              const Real den = R(n, 0) * R(0, x);
              const Real val = R(n, x) * R(0, 0) / den - Real(1);
              if (den != Real(0) && std::isfinite(static_cast<double>(val))) sep = std::max(sep, Real(abs(val)));
            }
          c.separability = sep;
        }
        c.status = "ok";
      } catch (const Error& e) {
        c.status = e.what();
      }
      audit.candidates.push_back(c);
    }
  return audit;
}

// ---------------------------------------------------------------------------
// Closed-form audits of the recurrence data

template <class Real = double>
struct ScaledFit {
  std::string form;
  Real scale{0};      // best global factor
  Real deviation{0};  // max_n |truth - scale * form| / |truth| after scaling
  bool finite = true;
};

namespace detail {

template <class Real>
ScaledFit<Real> scaled_fit(std::string name, const std::vector<Real>& truth, const std::vector<Real>& form) {
  using std::abs;
  ScaledFit<Real> f{std::move(name), Real(0), Real(0), true};
  Real big(0);
  for (const auto& t : truth) big = std::max(big, Real(abs(t)));
  const Real floor = big > Real(0) ? big * Real(1e-300) : Real(1);
  Real num(0), den(0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!std::isfinite(static_cast<double>(form[i]))) f.finite = false;
    const Real w = Real(1) / std::max(Real(abs(truth[i])), floor);
    num += w * w * truth[i] * form[i];
    den += w * w * form[i] * form[i];
  }
  if (!f.finite) {
    f.deviation = std::numeric_limits<Real>::infinity();
    return f;
  }
  f.scale = den > Real(0) ? num / den : Real(0);
  for (std::size_t i = 0; i < truth.size(); ++i)
    f.deviation =
        std::max(f.deviation, Real(abs(truth[i] - f.scale * form[i]) / std::max(Real(abs(truth[i])), floor)));
  return f;
}

}  // namespace detail

template <class Real = double>
struct ClosedFormAudit {
  int N = 0;
  std::vector<ScaledFit<Real>> w_squared;  // n = 1..N
  std::vector<ScaledFit<Real>> z;          // n = 0..N
  // lambda(x) against the sorted sector spectrum, no rescaling
  Real lambda_printed_deviation{0};
  Real lambda_corrected_deviation{0};
  // off-diagonal Casimir entries against the displayed index pattern
  std::optional<Real> side2_printed_deviation, side2_corrected_deviation;
};

/// Matrix-derived W_n^2 = T(n, n-1) T(n-1, n) and Z_n = T(n, n), with T the
/// direct restriction C+C- - g_C(C0 - 1/2), against the
/// printed closed forms, each allowed one global scale factor.
template <class Real>
ClosedFormAudit<Real> closed_form_audit(const SectorRep<Real>& s, int s_sign = 1) {
  using std::abs;
  const auto& q = s.q();
  const int N = s.N;
  const Real dmu = s.mu_a - s.mu_b;
  const auto p = make_qhahn_params(s, s_sign);
  const auto cc = casimir_coefficients(s);

  ClosedFormAudit<Real> a;
  a.N = N;
  const auto rsqA = [&](int k) { return r_squared(s.specA, s.mu_a, k); };
  // r_squared's formula read literally, including negative indices
  const auto rsqB_literal = [&](int k) {
    const Real kk(k);
    return (q.pow(kk) - q.pow(-kk)) *
           (s.specB.a1 * q.pow(Real(2) * s.mu_b - Real(1) + kk) - s.specB.a2 * q.pow(Real(1) - kk - Real(2) * s.mu_b));
  };
  const auto rsqB = [&](int k) { return r_squared(s.specB, s.mu_b, k); };

  if (N >= 1) {
    std::vector<Real> truth, first_b, first_literal, second, corrected;
    for (int n = 1; n <= N; ++n) {
      truth.push_back(s.QC_direct(n, n - 1) * s.QC_direct(n - 1, n));
      const Real pre = q.pow(Real(2) * (Real(n - N) + dmu - Real(1)));
      first_b.push_back(pre * rsqA(n) * rsqB(N - n + 1));
      first_literal.push_back(pre * rsqA(n) * rsqB_literal(n - N + 1));
      const Real q2n = q.pow(Real(2 * n));
      second.push_back(p.defined ? (Real(1) - q2n) * (Real(1) - p.r * q2n) * (Real(1) - q.pow(Real(2 * (n - N - 1)))) *
                                       (Real(1) - p.s * q.pow(Real(2 * (n - N))))
                                 : std::numeric_limits<Real>::quiet_NaN());
      corrected.push_back(rsqA(n) * rsqB(N - n + 1) * q.pow(Real(2) * (Real(2 * n - 1 - N) + dmu)));
    }
    a.w_squared.push_back(detail::scaled_fit<Real>("prefactor r_n^2 r_{N-n+1}^2 (B factor index)", truth, first_b));
    a.w_squared.push_back(detail::scaled_fit<Real>("prefactor r_n^2 r_{n-N+1}^2 (literal index)", truth, first_literal));
    a.w_squared.push_back(detail::scaled_fit<Real>("product of four (1 - ...) factors", truth, second));
    a.w_squared.push_back(detail::scaled_fit<Real>("corrected r_n^2 r_{N-n+1}^2 q^{2(2n-1-N+mu_a-mu_b)}", truth, corrected));
  }

  {
    std::vector<Real> truth, printed, corrected;
    for (int n = 0; n <= N; ++n) {
      truth.push_back(s.QC_direct(n, n));
      printed.push_back(p.defined ? p.D * q.pow(Real(2 * n)) + p.E * q.pow(Real(4 * n))
                                  : std::numeric_limits<Real>::quiet_NaN());
      const Real base = q.pow(dmu - Real(N));
      corrected.push_back(cc.p1 * base * q.pow(Real(2 * n)) + cc.p2 * base * base * q.pow(Real(4 * n)));
    }
    a.z.push_back(detail::scaled_fit<Real>("D q^{2n} + E q^{4n}", truth, printed));
    a.z.push_back(detail::scaled_fit<Real>("p1 q^{mu_a-mu_b-N} q^{2n} + p2 q^{2(mu_a-mu_b-N)} q^{4n}", truth, corrected));
  }

  {
    SymTridiagonal<Real> t;
    for (int i = 0; i <= N; ++i) t.diag.push_back(s.QC_direct(i, i));
    for (int i = 0; i < N; ++i) t.offdiag.push_back(Real(0.5) * (s.QC_direct(i, i + 1) + s.QC_direct(i + 1, i)));
    const auto spectrum = s.unitary ? eig_sym_tridiagonal(t).values : std::vector<Real>{};
    if (!spectrum.empty()) {
      const Real c1 = s.specC.a1, c2 = s.specC.a2;
      std::vector<Real> printed, corrected = coupled_eigenvalues(s);
      const Real mus = s.mu_a + s.mu_b;
      for (int x = 0; x <= N; ++x)
        printed.push_back(-c2 * q.pow(Real(1) - Real(2) * mus) *
                          (q.pow(Real(-2 * x)) + c1 * q.pow(Real(4) * mus - Real(2) + Real(2 * x))));
      std::sort(printed.begin(), printed.end());
      std::sort(corrected.begin(), corrected.end());
      Real scale(0);
      for (const auto& v : spectrum) scale = std::max(scale, Real(abs(v)));
      if (scale == Real(0)) scale = Real(1);
      for (int x = 0; x <= N; ++x) {
        a.lambda_printed_deviation = std::max(a.lambda_printed_deviation, Real(abs(printed[x] - spectrum[x]) / scale));
        a.lambda_corrected_deviation =
            std::max(a.lambda_corrected_deviation, Real(abs(corrected[x] - spectrum[x]) / scale));
      }
    }
  }

  const auto el = sector_qc_elements(s);
  a.side2_printed_deviation = el.offdiag_printed_deviation;
  a.side2_corrected_deviation = el.offdiag_corrected_deviation;
  return a;
}

// ---------------------------------------------------------------------------
// Selection rule

template <class Real = double>
struct SelectionRuleCheck {
  Real cross_sector{0};           // max |QC(i, j)| over pairs of different total weight, relative
  Real eigenvector_residual{0};   // max ||QC v - lambda v|| for embedded sector eigenvectors, relative
};

/// On the full product space: the dense Casimir does not couple different
/// total weights, and every sector eigenvector is an eigenvector of it.
template <class Real>
SelectionRuleCheck<Real> selection_rule_check(const CoupledRep<Real>& c) {
  using std::abs;
  const Matrix<Real> Q = c.QC.dense();
  const std::size_t db = c.repB.dim;
  const Real scale = max_abs(Q) > Real(0) ? max_abs(Q) : Real(1);
  SelectionRuleCheck<Real> out;
  for (std::size_t i = 0; i < Q.rows(); ++i)
    for (std::size_t j = 0; j < Q.cols(); ++j)
      if (i / db + i % db != j / db + j % db) out.cross_sector = std::max(out.cross_sector, Real(abs(Q(i, j)) / scale));

  for (int N = 0; N <= c.max_sector(); ++N) {
    const auto s = sector(c, N);
    const auto table = cg_by_diagonalization(s);
    for (std::size_t x = 0; x < s.size(); ++x) {
      std::vector<Real> v(Q.rows(), Real(0));
      for (std::size_t k = 0; k < s.size(); ++k)
        v[s.basis[k].first * db + s.basis[k].second] = table.coeffs(k, x);
      Real res(0);
      for (std::size_t i = 0; i < Q.rows(); ++i) {
        Real qv(0);
        for (std::size_t j = 0; j < Q.cols(); ++j) qv += Q(i, j) * v[j];
        const Real d = qv - table.eigenvalues[x] * v[i];
        res += d * d;
      }
      using std::sqrt;
      out.eigenvector_residual = std::max(out.eigenvector_residual, Real(sqrt(res) / scale));
    }
  }
  return out;
}

}  // namespace qhahn
