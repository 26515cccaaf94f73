#pragma once

// Composition C = A (+) B of two (a2, a1) algebras:
//   C0 = A0 + B0,  C+- = A+- q^{-B0} + B+- q^{A0},
// defined when a1 of A equals b2 of B; the result is the (a2, b1) algebra.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qhahn/algebra.hpp"
#include "qhahn/errors.hpp"
#include "qhahn/numerics.hpp"

namespace qhahn {

/// Ordered list of product states (n_a, n_b).
using SectorBasis = std::vector<std::pair<std::size_t, std::size_t>>;

/// Operator on the product space stored as a sum of coeff * (X (x) Y).
/// Products stay in this form, so restricting to a pair of sectors never
/// needs the full (D_A D_B)^2 matrix.
template <class Real = double>
class KronOperator {
 public:
  struct Term {
    Real coeff;
    Matrix<Real> a;
    Matrix<Real> b;
  };

  KronOperator() = default;
  KronOperator(std::size_t dim_a, std::size_t dim_b) : dim_a_(dim_a), dim_b_(dim_b) {}

  static KronOperator term(const Real& coeff, Matrix<Real> a, Matrix<Real> b) {
    KronOperator op(a.rows(), b.rows());
    op.terms_.push_back(Term{coeff, std::move(a), std::move(b)});
    return op;
  }

  std::size_t dim_a() const noexcept { return dim_a_; }
  std::size_t dim_b() const noexcept { return dim_b_; }
  std::size_t dim() const noexcept { return dim_a_ * dim_b_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }

  KronOperator& operator+=(const KronOperator& o) {
    check(o);
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  KronOperator& operator-=(const KronOperator& o) {
    check(o);
    for (const auto& t : o.terms_) terms_.push_back(Term{-t.coeff, t.a, t.b});
    return *this;
  }
  KronOperator& operator*=(const Real& s) {
    for (auto& t : terms_) t.coeff *= s;
    return *this;
  }

  friend KronOperator operator+(KronOperator l, const KronOperator& r) { return l += r; }
  friend KronOperator operator-(KronOperator l, const KronOperator& r) { return l -= r; }
  friend KronOperator operator*(KronOperator l, const Real& s) { return l *= s; }
  friend KronOperator operator*(const Real& s, KronOperator l) { return l *= s; }

  friend KronOperator operator*(const KronOperator& l, const KronOperator& r) {
    l.check(r);
    KronOperator out(l.dim_a_, l.dim_b_);
    for (const auto& x : l.terms_)
      for (const auto& y : r.terms_) out.terms_.push_back(Term{x.coeff * y.coeff, x.a * y.a, x.b * y.b});
    return out;
  }

  /// <(ia', ib')| op |(ia, ib)>
  Real element(std::size_t ia_row, std::size_t ib_row, std::size_t ia_col, std::size_t ib_col) const {
    Real v(0);
    for (const auto& t : terms_) v += t.coeff * t.a(ia_row, ia_col) * t.b(ib_row, ib_col);
    return v;
  }

  /// Full matrix in the index ordering ia * D_B + ib.
  Matrix<Real> dense() const {
    Matrix<Real> m(dim(), dim());
    for (const auto& t : terms_) m += t.coeff * kron(t.a, t.b);
    return m;
  }

  using Basis = SectorBasis;

  /// Entrywise sum of |term| over the block; the rounding scale of block().
  Matrix<Real> abs_block(const Basis& rows, const Basis& cols) const {
    using std::abs;
    Matrix<Real> m(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        for (const auto& t : terms_)
          m(i, j) += abs(t.coeff * t.a(rows[i].first, cols[j].first) * t.b(rows[i].second, cols[j].second));
    return m;
  }

  Matrix<Real> block(const Basis& rows, const Basis& cols) const {
    Matrix<Real> m(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        m(i, j) = element(rows[i].first, rows[i].second, cols[j].first, cols[j].second);
    return m;
  }

 private:
  void check(const KronOperator& o) const {
    if (dim_a_ != o.dim_a_ || dim_b_ != o.dim_b_) throw ShapeMismatch("KronOperator factor dimensions differ");
  }

  std::size_t dim_a_ = 0;
  std::size_t dim_b_ = 0;
  std::vector<Term> terms_;
};

/// Product states (n, N - n), n = 0..N.
inline SectorBasis sector_basis(int N) {
  SectorBasis b;
  if (N < 0) return b;
  for (int n = 0; n <= N; ++n) b.emplace_back(static_cast<std::size_t>(n), static_cast<std::size_t>(N - n));
  return b;
}

template <class Real = double>
struct CoupledRep {
  LadderRep<Real> repA;
  LadderRep<Real> repB;
  Real d;  // shared parameter a1 = b2
  AlgebraSpec<Real> specC;
  KronOperator<Real> C0, Cp, Cm, Delta, QC;
  Real QA_value;
  Real QB_value;
  // The same Casimir in the expanded factored grouping. Its sector entries
  // keep full relative accuracy; QC cancels terms of size q^{-2 C0}.
  KronOperator<Real> QC_factored;

  const QBase<Real>& q() const { return specC.q; }
  bool unitary() const { return repA.unitary && repB.unitary; }
  /// Largest N whose sector, and its image under QC, avoids the truncation edge.
  int max_sector() const { return static_cast<int>(std::min(repA.dim, repB.dim)) - 2; }
};

enum class CasimirGrouping {
  /// {q A+B- + q^-1 B+A- + (q+q^-1) d q^D + Q_B q^{2A0} + Q_A q^{-2B0}} q^D, as displayed.
  printed,
  /// {q A+B- + q^-1 B+A- + (q+q^-1) d q^D} q^D + Q_B q^{2A0} + Q_A q^{-2B0}
  /// (the grouping of the K2 = ... + p2 q^{2D} + p1 q^D expansion).
  expanded,
};

/// Factored coupled Casimir with Q_A, Q_B replaced by their scalar values.
template <class Real>
KronOperator<Real> coupled_casimir_factored(const CoupledRep<Real>& c,
                                            CasimirGrouping grouping = CasimirGrouping::printed) {
  using Op = KronOperator<Real>;
  const auto& q = c.q();
  const auto wa = c.repA.weights();
  const auto wb = c.repB.weights();
  const std::span<const Real> sa(wa), sb(wb);
  const auto Ia = Matrix<Real>::identity(c.repA.dim);
  const auto Ib = Matrix<Real>::identity(c.repB.dim);

  const auto q_delta = Op::term(Real(1), q_power_diag(q, sa, Real(1)), q_power_diag(q, sb, Real(-1)));
  const auto hopping = Op::term(q.value(), c.repA.Ap, c.repB.Am) + Op::term(q.inverse(), c.repA.Am, c.repB.Ap);
  const auto p2_part = Op::term((q.value() + q.inverse()) * c.d, q_power_diag(q, sa, Real(1)),
                                q_power_diag(q, sb, Real(-1)));
  const auto casimirs = Op::term(c.QB_value, q_power_diag(q, sa, Real(2)), Ib) +
                        Op::term(c.QA_value, Ia, q_power_diag(q, sb, Real(-2)));

  if (grouping == CasimirGrouping::printed) return (hopping + p2_part + casimirs) * q_delta;
  return (hopping + p2_part) * q_delta + casimirs;
}

template <class Real>
CoupledRep<Real> couple(const LadderRep<Real>& repA, const LadderRep<Real>& repB) {
  if (!(repA.spec.q == repB.spec.q))
    throw IncompatibleParameters("q of A (" + std::to_string(static_cast<double>(repA.spec.q.value())) +
                                 ") differs from q of B (" +
                                 std::to_string(static_cast<double>(repB.spec.q.value())) + ")");
  if (!(repA.spec.a1 == repB.spec.a2))
    throw IncompatibleParameters("shared parameter mismatch: a1 of A = " +
                                 std::to_string(static_cast<double>(repA.spec.a1)) + " but b2 of B = " +
                                 std::to_string(static_cast<double>(repB.spec.a2)) +
                                 "; composition requires a1 = b2");

  const auto& q = repA.spec.q;
  const auto wa = repA.weights();
  const auto wb = repB.weights();
  const std::span<const Real> sa(wa), sb(wb);
  const auto Ia = Matrix<Real>::identity(repA.dim);
  const auto Ib = Matrix<Real>::identity(repB.dim);
  using Op = KronOperator<Real>;

  CoupledRep<Real> c{repA,
                     repB,
                     repA.spec.a1,
                     AlgebraSpec<Real>{repA.spec.a2, repB.spec.a1, q},
                     {},
                     {},
                     {},
                     {},
                     {},
                     repA.casimir(),
                     repB.casimir(),
                     {}};

  c.C0 = Op::term(Real(1), repA.A0, Ib) + Op::term(Real(1), Ia, repB.A0);
  c.Delta = Op::term(Real(1), repA.A0, Ib) - Op::term(Real(1), Ia, repB.A0);
  c.Cp = Op::term(Real(1), repA.Ap, q_power_diag(q, sb, Real(-1))) +
         Op::term(Real(1), q_power_diag(q, sa, Real(1)), repB.Ap);
  c.Cm = Op::term(Real(1), repA.Am, q_power_diag(q, sb, Real(-1))) +
         Op::term(Real(1), q_power_diag(q, sa, Real(1)), repB.Am);

  // g_C(C0 - 1/2) = c1 q^{-1} q^{2A0} q^{2B0} + c2 q q^{-2A0} q^{-2B0}
  const auto g_shifted =
      Op::term(c.specC.a1 * q.inverse(), q_power_diag(q, sa, Real(2)), q_power_diag(q, sb, Real(2))) +
      Op::term(c.specC.a2 * q.value(), q_power_diag(q, sa, Real(-2)), q_power_diag(q, sb, Real(-2)));
  c.QC = c.Cp * c.Cm - g_shifted;
  c.QC_factored = coupled_casimir_factored(c, CasimirGrouping::expanded);
  return c;
}

/// C+C- - g_C(C0 - 1/2).
template <class Real>
const KronOperator<Real>& coupled_casimir_direct(const CoupledRep<Real>& c) {
  return c.QC;
}

/// Restriction of a composition to the total-weight sector n_a + n_b = N.
template <class Real = double>
struct SectorRep {
  int N = 0;
  SectorBasis basis;
  AlgebraSpec<Real> specA, specB, specC;
  Real mu_a, mu_b, d, QA_value, QB_value;
  bool unitary = false;
  Matrix<Real> K1;      // q^{-Delta}
  Matrix<Real> K2;      // restricted coupled Casimir (factored evaluation)
  Matrix<Real> Delta;
  Matrix<Real> C0;      // restricted C0, equal to C0_scalar * I
  Real C0_scalar;
  Matrix<Real> QC;      // same matrix as K2; tridiagonal in the ordered basis
  Matrix<Real> QC_direct;  // C+C- - g_C(C0 - 1/2) restricted, for cross-checks
  Real K2_term_scale{0};   // Frobenius norm of the summed |terms| behind K2

  std::size_t size() const { return basis.size(); }
  const QBase<Real>& q() const { return specC.q; }
};

template <class Real>
SectorRep<Real> sector(const CoupledRep<Real>& c, int N) {
  if (N < 0 || N > c.max_sector())
    throw SectorOutOfRange("sector N = " + std::to_string(N) + " outside 0.." + std::to_string(c.max_sector()) +
                           " (factor dimensions " + std::to_string(c.repA.dim) + ", " +
                           std::to_string(c.repB.dim) + ")");
  const auto basis = sector_basis(N);
  SectorRep<Real> s{N,
                    basis,
                    c.repA.spec,
                    c.repB.spec,
                    c.specC,
                    c.repA.mu,
                    c.repB.mu,
                    c.d,
                    c.QA_value,
                    c.QB_value,
                    c.unitary(),
                    {},
                    {},
                    {},
                    {},
                    Real(N) + c.repA.mu + c.repB.mu,
                    {},
                    {},
                    Real(0)};
  s.Delta = c.Delta.block(basis, basis);
  s.C0 = c.C0.block(basis, basis);
  s.K1 = Matrix<Real>(basis.size(), basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) s.K1(i, i) = c.q().pow(-s.Delta(i, i));
  s.QC = c.QC_factored.block(basis, basis);
  s.QC_direct = c.QC.block(basis, basis);
  s.K2_term_scale = frobenius(c.QC_factored.abs_block(basis, basis));
  s.K2 = s.QC;
  return s;
}

template <class Real>
Real sector_delta(const SectorRep<Real>& s, int n) {
  return Real(2 * n - s.N) + s.mu_a - s.mu_b;
}

/// Casimir-p coefficients of the K2 expansion on a sector:
/// p2 = (q + 1/q) d, p1 = Q_B q^{C0} + Q_A q^{-C0}, p0 = 0.
template <class Real>
struct CasimirCoefficients {
  Real p0, p1, p2;
};

template <class Real>
CasimirCoefficients<Real> casimir_coefficients(const SectorRep<Real>& s) {
  const auto& q = s.q();
  return {Real(0), s.QB_value * q.pow(s.C0_scalar) + s.QA_value * q.pow(-s.C0_scalar),
          (q.value() + q.inverse()) * s.d};
}

template <class Real = double>
struct SectorQCElements {
  // Read from the direct restriction (ground truth).
  std::vector<Real> diag;   // T(n, n)
  std::vector<Real> upper;  // T(n, n+1): coefficient of C_{n_a+1, n_b-1} in row (n_a, n_b)
  std::vector<Real> lower;  // T(n+1, n)
  // p2 q^{2 delta} + p1 q^{delta} + p0
  std::vector<Real> predicted_diag;
  // Off-diagonal predictions in unitary mode only:
  // printed indices  r_{n_a+1} r_{n_b-1} q^{delta+1} / r_{n_a-1} r_{n_b+1} q^{delta-1}
  // corrected        r_{n_a+1} r_{n_b}   q^{delta+1} / r_{n_a}   r_{n_b+1} q^{delta-1}
  std::optional<std::vector<Real>> upper_printed, upper_corrected, lower_printed, lower_corrected;

  Real diag_deviation{0};
  std::optional<Real> offdiag_printed_deviation, offdiag_corrected_deviation;
};

template <class Real>
SectorQCElements<Real> sector_qc_elements(const SectorRep<Real>& s) {
  using std::abs;
  using std::sqrt;
  const int N = s.N;
  const auto& q = s.q();
  const auto p = casimir_coefficients(s);
  SectorQCElements<Real> out;
  Real scale(0);
  for (int n = 0; n <= N; ++n) {
    out.diag.push_back(s.QC_direct(n, n));
    const Real delta = sector_delta(s, n);
    out.predicted_diag.push_back(p.p2 * q.pow(Real(2) * delta) + p.p1 * q.pow(delta) + p.p0);
    scale = std::max(scale, Real(abs(s.QC_direct(n, n))));
    if (n < N) {
      out.upper.push_back(s.QC_direct(n, n + 1));
      out.lower.push_back(s.QC_direct(n + 1, n));
      scale = std::max({scale, Real(abs(s.QC_direct(n, n + 1))), Real(abs(s.QC_direct(n + 1, n)))});
    }
  }
  if (scale == Real(0)) scale = Real(1);
  for (int n = 0; n <= N; ++n)
    out.diag_deviation = std::max(out.diag_deviation, Real(abs(out.diag[n] - out.predicted_diag[n]) / scale));

  if (!s.unitary) return out;

  // r of either factor at any nonnegative index; 0 at index 0.
  auto rA = [&](int k) { return k <= 0 ? Real(0) : sqrt(r_squared(s.specA, s.mu_a, k)); };
  auto rB = [&](int k) { return k <= 0 ? Real(0) : sqrt(r_squared(s.specB, s.mu_b, k)); };
  std::vector<Real> up_p, up_c, lo_p, lo_c;
  for (int n = 0; n < N; ++n) {
    // row (n, N-n), column (n+1, N-n-1)
    const int na = n, nb = N - n;
    const Real delta = sector_delta(s, n);
    up_p.push_back(rA(na + 1) * rB(nb - 1) * q.pow(delta + Real(1)));
    up_c.push_back(rA(na + 1) * rB(nb) * q.pow(delta + Real(1)));
    // row (n+1, N-n-1), column (n, N-n)
    const int ma = n + 1, mb = N - n - 1;
    const Real delta_row = sector_delta(s, n + 1);
    lo_p.push_back(rA(ma - 1) * rB(mb + 1) * q.pow(delta_row - Real(1)));
    lo_c.push_back(rA(ma) * rB(mb + 1) * q.pow(delta_row - Real(1)));
  }
  auto deviation = [&](const std::vector<Real>& up, const std::vector<Real>& lo) {
    Real dev(0);
    for (int n = 0; n < N; ++n)
      dev = std::max({dev, Real(abs(up[n] - out.upper[n]) / scale), Real(abs(lo[n] - out.lower[n]) / scale)});
    return dev;
  };
  out.offdiag_printed_deviation = deviation(up_p, lo_p);
  out.offdiag_corrected_deviation = deviation(up_c, lo_c);
  out.upper_printed = std::move(up_p);
  out.upper_corrected = std::move(up_c);
  out.lower_printed = std::move(lo_p);
  out.lower_corrected = std::move(lo_c);
  return out;
}

/// Defects of the (c2, c1) defining relations for the coupled generators on
/// sector N: [C0, C+] - C+ on N -> N+1, [C0, C-] + C- on N -> N-1 and the
/// bracket relation on N itself. Each defect is scaled by the summed
/// magnitudes of the Kronecker terms behind it, so sectors where an operator
/// cancels to zero still measure rounding rather than noise over noise.
template <class Real>
RelationResiduals<Real> coupled_relation_residuals(const CoupledRep<Real>& c, int N) {
  if (N < 0 || N > c.max_sector())
    throw SectorOutOfRange("sector N = " + std::to_string(N) + " outside 0.." + std::to_string(c.max_sector()));
  using Op = KronOperator<Real>;
  const auto& q = c.q();
  const auto here = sector_basis(N);
  const auto up = sector_basis(N + 1);
  const auto down = sector_basis(N - 1);

  RelationResiduals<Real> r;
  {
    const Matrix<Real> c0cp = (c.C0 * c.Cp).block(up, here);
    const Matrix<Real> cpc0 = (c.Cp * c.C0).block(up, here);
    const Matrix<Real> cp = c.Cp.block(up, here);
    r.raise = frobenius(c0cp - cpc0 - cp);
    r.raise_rel = relative_residual(r.raise, {frobenius((c.C0 * c.Cp).abs_block(up, here)),
                                              frobenius((c.Cp * c.C0).abs_block(up, here)),
                                              frobenius(c.Cp.abs_block(up, here))});
  }
  if (N > 0) {
    const Matrix<Real> c0cm = (c.C0 * c.Cm).block(down, here);
    const Matrix<Real> cmc0 = (c.Cm * c.C0).block(down, here);
    const Matrix<Real> cm = c.Cm.block(down, here);
    r.lower = frobenius(c0cm - cmc0 + cm);
    r.lower_rel = relative_residual(r.lower, {frobenius((c.C0 * c.Cm).abs_block(down, here)),
                                              frobenius((c.Cm * c.C0).abs_block(down, here)),
                                              frobenius(c.Cm.abs_block(down, here))});
  }
  {
    const auto wa = c.repA.weights();
    const auto wb = c.repB.weights();
    const std::span<const Real> sa(wa), sb(wb);
    const Real dq = q.value() - q.inverse();
    const auto rhs_op =
        Op::term(dq * c.specC.a1, q_power_diag(q, sa, Real(2)), q_power_diag(q, sb, Real(2))) -
        Op::term(dq * c.specC.a2, q_power_diag(q, sa, Real(-2)), q_power_diag(q, sb, Real(-2)));
    const Matrix<Real> cmcp = (c.Cm * c.Cp).block(here, here);
    const Matrix<Real> cpcm = (c.Cp * c.Cm).block(here, here);
    const Matrix<Real> rhs = rhs_op.block(here, here);
    r.bracket = frobenius(cmcp - cpcm - rhs);
    r.bracket_rel = relative_residual(r.bracket, {frobenius((c.Cm * c.Cp).abs_block(here, here)),
                                                  frobenius((c.Cp * c.Cm).abs_block(here, here)),
                                                  frobenius(rhs_op.abs_block(here, here))});
  }
  return r;
}

/// Relative difference between a factored Casimir and the direct one on sector N.
template <class Real>
Real casimir_agreement(const CoupledRep<Real>& c, const KronOperator<Real>& factored, int N) {
  const auto b = sector_basis(N);
  const Matrix<Real> direct = c.QC.block(b, b);
  const Matrix<Real> other = factored.block(b, b);
  return relative_residual(direct - other, {frobenius(c.QC.abs_block(b, b)), frobenius(factored.abs_block(b, b))});
}

}  // namespace qhahn
