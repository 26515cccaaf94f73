#pragma once

// A single (a2, a1) algebra: [A0, A+-] = +-A+-,
// [A-, A+] = (q - 1/q)(a1 q^{2 A0} - a2 q^{-2 A0}),
// and its truncated positive-discrete-series ladder representation.

#include <cmath>
#include <cstddef>
#include <string_view>
#include <vector>

#include "qhahn/errors.hpp"
#include "qhahn/numerics.hpp"
#include "qhahn/qcore.hpp"

namespace qhahn {

template <class Real = double>
struct AlgebraSpec {
  Real a2;
  Real a1;
  QBase<Real> q;
};

enum class AlgebraType { SUq2, SUq11, CUq2, EUqPlus, EUqMinus, M2, Other };

constexpr std::string_view type_name(AlgebraType t) {
  switch (t) {
    case AlgebraType::SUq2: return "su_q(2)";
    case AlgebraType::SUq11: return "su_q(1,1)";
    case AlgebraType::CUq2: return "cu_q(2)";
    case AlgebraType::EUqPlus: return "eu_q^+";
    case AlgebraType::EUqMinus: return "eu_q^-";
    case AlgebraType::M2: return "M(2)";
    case AlgebraType::Other: return "other";
  }
  return "other";
}

/// Human-readable sign/q condition that selects each type.
constexpr std::string_view type_condition(AlgebraType t) {
  switch (t) {
    case AlgebraType::SUq2: return "a2 = a1 > 0 with q > 1, or a2 = a1 < 0 with 0 < q < 1";
    case AlgebraType::SUq11: return "a2 = a1 < 0 with q > 1, or a2 = a1 > 0 with 0 < q < 1";
    case AlgebraType::CUq2: return "a2 = -a1 < 0 with q > 1, or a2 = -a1 > 0 with 0 < q < 1";
    case AlgebraType::EUqPlus: return "a2 < 0, a1 = 0 with q > 1, or a2 > 0, a1 = 0 with 0 < q < 1";
    case AlgebraType::EUqMinus: return "a2 = 0, a1 > 0 with q > 1, or a2 = 0, a1 < 0 with 0 < q < 1";
    case AlgebraType::M2: return "a2 = a1 = 0";
    case AlgebraType::Other: return "matches none of the listed sign/q conditions";
  }
  return "";
}

template <class Real>
AlgebraType classify(const AlgebraSpec<Real>& spec) {
  const Real& a2 = spec.a2;
  const Real& a1 = spec.a1;
  const Real zero(0);
  if (a2 == zero && a1 == zero) return AlgebraType::M2;
  // Below one the sign conditions are mirrored; fold that into `s`.
  const int s = spec.q.below_one() ? -1 : 1;
  auto positive = [&](const Real& v) { return s > 0 ? v > zero : v < zero; };
  auto negative = [&](const Real& v) { return s > 0 ? v < zero : v > zero; };

  if (a2 == a1 && positive(a2)) return AlgebraType::SUq2;
  if (a2 == a1 && negative(a2)) return AlgebraType::SUq11;
  if (a2 == -a1 && negative(a2)) return AlgebraType::CUq2;
  if (a1 == zero && negative(a2)) return AlgebraType::EUqPlus;
  if (a2 == zero && positive(a1)) return AlgebraType::EUqMinus;
  return AlgebraType::Other;
}

/// g(x) = a1 q^{2x} + a2 q^{-2x}.
template <class Real>
Real g_func(const AlgebraSpec<Real>& spec, const Real& x) {
  return spec.a1 * spec.q.pow(Real(2) * x) + spec.a2 * spec.q.pow(Real(-2) * x);
}

/// Scalar value Q(mu) = -a1 q^{2mu-1} - a2 q^{1-2mu} of the Casimir on D+_mu.
template <class Real>
Real casimir_value(const AlgebraSpec<Real>& spec, const Real& mu) {
  return -spec.a1 * spec.q.pow(Real(2) * mu - Real(1)) - spec.a2 * spec.q.pow(Real(1) - Real(2) * mu);
}

/// r_n^2 = (q^n - q^-n)(a1 q^{2mu-1+n} - a2 q^{1-n-2mu}); exactly zero at n = 0.
template <class Real>
Real r_squared(const AlgebraSpec<Real>& spec, const Real& mu, int n) {
  if (n == 0) return Real(0);
  const Real nn(n);
  const auto& q = spec.q;
  return (q.pow(nn) - q.pow(-nn)) *
         (spec.a1 * q.pow(Real(2) * mu - Real(1) + nn) - spec.a2 * q.pow(Real(1) - nn - Real(2) * mu));
}

/// diag(q^{s * d_i}) for a diagonal operator with entries d.
template <class Real>
Matrix<Real> q_power_diag(const QBase<Real>& q, std::span<const Real> d, const Real& s) {
  Matrix<Real> m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = q.pow(s * d[i]);
  return m;
}

enum class LadderMode { unitary, raw, automatic };

/// Truncated ladder realization on e_0..e_{dim-1}.
///
/// Unitary mode stores A+ e_n = r_{n+1} e_{n+1} with A- = A+^T. Raw mode uses
/// the unnormalized basis: A+ carries r_{n+1}^2 and A- carries 1, which
/// realizes the same commutators when some r_n^2 <= 0.
template <class Real = double>
struct LadderRep {
  AlgebraSpec<Real> spec;
  Real mu;
  std::size_t dim = 0;
  bool unitary = false;
  Matrix<Real> A0, Ap, Am;
  std::vector<Real> rsq;  // r_n^2 for n = 0..dim

  Real casimir() const { return casimir_value(spec, mu); }
  std::vector<Real> weights() const { return A0.diagonal_entries(); }
};

template <class Real>
LadderRep<Real> build_ladder_rep(const AlgebraSpec<Real>& spec, const Real& mu, std::size_t dim,
                                 LadderMode mode = LadderMode::automatic) {
  using std::sqrt;
  if (dim < 2) throw Error("build_ladder_rep: dim must be at least 2");
  if (!(mu > Real(0))) throw Error("build_ladder_rep: weight offset mu must be positive");

  LadderRep<Real> rep{spec, mu, dim, false, Matrix<Real>(dim, dim), Matrix<Real>(dim, dim),
                      Matrix<Real>(dim, dim), std::vector<Real>(dim + 1)};
  int first_bad = 0;
  for (std::size_t n = 0; n <= dim; ++n) {
    rep.rsq[n] = r_squared(spec, mu, static_cast<int>(n));
    if (n >= 1 && first_bad == 0 && !(rep.rsq[n] > Real(0))) first_bad = static_cast<int>(n);
  }
  if (mode == LadderMode::unitary && first_bad != 0)
    throw NonUnitaryRepresentation(first_bad, static_cast<double>(rep.rsq[first_bad]));
  rep.unitary = mode == LadderMode::unitary || (mode == LadderMode::automatic && first_bad == 0);

  for (std::size_t n = 0; n < dim; ++n) rep.A0(n, n) = Real(static_cast<double>(n)) + mu;
  for (std::size_t n = 1; n < dim; ++n) {
    if (rep.unitary) {
      rep.Ap(n, n - 1) = sqrt(rep.rsq[n]);
      rep.Am(n - 1, n) = rep.Ap(n, n - 1);
    } else {
      rep.Ap(n, n - 1) = rep.rsq[n];
      rep.Am(n - 1, n) = Real(1);
    }
  }
  return rep;
}

/// g applied to the diagonal operator A0 + shift.
template <class Real>
Matrix<Real> g_of_weights(const AlgebraSpec<Real>& spec, std::span<const Real> weights, const Real& shift) {
  Matrix<Real> m(weights.size(), weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) m(i, i) = g_func(spec, weights[i] + shift);
  return m;
}

/// A+A- - g(A0 - 1/2).
template <class Real>
Matrix<Real> casimir_matrix(const LadderRep<Real>& rep) {
  const auto w = rep.weights();
  return rep.Ap * rep.Am - g_of_weights(rep.spec, std::span<const Real>(w), Real(-0.5));
}

/// Magnitude for judging Casimir deviations: the value itself, or the size of
/// A+A- when the value cancels to zero.
template <class Real>
Real casimir_scale(const LadderRep<Real>& rep) {
  using std::abs;
  return std::max(abs(rep.casimir()), max_abs(Matrix<Real>(rep.Ap * rep.Am)));
}

/// A-A+ - g(A0 + 1/2); agrees with casimir_matrix except on the top row.
template <class Real>
Matrix<Real> casimir_matrix_lowering_form(const LadderRep<Real>& rep) {
  const auto w = rep.weights();
  return rep.Am * rep.Ap - g_of_weights(rep.spec, std::span<const Real>(w), Real(0.5));
}

template <class Real>
Matrix<Real> leading_block(const Matrix<Real>& m, std::size_t k) {
  Matrix<Real> b(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) b(i, j) = m(i, j);
  return b;
}

template <class Real = double>
struct RelationResiduals {
  // Frobenius norms of the projected defects.
  Real raise{0}, lower{0}, bracket{0};
  // The same divided by the summed norms of the contributing terms.
  Real raise_rel{0}, lower_rel{0}, bracket_rel{0};

  Real max_relative() const { return std::max({raise_rel, lower_rel, bracket_rel}); }
};

/// Defects of the defining relations on the interior e_0..e_{dim-2}.
template <class Real>
RelationResiduals<Real> relation_residuals(const LadderRep<Real>& rep) {
  const std::size_t k = rep.dim - 1;
  const auto& q = rep.spec.q;
  const auto w = rep.weights();
  auto P = [k](const Matrix<Real>& m) { return leading_block(m, k); };

  const Matrix<Real> a0ap = P(rep.A0 * rep.Ap), apa0 = P(rep.Ap * rep.A0), ap = P(rep.Ap);
  const Matrix<Real> a0am = P(rep.A0 * rep.Am), ama0 = P(rep.Am * rep.A0), am = P(rep.Am);
  const Matrix<Real> amap = P(rep.Am * rep.Ap), apam = P(rep.Ap * rep.Am);
  const Real dq = q.value() - q.inverse();
  const Matrix<Real> rhs =
      P(dq * (rep.spec.a1 * q_power_diag(q, std::span<const Real>(w), Real(2)) -
              rep.spec.a2 * q_power_diag(q, std::span<const Real>(w), Real(-2))));

  RelationResiduals<Real> r;
  r.raise = frobenius(a0ap - apa0 - ap);
  r.lower = frobenius(a0am - ama0 + am);
  r.bracket = frobenius(amap - apam - rhs);
  r.raise_rel = relative_residual(r.raise, {frobenius(a0ap), frobenius(apa0), frobenius(ap)});
  r.lower_rel = relative_residual(r.lower, {frobenius(a0am), frobenius(ama0), frobenius(am)});
  r.bracket_rel = relative_residual(r.bracket, {frobenius(amap), frobenius(apam), frobenius(rhs)});
  return r;
}

}  // namespace qhahn
