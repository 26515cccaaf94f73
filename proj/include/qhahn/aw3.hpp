#pragma once

// Hidden-symmetry operators on a sector and the AW(3) relations
//   [K1, K2]_q = K3,
//   [K2, K3]_q = B K2 + C1 K1 + D1,
//   [K3, K1]_q = B K1 + C2 K2 + D2,
// with [L, M]_q = q L M - q^{-1} M L, K1 = q^{-Delta}, K2 = coupled Casimir.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qhahn/coupling.hpp"
#include "qhahn/numerics.hpp"

namespace qhahn {

template <class Real = double>
struct AWOperators {
  Matrix<Real> K1, K2, K3, K3dual;
  QBase<Real> q;
  // Magnitude of the terms K2 was summed from; can exceed ||K2|| when they cancel.
  Real K2_scale{0};
};

template <class Real>
AWOperators<Real> build_aw_operators(const SectorRep<Real>& s) {
  const auto& q = s.q();
  AWOperators<Real> ops{s.K1, s.K2, {}, {}, q, std::max(frobenius(s.K2), s.K2_term_scale)};
  ops.K3 = q_mutator(ops.K1, ops.K2, q.value());
  ops.K3dual = q.inverse() * (ops.K1 * ops.K2) - q.value() * (ops.K2 * ops.K1);
  return ops;
}

enum class ConstantsSource { closed_form, fitted };

template <class Real = double>
struct AWStructure {
  int N = 0;
  Real p0{0}, p1{0}, p2{0}, t0{0}, t1{0};
  Real B{0}, C1{0}, C2{0}, D1{0}, D2{0};
  // B as it enters [K2, K3]_q; equals B for the closed-form constants, and is
  // fitted separately from the second relation otherwise.
  Real B_second{0};
  ConstantsSource source = ConstantsSource::closed_form;
};

/// Closed-form structure constants on sector N, with q^{C0} evaluated on
/// the sector's scalar total weight.
template <class Real>
AWStructure<Real> structure_constants(const SectorRep<Real>& s) {
  const auto& q = s.q();
  const Real qq = q.value();
  const Real qi = q.inverse();
  const Real w = (qq - qi) * (qq - qi);
  const auto p = casimir_coefficients(s);
  const Real a2 = s.specC.a2;
  const Real b1 = s.specC.a1;

  AWStructure<Real> st;
  st.N = s.N;
  st.p0 = p.p0;
  st.p1 = p.p1;
  st.p2 = p.p2;
  st.t1 = (qq + qi) * (qq + qi) * a2 * b1;
  st.t0 = (qq + qi) * (s.QB_value * a2 * q.pow(-s.C0_scalar) + s.QA_value * b1 * q.pow(s.C0_scalar));
  st.B = w * st.p1;
  st.B_second = st.B;
  st.C1 = (qq * qq - qi * qi) * (qq * qq - qi * qi) * a2 * b1;
  st.C2 = Real(0);
  st.D1 = w * st.t0;
  st.D2 = w * st.p2;
  st.source = ConstantsSource::closed_form;
  return st;
}

template <class Real>
AWStructure<Real> structure_constants(const CoupledRep<Real>& c, int N) {
  return structure_constants(sector(c, N));
}

namespace detail {

template <class Real>
struct RelationLhs {
  Matrix<Real> value;  // X^2 Y + Y X^2 - (q^2 + q^-2) X Y X
  Real term_scale;     // sum of the three term norms
};

template <class Real>
RelationLhs<Real> quadratic_lhs(const Matrix<Real>& x, const Matrix<Real>& y, const QBase<Real>& q) {
  const Real s = q.value() * q.value() + q.inverse() * q.inverse();
  const Matrix<Real> xxy = x * x * y;
  const Matrix<Real> yxx = y * x * x;
  const Matrix<Real> xyx = x * y * x;
  return {xxy + yxx - s * xyx, frobenius(xxy) + frobenius(yxx) + s * frobenius(xyx)};
}

}  // namespace detail

template <class Real = double>
struct AWResiduals {
  // K1^2 K2 + K2 K1^2 - (q^2+q^-2) K1 K2 K1 + B K1 + C2 K2 + D2 = 0
  Real relation1{0};
  // K2^2 K1 + K1 K2^2 - (q^2+q^-2) K2 K1 K2 + B K2 + C1 K1 + D1 = 0
  Real relation2{0};
  // The same relations written with K3: [K3, K1]_q and [K2, K3]_q.
  Real bracket31{0};
  Real bracket23{0};

  Real max() const { return std::max({relation1, relation2, bracket31, bracket23}); }
};

template <class Real>
AWResiduals<Real> verify_aw_relations(const AWOperators<Real>& ops, const AWStructure<Real>& st) {
  const auto& q = ops.q;
  const auto I = Matrix<Real>::identity(ops.K1.rows());
  const auto l1 = detail::quadratic_lhs(ops.K1, ops.K2, q);
  const auto l2 = detail::quadratic_lhs(ops.K2, ops.K1, q);
  const Matrix<Real> rhs1 = st.B * ops.K1 + st.C2 * ops.K2 + st.D2 * I;
  const Matrix<Real> rhs2 = st.B_second * ops.K2 + st.C1 * ops.K1 + st.D1 * I;

  using std::abs;
  const Real n1 = frobenius(ops.K1), n2 = std::max(frobenius(ops.K2), ops.K2_scale), nI = frobenius(I);
  const Real s1 = abs(st.B) * n1 + abs(st.C2) * n2 + abs(st.D2) * nI;
  const Real s2 = abs(st.B_second) * n2 + abs(st.C1) * n1 + abs(st.D1) * nI;

  AWResiduals<Real> r;
  r.relation1 = relative_residual(l1.value + rhs1, {l1.term_scale, s1});
  r.relation2 = relative_residual(l2.value + rhs2, {l2.term_scale, s2});

  const Real qq = q.value();
  const Real qi = q.inverse();
  const Matrix<Real> k3k1 = ops.K3 * ops.K1, k1k3 = ops.K1 * ops.K3;
  const Matrix<Real> k2k3 = ops.K2 * ops.K3, k3k2 = ops.K3 * ops.K2;
  r.bracket31 = relative_residual(qq * k3k1 - qi * k1k3 - rhs1, {qq * frobenius(k3k1), qi * frobenius(k1k3), s1});
  r.bracket23 = relative_residual(qq * k2k3 - qi * k3k2 - rhs2, {qq * frobenius(k2k3), qi * frobenius(k3k2), s2});
  return r;
}

template <class Real = double>
struct ConstantDeviation {
  std::string name;
  Real fitted{0};
  Real reference{0};
  // Coefficient size that would make its term as large as the relation's
  // own terms; used as the floor for zero-valued constants.
  Real scale{0};
  Real relative{0};  // |fitted - reference| / max(|reference|, scale)
};

template <class Real = double>
struct AWFit {
  AWStructure<Real> fitted;
  Real residual1{0};  // relative, first relation
  Real residual2{0};  // relative, second relation
  std::size_t rank1 = 0, rank2 = 0;
  bool degenerate = false;
  // scale of each fitted coefficient, in the order D2, B, C2, D1, C1, B_second
  std::array<Real, 6> scales{};
  std::vector<ConstantDeviation<Real>> deviations;  // filled when a reference is supplied

  Real residual() const { return std::max(residual1, residual2); }
  Real max_deviation() const {
    Real m(0);
    for (const auto& d : deviations) m = std::max(m, d.relative);
    return m;
  }
};

/// Least-squares fit of the structure constants over span{I, K1, K2} for
/// each relation. A rank-deficient design is flagged, not thrown.
template <class Real>
AWFit<Real> fit_structure_constants(const AWOperators<Real>& ops,
                                    const std::optional<AWStructure<Real>>& reference = std::nullopt) {
  using std::abs;
  const std::size_t n = ops.K1.rows();
  const auto I = Matrix<Real>::identity(n);
  const std::array<const Matrix<Real>*, 3> basis{&I, &ops.K1, &ops.K2};

  Matrix<Real> design(n * n, 3);
  std::array<Real, 3> norms{};
  for (std::size_t j = 0; j < 3; ++j) {
    norms[j] = frobenius(*basis[j]);
    const Real s = norms[j] > Real(0) ? Real(1) / norms[j] : Real(1);
    for (std::size_t k = 0; k < n * n; ++k) design(k, j) = basis[j]->data()[k] * s;
  }

  const auto l1 = detail::quadratic_lhs(ops.K1, ops.K2, ops.q);
  const auto l2 = detail::quadratic_lhs(ops.K2, ops.K1, ops.q);

  auto solve = [&](const detail::RelationLhs<Real>& lhs, Real& residual, std::size_t& rank) {
    std::vector<Real> rhs(n * n);
    for (std::size_t k = 0; k < n * n; ++k) rhs[k] = -lhs.value.data()[k];
    const auto ls = least_squares(design, std::span<const Real>(rhs));
    residual = relative_residual(ls.residual, {lhs.term_scale});
    rank = ls.rank;
    std::array<Real, 3> x{};
    for (std::size_t j = 0; j < 3; ++j) x[j] = norms[j] > Real(0) ? ls.solution[j] / norms[j] : Real(0);
    return x;
  };

  AWFit<Real> fit;
  const auto x1 = solve(l1, fit.residual1, fit.rank1);  // D2, B, C2
  const auto x2 = solve(l2, fit.residual2, fit.rank2);  // D1, C1, B_second
  fit.degenerate = n < 3 || fit.rank1 < 3 || fit.rank2 < 3;

  auto& f = fit.fitted;
  f.source = ConstantsSource::fitted;
  f.D2 = x1[0];
  f.B = x1[1];
  f.C2 = x1[2];
  f.D1 = x2[0];
  f.C1 = x2[1];
  f.B_second = x2[2];
  const Real qq = ops.q.value(), qi = ops.q.inverse();
  const Real w = (qq - qi) * (qq - qi);
  f.p1 = f.B / w;
  f.p2 = f.D2 / w;
  f.t1 = f.C1 / w;
  f.t0 = f.D1 / w;

  for (std::size_t j = 0; j < 3; ++j) {
    fit.scales[j] = norms[j] > Real(0) ? l1.term_scale / norms[j] : Real(0);
    fit.scales[3 + j] = norms[j] > Real(0) ? l2.term_scale / norms[j] : Real(0);
  }

  if (reference) {
    f.N = reference->N;
    const auto& r = *reference;
    const std::array<std::pair<const char*, std::pair<Real, Real>>, 6> rows{{
        {"D2", {f.D2, r.D2}},
        {"B", {f.B, r.B}},
        {"C2", {f.C2, r.C2}},
        {"D1", {f.D1, r.D1}},
        {"C1", {f.C1, r.C1}},
        {"B_second", {f.B_second, r.B_second}},
    }};
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& [name, vals] = rows[k];
      ConstantDeviation<Real> dev{name, vals.first, vals.second, fit.scales[k], Real(0)};
      const Real denom = std::max(Real(abs(vals.second)), fit.scales[k]);
      dev.relative = denom > Real(0) ? Real(abs(vals.first - vals.second)) / denom : Real(abs(vals.first));
      fit.deviations.push_back(dev);
    }
  }
  return fit;
}

enum class CasimirForm {
  /// 1/2 {K3, K3~} + (q^2+q^-2) C1 K1^2 + B {K1,K2} + (q+q^-1)^2 (D1 K1 + D2 K2)
  printed,
  /// Same building blocks with the C1 and D terms halved; the combination
  /// that commutes with K1 and K2 for the relations above.
  rebalanced,
};

template <class Real = double>
struct AWCasimir {
  Matrix<Real> Q;
  // ||[Q, K_i]|| / (2 ||K_i|| * sum of the norms of Q's terms)
  std::array<Real, 3> centrality{};
  // ||Q - (tr Q / n) I|| / sum of the norms of Q's terms; diagnostic only
  Real scalar_deviation{0};

  Real max_centrality() const { return std::max({centrality[0], centrality[1], centrality[2]}); }
};

template <class Real>
AWCasimir<Real> aw_casimir(const AWOperators<Real>& ops, const AWStructure<Real>& st,
                           CasimirForm form = CasimirForm::printed) {
  const Real qq = ops.q.value(), qi = ops.q.inverse();
  const Real half(0.5);
  const Real weight = form == CasimirForm::printed ? Real(1) : half;
  const std::size_t n = ops.K1.rows();

  const Matrix<Real> t_k3 = half * anticommutator(ops.K3, ops.K3dual);
  const Matrix<Real> t_c1 = (weight * (qq * qq + qi * qi) * st.C1) * (ops.K1 * ops.K1);
  const Matrix<Real> t_b = st.B * anticommutator(ops.K1, ops.K2);
  const Matrix<Real> t_d = (weight * (qq + qi) * (qq + qi)) * (st.D1 * ops.K1 + st.D2 * ops.K2);

  AWCasimir<Real> out;
  out.Q = t_k3 + t_c1 + t_b + t_d;
  const Real scale = frobenius(t_k3) + frobenius(t_c1) + frobenius(t_b) + frobenius(t_d);
  const std::array<const Matrix<Real>*, 3> ks{&ops.K1, &ops.K2, &ops.K3};
  for (std::size_t i = 0; i < 3; ++i) {
    const Real denom = Real(2) * scale * frobenius(*ks[i]);
    const Real c = frobenius(commutator(out.Q, *ks[i]));
    out.centrality[i] = denom > Real(0) ? c / denom : c;
  }
  Real trace(0);
  for (std::size_t i = 0; i < n; ++i) trace += out.Q(i, i);
  const Matrix<Real> shifted = out.Q - (trace / Real(static_cast<double>(n))) * Matrix<Real>::identity(n);
  out.scalar_deviation = scale > Real(0) ? frobenius(shifted) / scale : frobenius(shifted);
  return out;
}

}  // namespace qhahn
