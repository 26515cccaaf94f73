#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "qhahn/errors.hpp"

namespace qhahn {

/// Deformation parameter. Rejects q <= 0 and |q - 1| <= tolerance: every
/// formula downstream carries (q - 1/q) factors.
template <class Real = double>
class QBase {
 public:
  explicit QBase(const Real& q, const Real& tolerance = Real(1e-6)) : q_(q) {
    using std::abs;
    if (!(q > Real(0)))
      throw InvalidBase("q must be positive, got " + std::to_string(static_cast<double>(q)));
    if (abs(q - Real(1)) <= tolerance)
      throw InvalidBase("q = " + std::to_string(static_cast<double>(q)) +
                        " is within tolerance of 1");
  }

  const Real& value() const noexcept { return q_; }
  Real pow(const Real& x) const {
    using std::pow;
    return pow(q_, x);
  }
  Real inverse() const { return Real(1) / q_; }
  bool below_one() const { return q_ < Real(1); }

  friend bool operator==(const QBase& a, const QBase& b) { return a.q_ == b.q_; }

 private:
  Real q_;
};

/// (a; q)_n = prod_{k<n} (1 - a q^k).
template <class Real>
Real q_pochhammer(const Real& a, const Real& q, std::size_t n) {
  Real product(1);
  Real aqk = a;
  for (std::size_t k = 0; k < n; ++k) {
    product *= Real(1) - aqk;
    aqk *= q;
  }
  return product;
}

namespace detail {

template <class Real>
class NeumaierSum {
 public:
  void add(const Real& x) {
    using std::abs;
    const Real t = sum_ + x;
    if (abs(sum_) >= abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  Real value() const { return sum_ + comp_; }

 private:
  Real sum_{0};
  Real comp_{0};
};

template <class Real>
bool is_unit(const Real& v, std::size_t k) {
  using std::abs;
  const Real eps = std::numeric_limits<Real>::epsilon();
  return abs(Real(1) - v) <= Real(32) * eps * Real(static_cast<double>(k + 1));
}

// Parameters sorted ascending so that summands do not depend on the order
// in which the caller listed them.
template <class Real, std::size_t K>
std::array<std::size_t, K> sorted_order(const std::array<Real, K>& p) {
  std::array<std::size_t, K> idx{};
  for (std::size_t i = 0; i < K; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return idx;
}

}  // namespace detail

/// Terminating 3phi2 summed over k = 0..m exactly (no termination search).
template <class Real>
Real phi_3_2_terminating(const std::array<Real, 3>& num, const std::array<Real, 2>& den,
                         const Real& q, const Real& z, std::size_t m) {
  const auto ni = detail::sorted_order(num);
  const auto di = detail::sorted_order(den);

  detail::NeumaierSum<Real> sum;
  Real term(1);
  Real qk(1);
  for (std::size_t k = 0;; ++k) {
    sum.add(term);
    if (k == m) break;
    for (std::size_t j = 0; j < 2; ++j)
      if (detail::is_unit(den[di[j]] * qk, k)) throw DenominatorVanishes(di[j], k);
    Real ratio = (Real(1) - num[ni[0]] * qk) * (Real(1) - num[ni[1]] * qk) *
                 (Real(1) - num[ni[2]] * qk);
    ratio /= (Real(1) - den[di[0]] * qk) * (Real(1) - den[di[1]] * qk) * (Real(1) - qk * q);
    term *= ratio * z;
    qk *= q;
  }
  return sum.value();
}

/// Terminating basic hypergeometric series 3phi2(num; den; q, z).
/// The series must truncate within n_terms: some numerator parameter has to
/// equal q^{-m} with m <= n_terms.
template <class Real>
Real phi_3_2(const std::array<Real, 3>& num, const std::array<Real, 2>& den, const Real& q,
             const Real& z, std::size_t n_terms) {
  std::size_t m = 0;
  bool found = false;
  Real qk(1);
  for (std::size_t k = 0; k <= n_terms && !found; ++k) {
    for (const auto& a : num)
      if (detail::is_unit(a * qk, k)) {
        m = k;
        found = true;
      }
    qk *= q;
  }
  if (!found)
    throw NonTerminating("no numerator parameter equals q^-m for m <= " + std::to_string(n_terms));
  return phi_3_2_terminating(num, den, q, z, m);
}

/// Textbook q-Hahn polynomial Q_n(q^-x; alpha, beta, N | q)
///   = 3phi2(q^-n, alpha beta q^{n+1}, q^-x; alpha q, q^-N; q, q).
template <class Real>
Real qhahn_reference(int n, int x, const Real& alpha, const Real& beta, int N, const Real& q) {
  using std::pow;
  if (n < 0 || x < 0 || n > N || x > N)
    throw Error("qhahn_reference: need 0 <= n, x <= N");
  const std::array<Real, 3> num{pow(q, Real(-n)), alpha * beta * pow(q, Real(n + 1)),
                                pow(q, Real(-x))};
  const std::array<Real, 2> den{alpha * q, pow(q, Real(-N))};
  return phi_3_2_terminating(num, den, q, q, static_cast<std::size_t>(std::min(n, x)));
}

}  // namespace qhahn
