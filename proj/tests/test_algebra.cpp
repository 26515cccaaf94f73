#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <vector>

#include "qhahn/algebra.hpp"

using namespace qhahn;
using mp50 = boost::multiprecision::cpp_bin_float_50;

namespace {

AlgebraSpec<double> spec(double a2, double a1, double q) { return {a2, a1, QBase<double>(q)}; }

// Admissible parameters for each named type at a given q.
std::vector<std::pair<AlgebraType, AlgebraSpec<double>>> typed_specs(double q) {
  const double s = q > 1 ? 1.0 : -1.0;
  return {{AlgebraType::SUq2, spec(s * 1.0, s * 1.0, q)},
          {AlgebraType::SUq11, spec(-s * 1.0, -s * 1.0, q)},
          {AlgebraType::CUq2, spec(-s * 1.0, s * 1.0, q)},
          {AlgebraType::EUqPlus, spec(-s * 1.0, 0.0, q)},
          {AlgebraType::EUqMinus, spec(0.0, s * 1.0, q)}};
}

}  // namespace

TEST(Classify, Examples) {
  EXPECT_EQ(classify(spec(1, 1, 0.8)), AlgebraType::SUq11);
  EXPECT_EQ(classify(spec(-1, 1, 1.2)), AlgebraType::CUq2);
  EXPECT_EQ(classify(spec(0, 0, 0.8)), AlgebraType::M2);
  EXPECT_EQ(classify(spec(1, -1, 2.0)), AlgebraType::Other);
  EXPECT_EQ(classify(spec(2, 1, 2.0)), AlgebraType::Other);
  EXPECT_EQ(type_name(AlgebraType::SUq11), "su_q(1,1)");
  EXPECT_EQ(type_name(AlgebraType::M2), "M(2)");
}

TEST(Classify, MirrorsSignsAcrossQEqualsOne) {
  for (double q : {0.5, 0.8, 1.25, 2.0})
    for (const auto& [type, s] : typed_specs(q)) {
      EXPECT_EQ(classify(s), type) << type_name(type) << " q=" << q;
      const AlgebraSpec<double> flipped{-s.a2, -s.a1, QBase<double>(1.0 / q)};
      EXPECT_EQ(classify(flipped), type) << "mirrored " << type_name(type);
    }
}

TEST(GFunc, Examples) {
  EXPECT_DOUBLE_EQ(g_func(spec(1, 1, 0.8), 0.0), 2.0);
  EXPECT_NEAR(g_func(spec(1, 1, 0.8), 1.0), 2.2025, 1e-15);
  for (double x : {0.3, 1.1, 2.7}) EXPECT_DOUBLE_EQ(g_func(spec(1.5, 1.5, 1.3), x), g_func(spec(1.5, 1.5, 1.3), -x));
}

TEST(RSquared, Examples) {
  EXPECT_EQ(r_squared(spec(1, 1, 0.8), 1.0, 0), 0.0);
  EXPECT_NEAR(r_squared(spec(1, 1, 0.8), 1.0, 1), 0.415125, 1e-15);
  const double q = 1.2;
  EXPECT_NEAR(r_squared(spec(1, 0, q), 1.0, 1), (q - 1 / q) * (-1 / (q * q)), 1e-15);
  EXPECT_LT(r_squared(spec(1, 0, q), 1.0, 1), 0.0);
}

TEST(CasimirValue, Example) { EXPECT_NEAR(casimir_value(spec(1, 1, 0.8), 1.0), -2.05, 1e-15); }

TEST(LadderRep, Structure) {
  const auto rep = build_ladder_rep(spec(1, 1, 0.8), 0.7, 4);
  for (std::size_t n = 0; n < 4; ++n) EXPECT_DOUBLE_EQ(rep.A0(n, n), 0.7 + double(n));
  EXPECT_EQ(rep.rsq[0], 0.0);
  EXPECT_EQ(rep.rsq.size(), 5u);
  EXPECT_TRUE(rep.unitary);
  EXPECT_EQ(rep.Am, rep.Ap.transpose());

  const auto r8 = build_ladder_rep(spec(1, 1, 0.8), 1.0, 8, LadderMode::unitary);
  EXPECT_NEAR(r8.Ap(1, 0), 0.644302, 1e-6);
  EXPECT_NEAR(r8.Ap(1, 0), std::sqrt(0.415125), 1e-15);
}

TEST(LadderRep, NonUnitaryReportsFirstIndex) {
  try {
    build_ladder_rep(spec(1, 0, 1.2), 1.0, 6, LadderMode::unitary);
    FAIL() << "expected NonUnitaryRepresentation";
  } catch (const NonUnitaryRepresentation& e) {
    EXPECT_EQ(e.first_offending_index(), 1);
  }
  const auto raw = build_ladder_rep(spec(1, 0, 1.2), 1.0, 6);
  EXPECT_FALSE(raw.unitary);
  EXPECT_DOUBLE_EQ(raw.Ap(1, 0), raw.rsq[1]);
  EXPECT_EQ(raw.Am(0, 1), 1.0);
  EXPECT_THROW(build_ladder_rep(spec(1, 1, 0.8), 1.0, 1), Error);
  EXPECT_THROW(build_ladder_rep(spec(1, 1, 0.8), 0.0, 4), Error);
}

TEST(CasimirMatrix, DiagonalWithExpectedValue) {
  const auto rep = build_ladder_rep(spec(1, 1, 0.8), 1.0, 10);
  const auto Q = casimir_matrix(rep);
  const auto Q2 = casimir_matrix_lowering_form(rep);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) {
      if (i != j) {
        EXPECT_EQ(Q(i, j), 0.0);
      } else {
        EXPECT_NEAR(Q(i, i), -2.05, 1e-13);
        if (i + 1 < 10) {
          EXPECT_NEAR(Q2(i, i), Q(i, i), 1e-13);
        }
      }
    }
}

TEST(Relations, HoldForEveryTypeAndGridPoint) {
  for (double q : {0.5, 0.8, 1.25, 2.0})
    for (double mu : {0.3, 0.5, 1.0, 1.7})
      for (const auto& [type, s] : typed_specs(q))
        for (std::size_t dim : {2u, 8u, 32u, 64u}) {
          const auto rep = build_ladder_rep(s, mu, dim);
          const auto r = relation_residuals(rep);
          EXPECT_LE(r.max_relative(), 1e-10) << type_name(type) << " q=" << q << " mu=" << mu << " dim=" << dim;
        }
}

TEST(Relations, RawModeOnSmallInstance) {
  // 3x3 raw realization of (1, 0) at q = 1.2: the bracket entries are
  // r_{n}^2 - r_{n+1}^2 with A+ carrying r^2 and A- carrying 1.
  const auto s = spec(1, 0, 1.2);
  const auto rep = build_ladder_rep(s, 1.0, 3, LadderMode::raw);
  const auto r = relation_residuals(rep);
  EXPECT_LE(r.max_relative(), 1e-12);
  const double q = 1.2;
  for (int n = 0; n < 2; ++n) {
    const double mm = (n + 1 <= 2 ? rep.rsq[n + 1] : 0.0) - rep.rsq[n];
    const double expected = (q - 1 / q) * (0.0 * std::pow(q, 2 * (n + 1.0)) - 1.0 * std::pow(q, -2 * (n + 1.0)));
    EXPECT_NEAR(mm, expected, 1e-14) << n;
  }
}

TEST(Relations, DetectsCorruptedLadder) {
  auto rep = build_ladder_rep(spec(1, 1, 0.8), 1.0, 8);
  rep.Ap(1, 0) += 1e-3;
  rep.Am(0, 1) += 1e-3;
  const auto r = relation_residuals(rep);
  EXPECT_GT(r.bracket, 1e-4);
}

TEST(Casimir, CommutesWithGeneratorsOnInterior) {
  for (double q : {0.5, 2.0})
    for (const auto& [type, s] : typed_specs(q)) {
      const auto rep = build_ladder_rep(s, 0.7, 16);
      const auto Q = casimir_matrix(rep);
      // Q cancels A+A- against g(A0 - 1/2); rounding follows the size of those terms.
      const Matrix<double> pm = rep.Ap * rep.Am;
      const std::size_t k = rep.dim - 1;
      for (const auto* X : {&rep.A0, &rep.Ap, &rep.Am}) {
        const Matrix<double> qx = leading_block(Q * *X, k), xq = leading_block(*X * Q, k);
        const double terms = 2 * frobenius(Matrix<double>(pm * *X)) + 2 * frobenius(Matrix<double>(*X * pm));
        EXPECT_LE(relative_residual(qx - xq, {terms}), 1e-12) << type_name(type);
      }
    }
}

TEST(Scaling, RSquaredAndCasimirAreLinearInParameters) {
  for (double lambda : {0.25, 3.0, 17.5}) {
    const auto s = spec(0.7, -1.3, 0.8);
    const auto t = spec(0.7 * lambda, -1.3 * lambda, 0.8);
    for (int n = 1; n < 20; ++n)
      EXPECT_NEAR(r_squared(t, 0.9, n), lambda * r_squared(s, 0.9, n), 1e-12 * std::abs(lambda * r_squared(s, 0.9, n)));
    EXPECT_NEAR(casimir_value(t, 0.9), lambda * casimir_value(s, 0.9), 1e-12 * std::abs(lambda * casimir_value(s, 0.9)));
  }
}

TEST(Relations, ExtendedPrecisionResidualsAreTiny) {
  const AlgebraSpec<mp50> s{mp50(1), mp50(1), QBase<mp50>(mp50("0.8"))};
  const auto rep = build_ladder_rep(s, mp50("0.3"), 12);
  EXPECT_LT(relation_residuals(rep).max_relative(), mp50("1e-45"));
}
