#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "qhahn/cg.hpp"

using namespace qhahn;

namespace {

AlgebraSpec<double> spec(double a2, double a1, double q) { return {a2, a1, QBase<double>(q)}; }

CoupledRep<double> compose(const AlgebraSpec<double>& a, double mu_a, const AlgebraSpec<double>& b, double mu_b,
                           std::size_t dim = 22) {
  return couple(build_ladder_rep(a, mu_a, dim), build_ladder_rep(b, mu_b, dim));
}

CoupledRep<double> sl_sl(double q = 0.8, double mu_a = 1.0, double mu_b = 0.5) {
  return compose(spec(1, 1, q), mu_a, spec(1, 1, q), mu_b);
}

}  // namespace

TEST(CG, GroundSectorIsOne) {
  const auto s = sector(sl_sl(), 0);
  for (const auto& t : {cg_by_diagonalization(s), cg_by_recurrence(s)}) {
    ASSERT_EQ(t.coeffs.rows(), 1u);
    EXPECT_EQ(t.coeffs(0, 0), 1.0);
  }
}

TEST(CG, FirstSectorEigenvalues) {
  const auto s = sector(sl_sl(), 1);
  const auto lambda = coupled_eigenvalues(s);
  EXPECT_NEAR(lambda[0], -2.2025, 1e-14);
  EXPECT_NEAR(lambda[1], -2.85100625, 1e-14);
  const auto t = cg_by_diagonalization(s);
  EXPECT_EQ(t.labeling, Labeling::analytic);
  EXPECT_NEAR(t.eigenvalues[0], -2.2025, 1e-13);
  EXPECT_NEAR(t.eigenvalues[1], -2.85100625, 1e-13);
}

TEST(CG, TablesAreOrthogonal) {
  const auto c = sl_sl();
  for (int N = 0; N <= c.max_sector(); ++N) {
    const auto s = sector(c, N);
    EXPECT_LE(orthogonality_check(cg_by_diagonalization(s)), 1e-12) << N;
    EXPECT_LE(orthogonality_check(cg_by_recurrence(s)), 1e-10) << N;
  }
}

TEST(CG, DiagonalizationAgreesWithRecurrenceOverGrid) {
  for (double q : {0.5, 0.8, 1.25, 2.0})
    for (double mu_a : {0.3, 1.0, 1.7})
      for (double mu_b : {0.5, 1.7}) {
        const auto c = compose(spec(1, 1, q), mu_a, spec(1, 1, q), mu_b, 22);
        for (int N = 0; N <= c.max_sector(); ++N) {
          const auto s = sector(c, N);
          const auto d = cg_by_diagonalization(s);
          const auto r = cg_by_recurrence(s);
          EXPECT_EQ(d.labeling, r.labeling);
          EXPECT_LE(max_entry_deviation(d, r), 1e-8) << "q=" << q << " mu=" << mu_a << ',' << mu_b << " N=" << N;
        }
      }
}

TEST(CG, RankOrderWhenMatchingFails) {
  const auto c = sl_sl();
  for (int N = 2; N <= c.max_sector(); ++N) {
    const auto t = cg_by_diagonalization(sector(c, N), DiagonalizationOptions{.matching = 0.0});
    EXPECT_EQ(t.labeling, Labeling::rank_order) << N;
    EXPECT_TRUE(std::is_sorted(t.eigenvalues.begin(), t.eigenvalues.end())) << N;
    EXPECT_LE(orthogonality_check(t), 1e-12) << N;
  }
}

TEST(CG, RecurrencePolynomialsStartAtOne) {
  const auto s = sector(sl_sl(), 6);
  const auto P = recurrence_polynomials(s);
  for (std::size_t x = 0; x < s.size(); ++x) EXPECT_EQ(P(0, x), 1.0);
  // Columns are proportional to the normalized table.
  const auto t = cg_by_recurrence(s);
  for (std::size_t x = 0; x < s.size(); ++x)
    for (std::size_t n = 0; n < s.size(); ++n)
      EXPECT_NEAR(P(n, x) * t.coeffs(0, x), t.coeffs(n, x), 1e-10 * std::max(1.0, std::abs(P(n, x))));
}

TEST(CG, TwistedNullVectorSolvesTheSystem) {
  const auto s = sector(sl_sl(), 9);
  const auto lambda = coupled_eigenvalues(s);
  for (const double l : lambda) {
    const auto v = twisted_null_vector(s.QC, l);
    double res = 0, vmax = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double row = -l * v[i];
      for (std::size_t j = 0; j < s.size(); ++j) row += s.QC(i, j) * v[j];
      res = std::max(res, std::abs(row));
      vmax = std::max(vmax, std::abs(v[i]));
    }
    EXPECT_LE(res, 1e-12 * max_abs(s.QC) * vmax);
  }
}

TEST(CG, CorruptedColumnFailsOrthogonality) {
  auto t = cg_by_diagonalization(sector(sl_sl(), 5));
  for (std::size_t n = 0; n < t.coeffs.rows(); ++n) t.coeffs(n, 2) = 0.0;
  EXPECT_GE(orthogonality_check(t), 1.0 - 1e-12);
}

TEST(CG, NonUnitaryRejected) {
  const auto c = compose(spec(0, 1, 1.25), 0.5, spec(1, 0, 1.25), 1.0, 10);
  ASSERT_FALSE(c.unitary());
  const auto s = sector(c, 3);
  EXPECT_THROW(cg_by_diagonalization(s), RequiresUnitary);
  EXPECT_THROW(cg_by_recurrence(s), RequiresUnitary);
}

TEST(CG, ZeroOffDiagonalRejected) {
  auto s = sector(sl_sl(), 4);
  s.QC(2, 3) = 0.0;
  try {
    recurrence_polynomials(s);
    FAIL() << "expected ZeroSubdiagonal";
  } catch (const ZeroSubdiagonal& e) {
    EXPECT_EQ(e.index(), 3);
  }
}

TEST(CG, SelectionRule) {
  const auto c = sl_sl(0.8, 1.0, 0.5);
  const auto small = couple(build_ladder_rep(c.repA.spec, 1.0, 8), build_ladder_rep(c.repB.spec, 0.5, 8));
  const auto r = selection_rule_check(small);
  EXPECT_EQ(r.cross_sector, 0.0);
  EXPECT_LE(r.eigenvector_residual, 1e-12);
}

TEST(QHahn, TrivialRowAndColumn) {
  const auto s = sector(sl_sl(), 7);
  const auto p = make_qhahn_params(s);
  ASSERT_TRUE(p.defined);
  for (const auto lower : {LowerParameter::rq, LowerParameter::rq2}) {
    const auto phi = qhahn_phi_table(p, s.q(), lower);
    for (std::size_t k = 0; k < s.size(); ++k) {
      EXPECT_EQ(phi(0, k), 1.0);
      EXPECT_EQ(phi(k, 0), 1.0);
    }
  }
}

// The table is a dual q-Hahn family in base q^2; by duality each entry is a
// q-Hahn polynomial with the roles of n and x exchanged.
TEST(QHahn, PhiTableMatchesReferencePolynomial) {
  const auto s = sector(sl_sl(), 6);
  const auto p = make_qhahn_params(s);
  const double Q = 0.64;
  for (const auto lower : {LowerParameter::rq, LowerParameter::rq2}) {
    const auto phi = qhahn_phi_table(p, s.q(), lower);
    const double gamma = (lower == LowerParameter::rq ? p.r * 0.8 : p.r * Q) / Q;
    const double delta = p.s_inv_r / (gamma * Q);
    for (int n = 0; n <= 6; ++n)
      for (int x = 0; x <= 6; ++x) {
        const double ref = qhahn_reference(x, n, gamma, delta, 6, Q);
        EXPECT_NEAR(phi(n, x), ref, 1e-10 * std::max(1.0, std::abs(ref))) << n << ' ' << x;
      }
  }
}

TEST(QHahn, NormalizationFitsOwnOrthogonalFamily) {
  // Columns h_n phi(n, x) of a genuinely orthogonal table give back h.
  const auto s = sector(sl_sl(), 5);
  const auto t = cg_by_diagonalization(s);
  Matrix<double> phi(6, 6);
  for (std::size_t n = 0; n < 6; ++n)
    for (std::size_t x = 0; x < 6; ++x) phi(n, x) = t.coeffs(n, x) / t.coeffs(0, x);
  const auto norm = fit_row_normalization(phi, 5);
  EXPECT_LE(norm.orthogonality_residual, 1e-10);
  EXPECT_TRUE(norm.positive_weights);
}

TEST(QHahn, AuditReportsEveryCandidate) {
  const auto s = sector(sl_sl(), 4);
  const auto audit = qhahn_audit(s, cg_by_recurrence(s));
  ASSERT_EQ(audit.candidates.size(), 4u);
  for (const auto& c : audit.candidates) {
    EXPECT_FALSE(c.status.empty());
    if (c.status == "ok") {
      EXPECT_TRUE(c.max_deviation.has_value());
    }
  }
}

TEST(QHahn, UndefinedWithoutBothEndParameters) {
  const auto c = compose(spec(0, 1, 1.25), 0.5, spec(1, 0, 1.25), 1.0, 10);
  EXPECT_FALSE(make_qhahn_params(sector(c, 3)).defined);
}

TEST(ClosedForms, CorrectedFormsMatchMatrixData) {
  const auto c = sl_sl();
  for (int N : {1, 4, 10, 20}) {
    const auto a = closed_form_audit(sector(c, N));
    ASSERT_FALSE(a.w_squared.empty());
    EXPECT_LE(a.w_squared.back().deviation, 1e-12) << N;
    EXPECT_NEAR(a.w_squared.back().scale, 1.0, 1e-12) << N;
    EXPECT_LE(a.z.back().deviation, 1e-12) << N;
    EXPECT_LE(a.lambda_corrected_deviation, 1e-12) << N;
    EXPECT_LE(*a.side2_corrected_deviation, 1e-12) << N;
  }
}

// The displayed lambda(x) carries c1 c2 where the Casimir value carries c1;
// the two coincide only for c2 = 1.
TEST(ClosedForms, LambdaDisplayedFormNeedsUnitC2) {
  EXPECT_LE(closed_form_audit(sector(sl_sl(), 5)).lambda_printed_deviation, 1e-12);
  const auto c = compose(spec(2, 1, 0.8), 1.0, spec(1, 1, 0.8), 0.5);
  ASSERT_TRUE(c.unitary());
  const auto a = closed_form_audit(sector(c, 5));
  EXPECT_LE(a.lambda_corrected_deviation, 1e-12);
  EXPECT_GT(a.lambda_printed_deviation, 1e-3);
}
