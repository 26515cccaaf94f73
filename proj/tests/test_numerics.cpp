#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "qhahn/numerics.hpp"

using namespace qhahn;
using mp50 = boost::multiprecision::cpp_bin_float_50;

namespace {

SymTridiagonal<double> random_jacobi(std::size_t m, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymTridiagonal<double> t;
  for (std::size_t i = 0; i < m; ++i) t.diag.push_back(u(rng));
  for (std::size_t i = 0; i + 1 < m; ++i) t.offdiag.push_back(u(rng));
  return t;
}

// Number of eigenvalues below x (Sturm sequence); independent of QL.
int sturm_count(const SymTridiagonal<double>& t, const mp50& x) {
  int count = 0;
  mp50 d = mp50(t.diag[0]) - x;
  if (d < 0) ++count;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (d == 0) d = mp50(1e-80);
    const mp50 e = t.offdiag[i - 1];
    d = mp50(t.diag[i]) - x - e * e / d;
    if (d < 0) ++count;
  }
  return count;
}

mp50 bisect_eigenvalue(const SymTridiagonal<double>& t, int k) {
  const mp50 bound = mp50(3) * t.max_norm() + 1;
  mp50 lo = -bound, hi = bound;
  for (int it = 0; it < 200; ++it) {
    const mp50 mid = (lo + hi) / 2;
    if (sturm_count(t, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace

TEST(Numerics, OneByOne) {
  const auto e = eig_sym_tridiagonal(SymTridiagonal<double>{{3.5}, {}});
  ASSERT_EQ(e.values.size(), 1u);
  EXPECT_EQ(e.values[0], 3.5);
  EXPECT_EQ(e.vectors(0, 0), 1.0);
}

TEST(Numerics, TwoByTwo) {
  const auto e = eig_sym_tridiagonal(SymTridiagonal<double>{{0.0, 0.0}, {1.0}});
  EXPECT_NEAR(e.values[0], -1.0, 1e-15);
  EXPECT_NEAR(e.values[1], 1.0, 1e-15);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), h, 1e-15);
  EXPECT_NEAR(e.vectors(0, 0), -e.vectors(1, 0), 1e-15);
  EXPECT_NEAR(e.vectors(0, 1), e.vectors(1, 1), 1e-15);
}

TEST(Numerics, RejectsBadShapes) {
  EXPECT_THROW(eig_sym_tridiagonal(SymTridiagonal<double>{{}, {}}), ShapeMismatch);
  EXPECT_THROW(eig_sym_tridiagonal(SymTridiagonal<double>{{1, 2}, {}}), ShapeMismatch);
  EXPECT_THROW(Matrix<double>(2, 3) * Matrix<double>(2, 3), ShapeMismatch);
  EXPECT_THROW(Matrix<double>(2, 3) + Matrix<double>(3, 2), ShapeMismatch);
}

TEST(Numerics, RandomJacobiReconstruction) {
  std::mt19937 rng(20);
  const auto t = random_jacobi(20, rng);
  const auto e = eig_sym_tridiagonal(t);
  const Matrix<double> V = e.vectors;
  const Matrix<double> recon = V * Matrix<double>::diagonal(e.values) * V.transpose();
  EXPECT_LE(frobenius(recon - t.to_matrix()) / frobenius(t.to_matrix()), 1e-12);
}

TEST(Numerics, EigenpairsAcrossSizes) {
  std::mt19937 rng(7);
  for (std::size_t m = 1; m <= 64; ++m) {
    const auto t = random_jacobi(m, rng);
    const auto T = t.to_matrix();
    const auto e = eig_sym_tridiagonal(t);
    const double norm = std::max(t.max_norm(), 1e-300);
    for (std::size_t j = 0; j < m; ++j) {
      if (j > 0) {
        EXPECT_LE(e.values[j - 1], e.values[j]);
      }
      double res = 0;
      for (std::size_t i = 0; i < m; ++i) {
        double tv = 0;
        for (std::size_t k = 0; k < m; ++k) tv += T(i, k) * e.vectors(k, j);
        res += (tv - e.values[j] * e.vectors(i, j)) * (tv - e.values[j] * e.vectors(i, j));
      }
      EXPECT_LE(std::sqrt(res), 1e-12 * norm * std::sqrt(double(m))) << "m=" << m << " j=" << j;
    }
    const Matrix<double> gram = e.vectors.transpose() * e.vectors;
    EXPECT_LE(max_abs(gram - Matrix<double>::identity(m)), 1e-12) << "m=" << m;
  }
}

TEST(Numerics, EigenvaluesMatchSturmBisection) {
  std::mt19937 rng(11);
  const auto t = random_jacobi(24, rng);
  const auto e = eig_sym_tridiagonal(t);
  for (int k = 0; k < 24; ++k)
    EXPECT_NEAR(e.values[k], static_cast<double>(bisect_eigenvalue(t, k)), 1e-13) << k;
}

TEST(Numerics, GradedMatrixSmallEigenvaluesKeepRelativeAccuracy) {
  // Entries spanning many orders of magnitude, large at the top.
  SymTridiagonal<double> t;
  const std::size_t m = 16;
  for (std::size_t i = 0; i < m; ++i) t.diag.push_back(std::pow(0.25, double(i)));
  for (std::size_t i = 0; i + 1 < m; ++i) t.offdiag.push_back(0.3 * std::pow(0.25, double(i) + 0.5));
  const auto e = eig_sym_tridiagonal(t);
  for (int k = 0; k < int(m); ++k) {
    const double ref = static_cast<double>(bisect_eigenvalue(t, k));
    EXPECT_LE(std::abs(e.values[k] - ref), 1e-12 * std::abs(ref)) << k;
  }
}

TEST(Numerics, ConvergenceCapIsEnforced) {
  // A matrix that needs work with a zero iteration budget must throw.
  std::vector<double> d{1.0, 2.0, 3.0}, e{0.5, 0.5, 0.0};
  auto z = Matrix<double>::identity(3);
  EXPECT_THROW(detail::ql_implicit(d, e, z, 0), ConvergenceFailure);
}

TEST(Numerics, BasicMatrixIdentities) {
  Matrix<double> M(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) M(i, j) = double(i * 3 + j) - 2.5;
  EXPECT_EQ(max_abs(commutator(Matrix<double>::identity(3), M)), 0.0);
  for (std::size_t n = 1; n <= 9; ++n) EXPECT_DOUBLE_EQ(frobenius(Matrix<double>::identity(n)), std::sqrt(double(n)));
  EXPECT_EQ(anticommutator(Matrix<double>::identity(3), M), 2.0 * M);
  const auto qm = q_mutator(M, Matrix<double>::identity(3), 2.0);
  EXPECT_LE(max_abs(qm - 1.5 * M), 1e-15);
  const auto K = kron(Matrix<double>::identity(2), M);
  EXPECT_EQ(K.rows(), 6u);
  EXPECT_EQ(K(4, 5), M(1, 2));
  EXPECT_EQ(K(1, 4), 0.0);
}

TEST(Numerics, FrobeniusDoesNotOverflow) {
  Matrix<double> M(2, 2, 1e200);
  EXPECT_NEAR(frobenius(M) / 2e200, 1.0, 1e-15);
}

TEST(Numerics, LeastSquaresConsistentSystem) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<double> A(30, 4);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 4; ++j) A(i, j) = u(rng);
  const std::vector<double> x{0.5, -2.0, 3.25, 1e-3};
  std::vector<double> b(30, 0.0);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 4; ++j) b[i] += A(i, j) * x[j];
  const auto r = least_squares(A, std::span<const double>(b));
  double bn = 0;
  for (double v : b) bn += v * v;
  EXPECT_LE(r.residual, 1e-12 * std::sqrt(bn));
  EXPECT_FALSE(r.rank_deficient);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(r.solution[j], x[j], 1e-12);
}

TEST(Numerics, LeastSquaresRankDeficientGivesMinimumNorm) {
  Matrix<double> A(3, 2);
  for (std::size_t i = 0; i < 3; ++i) A(i, 0) = A(i, 1) = double(i + 1);
  const std::vector<double> b{2.0, 4.0, 6.0};
  const auto r = least_squares(A, std::span<const double>(b));
  EXPECT_TRUE(r.rank_deficient);
  EXPECT_EQ(r.rank, 1u);
  EXPECT_NEAR(r.solution[0], 1.0, 1e-14);
  EXPECT_NEAR(r.solution[1], 1.0, 1e-14);
  EXPECT_THROW(least_squares(A, std::span<const double>(b.data(), 2)), ShapeMismatch);
}

TEST(Numerics, RelativeResidualScalesByTerms) {
  EXPECT_DOUBLE_EQ(relative_residual(1.0, {2.0, 3.0}), 0.2);
  EXPECT_DOUBLE_EQ(relative_residual(1.0, {0.0}), 1.0);
}

TEST(Numerics, ExtendedPrecisionInstantiation) {
  SymTridiagonal<mp50> t{{mp50(0), mp50(0)}, {mp50(1)}};
  const auto e = eig_sym_tridiagonal(t);
  EXPECT_LT(boost::multiprecision::abs(e.values[1] - 1), mp50("1e-45"));
}
