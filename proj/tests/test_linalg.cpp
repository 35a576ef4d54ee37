#include <gtest/gtest.h>

#include <cmath>

#include "qnadmm/errors.hpp"
#include "qnadmm/linalg.hpp"
#include "support.hpp"

using namespace qnadmm;
using namespace qnadmm::testing;

TEST(VectorOps, Basics) {
  const Vector a{1, -2, 3};
  const Vector b{4, 5, -6};
  EXPECT_DOUBLE_EQ(dot(a, b), 4 - 10 - 18);
  EXPECT_DOUBLE_EQ(norm2(Vector{3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(norm_inf(a), 3.0);
  EXPECT_DOUBLE_EQ(norm1(a), 6.0);
  EXPECT_EQ(add(a, b), (Vector{5, 3, -3}));
  EXPECT_EQ(subtract(a, b), (Vector{-3, -7, 9}));
  EXPECT_EQ(scaled(a, 2.0), (Vector{2, -4, 6}));
  Vector y = b;
  axpy(2.0, a, y);
  EXPECT_EQ(y, (Vector{6, 1, 0}));
  EXPECT_THROW(dot(a, Vector{1, 2}), DimensionError);
}

TEST(SparseMatrix, ValidatesLayout) {
  EXPECT_NO_THROW(SparseMatrix(2, 2, {0, 1, 2}, {0, 1}, {1.0, 2.0}));
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 2.0}), InvalidArgument);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 1, 2}, {0, 2}, {1.0, 2.0}), InvalidArgument);
  EXPECT_THROW(SparseMatrix(2, 1, {0, 2}, {1, 0}, {1.0, 2.0}), InvalidArgument);
  EXPECT_THROW(SparseMatrix(2, 1, {0, 2}, {0, 0}, {1.0, 2.0}), InvalidArgument);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 1, 2}, {0, 1}, {1.0}), InvalidArgument);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 1}, {0}, {1.0}), InvalidArgument);
}

TEST(SparseMatrix, TripletsSumDuplicates) {
  const SparseMatrix a = SparseMatrix::from_triplets(2, 2, {{1, 0, 1.0}, {0, 0, 2.0}, {1, 0, 3.0}});
  EXPECT_EQ(a.nnz(), 2u);
  const DenseMatrix d = a.to_dense();
  EXPECT_DOUBLE_EQ(d(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(d(1, 0), 4.0);
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), InvalidArgument);
}

TEST(SparseMatrix, DenseRoundTripAndTranspose) {
  Draw draw(3);
  const SparseMatrix a = draw.sparse(5, 4, 0.5);
  EXPECT_EQ(SparseMatrix::from_dense(a.to_dense()), a);
  EXPECT_EQ(to_eigen(a.transposed()), to_eigen(a).transpose());
}

TEST(Matvec, IdentityAndZero) {
  const SparseMatrix eye = SparseMatrix::identity(3);
  EXPECT_EQ(matvec(eye, Vector{1, 2, 3}), (Vector{1, 2, 3}));
  const SparseMatrix zero(3, 2, {0, 0, 0}, {}, {});
  EXPECT_EQ(matvec(zero, Vector{5, -1}), (Vector{0, 0, 0}));
  EXPECT_THROW(matvec(eye, Vector{1, 2}), DimensionError);
}

TEST(Matvec, RandomAgainstDenseOracle) {
  Draw draw(11);
  for (int trial = 0; trial < 20; ++trial) {
    const SparseMatrix a = draw.sparse(5, 4, 0.6);
    const Vector v = draw.vector(4);
    const Eigen::VectorXd want = to_eigen(a) * to_eigen(v);
    EXPECT_LE((to_eigen(matvec(a, v)) - want).norm(), 1e-12 * std::max(1.0, want.norm()));
  }
}

TEST(MatvecTranspose, IdentityAndColumnSum) {
  EXPECT_EQ(matvec_transpose(SparseMatrix::identity(3), Vector{4, 5, 6}), (Vector{4, 5, 6}));
  const SparseMatrix ones(3, 1, {0, 3}, {0, 1, 2}, {1.0, 1.0, 1.0});
  EXPECT_EQ(matvec_transpose(ones, Vector{1, 2, 3}), (Vector{6}));
  EXPECT_THROW(matvec_transpose(ones, Vector{1, 2}), DimensionError);
}

TEST(MatvecTranspose, RandomAgainstDenseOracle) {
  Draw draw(12);
  for (int trial = 0; trial < 20; ++trial) {
    const SparseMatrix a = draw.sparse(5, 4, 0.6);
    const Vector v = draw.vector(5);
    const Eigen::VectorXd want = to_eigen(a).transpose() * to_eigen(v);
    EXPECT_LE((to_eigen(matvec_transpose(a, v)) - want).norm(),
              1e-12 * std::max(1.0, want.norm()));
  }
}

TEST(Matvec, AdjointConsistency) {
  Draw draw(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = draw.index(1, 30);
    const std::size_t n = draw.index(1, 30);
    const SparseMatrix a = draw.sparse(m, n, 0.3);
    const Vector v = draw.vector(n);
    const Vector w = draw.vector(m);
    const double lhs = dot(matvec(a, v), w);
    const double rhs = dot(v, matvec_transpose(a, w));
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
  }
}

TEST(Gram, MatchesDenseProducts) {
  Draw draw(14);
  const SparseMatrix a = draw.sparse(7, 5, 0.5);
  const Eigen::MatrixXd ad = to_eigen(a);
  EXPECT_LE(rel_diff(to_eigen(gram_columns(a)), ad.transpose() * ad), 1e-14);
  EXPECT_LE(rel_diff(to_eigen(gram_rows(a)), ad * ad.transpose()), 1e-14);
}

TEST(DenseMatrix, Arithmetic) {
  const DenseMatrix a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_DOUBLE_EQ(a(1, 0), 3.0);
  EXPECT_EQ(a.transposed(), DenseMatrix::from_rows({{1, 3}, {2, 4}}));
  EXPECT_EQ(a + a, 2.0 * a);
  EXPECT_EQ(a - a, DenseMatrix(2, 2));
  EXPECT_EQ(multiply(a, Vector{1, 1}), (Vector{3, 7}));
  EXPECT_EQ(multiply(a, DenseMatrix::identity(2)), a);
  EXPECT_DOUBLE_EQ(norm_inf(a), 7.0);
  EXPECT_DOUBLE_EQ(asymmetry(a), 1.0);
  EXPECT_DOUBLE_EQ(asymmetry(symmetrized(a)), 0.0);
  EXPECT_DOUBLE_EQ(norm_frobenius(a), std::sqrt(30.0));
  EXPECT_EQ(DenseMatrix::diagonal(Vector{1, 2}), DenseMatrix::from_rows({{1, 0}, {0, 2}}));
}

TEST(Cholesky, Identity) {
  const CholeskyFactor f = cholesky(DenseMatrix::identity(4));
  EXPECT_EQ(f.lower(), DenseMatrix::identity(4));
  EXPECT_EQ(f.dimension(), 4u);
}

TEST(Cholesky, HandExpansion) {
  const CholeskyFactor f = cholesky(DenseMatrix::from_rows({{4, 2}, {2, 3}}));
  EXPECT_DOUBLE_EQ(f.lower()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(f.lower()(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(f.lower()(1, 0), 1.0);
  EXPECT_NEAR(f.lower()(1, 1), std::sqrt(2.0), 1e-15);
}

TEST(Cholesky, IndefiniteReportsPivot) {
  try {
    cholesky(DenseMatrix::from_rows({{1, 2}, {2, 1}}));
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 1u);
    EXPECT_NEAR(e.value(), -3.0, 1e-12);
    EXPECT_NE(std::string(e.what()).find("not positive definite"), std::string::npos);
  }
}

TEST(Cholesky, RejectsAsymmetricAndNonSquare) {
  EXPECT_THROW(cholesky(DenseMatrix::from_rows({{2, 1}, {0, 2}})), InvalidArgument);
  EXPECT_THROW(cholesky(DenseMatrix(2, 3)), DimensionError);
}

TEST(Cholesky, ToleratesRoundoffAsymmetry) {
  DenseMatrix s = DenseMatrix::from_rows({{4, 2}, {2, 3}});
  s(0, 1) += 1e-12;
  EXPECT_NO_THROW(cholesky(s));
}

TEST(Cholesky, ReconstructsRandomSpd) {
  Draw draw(21);
  for (std::size_t n : {1u, 5u, 30u, 80u}) {
    const Eigen::MatrixXd s = draw.spd(n);
    const Eigen::MatrixXd l = to_eigen(cholesky(from_eigen(s)).lower());
    EXPECT_LE((l * l.transpose() - s).norm() / s.norm(), 1e-10);
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_GT(l(j, j), 0.0);
      for (std::size_t i = 0; i < j; ++i) EXPECT_EQ(l(i, j), 0.0);
    }
  }
}

TEST(SolveSpd, Identity) {
  const CholeskyFactor f = cholesky(DenseMatrix::identity(3));
  EXPECT_EQ(solve_spd(f, Vector{1, -2, 3}), (Vector{1, -2, 3}));
  EXPECT_THROW(solve_spd(f, Vector{1, 2}), DimensionError);
}

TEST(SolveSpd, TwoByTwo) {
  const Vector x = solve_spd(cholesky(DenseMatrix::from_rows({{4, 2}, {2, 3}})), Vector{8, 7});
  EXPECT_NEAR(x[0], 1.25, 1e-14);
  EXPECT_NEAR(x[1], 1.5, 1e-14);
}

TEST(SolveSpd, RandomAgainstInverse) {
  Draw draw(22);
  const Eigen::MatrixXd s = draw.spd(10);
  const Vector rhs = draw.vector(10);
  const Eigen::VectorXd want = s.inverse() * to_eigen(rhs);
  EXPECT_LE(rel_diff(to_eigen(solve_spd(cholesky(from_eigen(s)), rhs)), want), 1e-8);
}

TEST(SolveSpd, ComposesToIdentityUpTo200) {
  Draw draw(23);
  for (std::size_t n : {2u, 17u, 64u, 200u}) {
    const Eigen::MatrixXd s = draw.spd(n);
    const Vector rhs = draw.vector(n);
    const Vector x = solve_spd(cholesky(from_eigen(s)), rhs);
    const Eigen::VectorXd back = s * to_eigen(x);
    EXPECT_LE((back - to_eigen(rhs)).norm(), 1e-8 * norm2(rhs)) << "n=" << n;
  }
}

TEST(PowerIteration, ScaledIdentity) {
  const auto apply = [](std::span<const double> v) { return scaled(v, 2.0); };
  EXPECT_NEAR(max_eigenvalue_sym(apply, 4), 2.0, 1e-12);
}

TEST(PowerIteration, Diagonal) {
  const Vector d{1, 2, 5};
  const auto apply = [&](std::span<const double> v) {
    Vector out(v.begin(), v.end());
    for (std::size_t i = 0; i < 3; ++i) out[i] *= d[i];
    return out;
  };
  EXPECT_NEAR(max_eigenvalue_sym(apply, 3), 5.0, 5.0 * 1e-6);
}

TEST(PowerIteration, GramAgainstDenseSpectrum) {
  Draw draw(31);
  for (int trial = 0; trial < 10; ++trial) {
    const SparseMatrix a = draw.sparse(8, 8, 0.7);
    const auto apply = [&](std::span<const double> v) {
      return matvec_transpose(a, matvec(a, v));
    };
    const Eigen::MatrixXd ad = to_eigen(a);
    const double want = max_eig(ad.transpose() * ad);
    if (want == 0.0) continue;
    const double got = max_eigenvalue_sym(apply, 8);
    EXPECT_LE(std::abs(got - want), 1e-6 * want) << "trial " << trial;
    EXPECT_LE(got, want + 1e-6 * want);
  }
}

TEST(PowerIteration, DeterministicForSeed) {
  Draw draw(32);
  const Eigen::MatrixXd s = draw.spd(12);
  const auto apply = [&](std::span<const double> v) {
    return from_eigen_vec(s * to_eigen(v));
  };
  EXPECT_EQ(max_eigenvalue_sym(apply, 12), max_eigenvalue_sym(apply, 12));
}

TEST(PowerIteration, ExhaustionCarriesEstimate) {
  const Vector d{1.0, 0.999, 0.5};
  const auto apply = [&](std::span<const double> v) {
    Vector out(v.begin(), v.end());
    for (std::size_t i = 0; i < 3; ++i) out[i] *= d[i];
    return out;
  };
  PowerIterationOptions opts;
  opts.tol = 1e-15;
  opts.max_iter = 3;
  try {
    max_eigenvalue_sym(apply, 3, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.last_estimate(), 0.5);
    EXPECT_LE(e.last_estimate(), 1.0 + 1e-12);
  }
  EXPECT_THROW(max_eigenvalue_sym(apply, 0), InvalidArgument);
}
