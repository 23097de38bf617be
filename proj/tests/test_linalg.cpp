#include <gtest/gtest.h>

#include <cmath>

#include "eigen_oracle.hpp"

using namespace l2o;
using l2o::test::to_eigen;

TEST(Rng, FirstNormalsOfSeed7) {
  SeededRng rng(7);
  const double want[] = {1.3649923, 0.14452122, -0.39652398, -0.22759631};
  for (double w : want) EXPECT_NEAR(rng.normal(), w, 5e-8);
}

TEST(Rng, SameSeedSameStream) {
  SeededRng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    differs |= x != c.normal();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformInHalfOpenUnitInterval) {
  SeededRng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
}

TEST(Rng, MillionSampleMoments) {
  SeededRng rng(7);
  const Matrix A = gaussian_matrix(rng, 1000, 1000);
  double s = 0.0;
  for (double v : A.entries()) s += v;
  const double mean = s / 1e6;
  double ss = 0.0;
  for (double v : A.entries()) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, -0.0010351679035749592, 1e-12);
  EXPECT_NEAR(ss / 1e6, 0.99939080162821425, 1e-10);
}

TEST(Rng, EmptyShapeThrows) {
  SeededRng rng(1);
  EXPECT_THROW(gaussian_matrix(rng, 0, 3), std::invalid_argument);
}

TEST(Matrix, ProductsMatchEigen) {
  SeededRng rng(11);
  const Matrix A = gaussian_matrix(rng, 7, 5), B = gaussian_matrix(rng, 5, 9);
  const Eigen::MatrixXd C = to_eigen(A) * to_eigen(B);
  const Matrix C2 = matmul(A, B);
  EXPECT_LT((to_eigen(C2) - C).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((to_eigen(gram_cols(A)) - to_eigen(A).transpose() * to_eigen(A)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((to_eigen(gram_rows(A)) - to_eigen(A) * to_eigen(A).transpose()).cwiseAbs().maxCoeff(), 1e-12);

  const Vector x = gaussian_vector(rng, 5), y = gaussian_vector(rng, 7);
  EXPECT_LT((to_eigen(matvec(A, x)) - to_eigen(A) * to_eigen(x)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((to_eigen(tmatvec(A, y)) - to_eigen(A).transpose() * to_eigen(y)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(matmul(A, A), std::invalid_argument);
}

TEST(Matrix, ArithmeticAndShapes) {
  Matrix A(2, 3);
  A(0, 1) = 2.0;
  A(1, 2) = -4.0;
  const Matrix At = A.transposed();
  EXPECT_EQ(At.rows(), 3u);
  EXPECT_EQ(At(2, 1), -4.0);
  const Matrix B = 2.0 * A + A - A;
  EXPECT_EQ(B(0, 1), 4.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(A), std::sqrt(20.0));
  EXPECT_EQ(max_abs(A.entries()), 4.0);
  EXPECT_THROW(A += At, std::invalid_argument);
  A(0, 0) = std::nan("");
  EXPECT_FALSE(A.all_finite());
  EXPECT_EQ(Matrix::identity(3)(2, 2), 1.0);
}

class QrShapes : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(QrShapes, ReconstructsWithOrthonormalQ) {
  const auto [m, n] = GetParam();
  SeededRng rng(static_cast<std::uint64_t>(m * 100 + n));
  const Matrix A = gaussian_matrix(rng, m, n);
  const auto [Q, R] = qr_decompose(A);
  const std::size_t k = std::min(m, n);
  ASSERT_EQ(Q.rows(), static_cast<std::size_t>(m));
  ASSERT_EQ(Q.cols(), k);
  ASSERT_EQ(R.rows(), k);
  EXPECT_LT((to_eigen(matmul(Q, R)) - to_eigen(A)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((to_eigen(gram_cols(Q)) - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t i = 0; i < k; ++i) {
    EXPECT_GE(R(i, i), 0.0);
    for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(R(i, j), 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Linalg, QrShapes,
                         ::testing::Values(std::pair{1, 1}, std::pair{2, 2}, std::pair{6, 3}, std::pair{3, 6},
                                           std::pair{40, 40}, std::pair{64, 2}));

TEST(Qr, ZeroAndRankDeficientInputs) {
  Matrix Z(3, 2);
  const auto [Q, R] = qr_decompose(Z);
  EXPECT_EQ(frobenius_norm(R), 0.0);
  EXPECT_LT((to_eigen(gram_cols(Q)) - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-14);

  Matrix D(3, 3);
  for (std::size_t i = 0; i < 3; ++i) D(i, 0) = D(i, 1) = static_cast<double>(i + 1);
  const auto [Q2, R2] = qr_decompose(D);
  EXPECT_LT((to_eigen(matmul(Q2, R2)) - to_eigen(D)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(qr_decompose(Matrix()), std::invalid_argument);
}

class SvdShapes : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(SvdShapes, ExtremeSingularValuesMatchEigen) {
  const auto [m, n] = GetParam();
  SeededRng rng(static_cast<std::uint64_t>(m * 7 + n));
  const Matrix A = gaussian_matrix(rng, m, n);
  const Eigen::VectorXd s = l2o::test::singular_values(A);
  EXPECT_NEAR(spectral_norm(A), s(0), 1e-9 * s(0));
  EXPECT_NEAR(smallest_singular_value(A), s(s.size() - 1), 1e-8 * s(0));
}

// Covers both the exact Jacobi path and the iterative path above 64.
INSTANTIATE_TEST_SUITE_P(Linalg, SvdShapes,
                         ::testing::Values(std::pair{1, 5}, std::pair{5, 1}, std::pair{8, 8}, std::pair{25, 32},
                                           std::pair{64, 64}, std::pair{70, 90}, std::pair{120, 80}));

TEST(Svd, SingularMatrixHasZeroSigmaMin) {
  Matrix A(4, 4);
  for (std::size_t i = 0; i < 3; ++i) A(i, i) = 1.0 + static_cast<double>(i);
  EXPECT_NEAR(smallest_singular_value(A), 0.0, 1e-12);
  EXPECT_NEAR(spectral_norm(A), 3.0, 1e-12);
  EXPECT_EQ(spectral_norm(Matrix(3, 3)), 0.0);
}

TEST(Svd, DiagonalExact) {
  Matrix A(3, 5);
  A(0, 0) = 3.0;
  A(1, 1) = -0.5;
  A(2, 2) = 2.0;
  EXPECT_NEAR(spectral_norm(A), 3.0, 1e-14);
  EXPECT_NEAR(smallest_singular_value(A), 0.5, 1e-14);
}
