#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "testing.hpp"

using namespace fdembed;
using linalg::Matrix;
using linalg::SvdOptions;
using linalg::Vector;

namespace {

double reconstruction_error(const Matrix& m, const linalg::SvdResult& r) {
  Matrix rec = r.u * r.singular_values.asDiagonal() * r.vt;
  return (m - rec).norm() / std::max(m.norm(), 1e-300);
}

double orthogonality_error(const Matrix& q, bool rows) {
  Eigen::MatrixXd g = rows ? Eigen::MatrixXd(q * q.transpose()) : Eigen::MatrixXd(q.transpose() * q);
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

void expect_sign_convention(const Matrix& vt) {
  for (Eigen::Index i = 0; i < vt.rows(); ++i) {
    Eigen::Index arg = 0;
    vt.row(i).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(vt(i, arg), 0.0) << "row " << i;
  }
}

}  // namespace

TEST(ThinSvd, Identity) {
  Matrix m = Matrix::Identity(3, 3);
  auto r = linalg::thin_svd(m);
  ASSERT_EQ(r.rank(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.singular_values[i], 1.0, 1e-14);
  EXPECT_LE(reconstruction_error(m, r), 1e-14);
}

TEST(ThinSvd, EmbeddedDiagonal) {
  Matrix m = Matrix::Zero(2, 5);
  m(0, 0) = 3.0;
  m(1, 1) = 2.0;
  auto r = linalg::thin_svd(m);
  EXPECT_NEAR(r.singular_values[0], 3.0, 1e-14);
  EXPECT_NEAR(r.singular_values[1], 2.0, 1e-14);
  Matrix e = Matrix::Zero(2, 5);
  e(0, 0) = 1.0;
  e(1, 1) = 1.0;
  EXPECT_LE((r.vt - e).cwiseAbs().maxCoeff(), 1e-14);  // sign convention picks +e_i
}

TEST(ThinSvd, RandomReconstructionAndOrthogonality) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Matrix m = fdembed::testing::random_normal(8, 40, seed);
    auto r = linalg::thin_svd(m);
    EXPECT_LE(reconstruction_error(m, r), 1e-10);
    EXPECT_LE(orthogonality_error(r.u, false), 1e-10);
    EXPECT_LE(orthogonality_error(r.vt, true), 1e-10);
    for (Eigen::Index i = 1; i < r.singular_values.size(); ++i)
      EXPECT_LE(r.singular_values[i], r.singular_values[i - 1]);
    expect_sign_convention(r.vt);
  }
}

TEST(ThinSvd, MatchesJacobiEigenOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Matrix m = fdembed::testing::random_normal(6, 30, 100 + seed);
    auto r = linalg::thin_svd(m);
    Eigen::MatrixXd gram = m * m.transpose();
    Vector ev = fdembed::testing::jacobi_eigenvalues(gram);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(r.singular_values[i], std::sqrt(std::max(ev[i], 0.0)), 1e-8);
    Vector sv = linalg::singular_values(m);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(sv[i], std::sqrt(std::max(ev[i], 0.0)), 1e-8);
  }
}

TEST(ThinSvd, TallInput) {
  Matrix m = fdembed::testing::random_normal(30, 5, 7);
  auto r = linalg::thin_svd(m);
  ASSERT_EQ(r.rank(), 5u);
  EXPECT_EQ(r.u.rows(), 30);
  EXPECT_EQ(r.vt.cols(), 5);
  EXPECT_LE(reconstruction_error(m, r), 1e-10);
  EXPECT_LE(orthogonality_error(r.u, false), 1e-10);
  EXPECT_LE(orthogonality_error(r.vt, true), 1e-10);
  expect_sign_convention(r.vt);
}

TEST(ThinSvd, RankDeficientKeepsOrthonormalFactors) {
  Matrix a = fdembed::testing::random_normal(6, 2, 3);
  Matrix b = fdembed::testing::random_normal(2, 25, 4);
  Matrix m = a * b;  // rank 2
  for (bool refine : {true, false}) {
    auto r = linalg::thin_svd(m, {.refine = refine});
    EXPECT_LE(reconstruction_error(m, r), 1e-10);
    EXPECT_LE(orthogonality_error(r.vt, true), 1e-10);
    EXPECT_LE(r.singular_values[2], 1e-10 * r.singular_values[0]);
  }
}

TEST(ThinSvd, SmallSingularValuesWithRefinement) {
  // graded spectrum down to 1e-12
  Matrix q1 = fdembed::testing::random_rotation(5, 1);
  Matrix q2 = fdembed::testing::random_rotation(20, 2).topRows(5);
  Vector s(5);
  s << 1.0, 1e-3, 1e-6, 1e-9, 1e-12;
  Matrix m = q1 * s.asDiagonal() * q2;
  auto r = linalg::thin_svd(m);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.singular_values[i] / s[i], 1.0, 1e-4) << i;
}

TEST(ThinSvd, FastPathZeroesTinyTriplets) {
  Matrix q1 = fdembed::testing::random_rotation(4, 5);
  Matrix q2 = fdembed::testing::random_rotation(12, 6).topRows(4);
  Vector s(4);
  s << 2.0, 1.0, 1e-9, 0.0;
  Matrix m = q1 * s.asDiagonal() * q2;
  auto r = linalg::thin_svd(m, {.refine = false});
  EXPECT_NEAR(r.singular_values[0], 2.0, 1e-10);
  EXPECT_NEAR(r.singular_values[1], 1.0, 1e-10);
  EXPECT_EQ(r.singular_values[2], 0.0);
  EXPECT_EQ(r.singular_values[3], 0.0);
  EXPECT_LE(orthogonality_error(r.vt, true), 1e-10);
  EXPECT_LE(reconstruction_error(m, r), 1e-8);
}

TEST(ThinSvd, RankOptionTruncates) {
  Matrix m = fdembed::testing::random_normal(10, 30, 9);
  auto full = linalg::thin_svd(m);
  auto top = linalg::thin_svd(m, {.rank = 3});
  ASSERT_EQ(top.rank(), 3u);
  EXPECT_EQ(top.vt.rows(), 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(top.singular_values[i], full.singular_values[i], 1e-10);
    EXPECT_NEAR(std::abs(top.vt.row(i).dot(full.vt.row(i))), 1.0, 1e-8);
  }
}

TEST(ThinSvd, ScaledMatchesExplicitScaling) {
  Matrix m = fdembed::testing::random_normal(6, 20, 11);
  std::vector<double> s{1.0, 2.0, 0.5, 0.0, 3.0, 1.0};
  Matrix scaled = m;
  for (int i = 0; i < 6; ++i) scaled.row(i) *= s[i];
  auto a = linalg::thin_svd_scaled(m, s);
  auto b = linalg::thin_svd(scaled);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(a.singular_values[i], b.singular_values[i], 1e-10);
  EXPECT_LE(reconstruction_error(scaled, a), 1e-10);
  // tall path applies the scale too
  Matrix tall = fdembed::testing::random_normal(8, 3, 12);
  std::vector<double> ts{1, 2, 3, 4, 5, 6, 7, 8};
  Matrix tall_scaled = tall;
  for (int i = 0; i < 8; ++i) tall_scaled.row(i) *= ts[i];
  EXPECT_LE(reconstruction_error(tall_scaled, linalg::thin_svd_scaled(tall, ts)), 1e-10);
}

TEST(ThinSvd, ZeroMatrix) {
  Matrix m = Matrix::Zero(3, 7);
  auto r = linalg::thin_svd(m);
  EXPECT_EQ(r.singular_values.norm(), 0.0);
  EXPECT_LE(orthogonality_error(r.vt, true), 1e-12);
}

TEST(ThinSvd, InvalidInput) {
  Matrix empty(0, 3);
  EXPECT_THROW(linalg::thin_svd(empty), std::invalid_argument);
  Matrix m = Matrix::Ones(2, 3);
  m(1, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(linalg::thin_svd(m), std::invalid_argument);
  m(1, 2) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(linalg::singular_values(m), std::invalid_argument);
  Matrix ok = Matrix::Ones(2, 3);
  std::vector<double> bad{1.0};
  EXPECT_THROW(linalg::thin_svd_scaled(ok, bad), std::invalid_argument);
}

TEST(ThinSvd, Deterministic) {
  Matrix m = fdembed::testing::random_normal(12, 50, 21);
  auto a = linalg::thin_svd(m);
  auto b = linalg::thin_svd(m);
  EXPECT_EQ(a.vt, b.vt);
  EXPECT_EQ(a.singular_values, b.singular_values);
}
