#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "srom/linalg.hpp"

using namespace srom;

namespace {

// Oracle: minimum-norm least-squares solution through a complete orthogonal
// decomposition, independent of the QR + SVD path under test.
Eigen::Vector4d oracle(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(1e-12);
  return cod.solve(b);
}

}  // namespace

TEST(Lsq, DuplicatedColumnsSplitEvenly) {
  const std::size_t n = 5;
  std::vector<double> a(n * 4, 0.0), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = a[n + i] = b[i] = 1.0 + static_cast<double>(i);
  }
  const auto y = minnorm_lsq(a, b);
  EXPECT_NEAR(y[0], 0.5, 1e-14);
  EXPECT_NEAR(y[1], 0.5, 1e-14);
  EXPECT_NEAR(y[2], 0.0, 1e-14);
  EXPECT_NEAR(y[3], 0.0, 1e-14);
}

TEST(Lsq, ZeroMatrixGivesZero) {
  std::vector<double> a(12, 0.0), b{1.0, 2.0, 3.0};
  const auto y = minnorm_lsq(a, b);
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(Lsq, FewerRowsThanColumns) {
  std::vector<double> a{1.0, 0.0, 1.0, 0.0};  // one row [1 0 1 0]
  std::vector<double> b{2.0};
  const auto y = minnorm_lsq(a, b);
  EXPECT_NEAR(y[0], 1.0, 1e-14);
  EXPECT_NEAR(y[2], 1.0, 1e-14);
  EXPECT_NEAR(y[1], 0.0, 1e-14);
}

TEST(Lsq, RejectsBadShapes) {
  std::vector<double> a(8), b;
  EXPECT_THROW(minnorm_lsq(a, b), ConfigError);
  std::vector<double> b3(3);
  EXPECT_THROW(minnorm_lsq(a, b3), ConfigError);
}

TEST(Lsq, MatchesPseudoinverseOnRandomSystems) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> rows(1, 40), rank_pick(0, 4);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int s = 0; s < 200; ++s) {
    const int n = rows(rng);
    const int r = std::min(rank_pick(rng), n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, 4);
    if (r > 0) {
      Eigen::MatrixXd l(n, r), m(r, 4);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) l(i, j) = nd(rng);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = nd(rng);
      a = l * m;
    }
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = nd(rng);
    std::vector<double> av(a.data(), a.data() + a.size()), bv(b.data(), b.data() + b.size());
    const auto y = minnorm_lsq(av, bv);
    const auto want = oracle(a, b);
    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(y[static_cast<std::size_t>(k)] - want(k)));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Lsq, InplaceReportsRank) {
  std::vector<double> a(10 * 4, 0.0), b(10, 1.0);
  for (std::size_t i = 0; i < 10; ++i) {
    a[i] = 1.0;
    a[10 + i] = static_cast<double>(i);
    a[20 + i] = 2.0;  // parallel to column 0
  }
  const auto r = minnorm_lsq_inplace(a, b);
  EXPECT_EQ(r.rank, 2);
}
