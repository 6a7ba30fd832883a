#pragma once

// Minimum-norm least squares for tall n x 4 systems.
//
// A = QR by Householder reflections, then y = pinv(R) Q^T b with the
// pseudoinverse of the 4 x 4 factor taken from its SVD.  A and R share their
// singular values, so the rank cut max(n, 4) * eps * sigma_max is applied to
// the exact spectrum of A.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "srom/errors.hpp"

namespace srom {

inline constexpr int kBasisSize = 4;
using Coeffs = std::array<double, kBasisSize>;

/// Scratch space reused across solves so the online loop never allocates.
class LsqWorkspace {
 public:
  void reserve(std::size_t rows) {
    if (a_.size() < rows * kBasisSize) a_.resize(rows * kBasisSize);
    if (b_.size() < rows) b_.resize(rows);
  }
  std::span<double> a(std::size_t rows) { return {a_.data(), rows * kBasisSize}; }
  std::span<double> b(std::size_t rows) { return {b_.data(), rows}; }

 private:
  std::vector<double> a_, b_;
};

struct LsqResult {
  Coeffs alpha{};
  int rank = 0;
  double sigma_max = 0.0;
};

/// Min-norm minimizer of ||A y - b|| with A given column-major (n rows,
/// 4 columns).  A and b are overwritten.
inline LsqResult minnorm_lsq_inplace(std::span<double> a, std::span<double> b) {
  const std::size_t n = b.size();
  if (n == 0) throw ConfigError("minnorm_lsq: system has no rows");
  if (a.size() != n * kBasisSize) throw ConfigError("minnorm_lsq: matrix size does not match right-hand side");
  auto col = [&](int c) { return a.data() + static_cast<std::size_t>(c) * n; };

  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
  Eigen::Vector4d qtb = Eigen::Vector4d::Zero();
  const int steps = static_cast<int>(std::min<std::size_t>(n, kBasisSize));
  for (int k = 0; k < steps; ++k) {
    double* v = col(k);
    double norm2 = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) norm2 += v[i] * v[i];
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;
    const double alpha = v[k] > 0.0 ? -norm : norm;
    // v <- x - alpha e_k, H = I - 2 v v^T / (v^T v)
    const double vk = v[k] - alpha;
    const double vtv = norm2 - v[k] * v[k] + vk * vk;
    v[k] = vk;
    if (vtv == 0.0) {
      v[k] = alpha;
      continue;
    }
    for (int c = k + 1; c < kBasisSize; ++c) {
      double* w = col(c);
      double dot = 0.0;
      for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) dot += v[i] * w[i];
      const double s = 2.0 * dot / vtv;
      for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) w[i] -= s * v[i];
    }
    double dot = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) dot += v[i] * b[i];
    const double s = 2.0 * dot / vtv;
    for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) b[i] -= s * v[i];
    v[k] = alpha;
  }
  // R is the upper triangle (rows < steps); for n < 4 the remaining rows are
  // zero, which leaves the pseudoinverse unchanged.
  for (int i = 0; i < steps; ++i) {
    for (int c = i; c < kBasisSize; ++c) r(i, c) = col(c)[i];
    qtb(i) = b[static_cast<std::size_t>(i)];
  }

  LsqResult out;
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  out.sigma_max = s(0);
  if (!(out.sigma_max > 0.0)) return out;
  const double tol = static_cast<double>(std::max<std::size_t>(n, kBasisSize)) * std::numeric_limits<double>::epsilon() * s(0);
  const Eigen::Vector4d utb = svd.matrixU().transpose() * qtb;
  Eigen::Vector4d y = Eigen::Vector4d::Zero();
  for (int i = 0; i < kBasisSize; ++i) {
    if (s(i) > tol) {
      y += (utb(i) / s(i)) * svd.matrixV().col(i);
      ++out.rank;
    }
  }
  for (int i = 0; i < kBasisSize; ++i) out.alpha[static_cast<std::size_t>(i)] = y(i);
  return out;
}

/// Non-destructive convenience wrapper.
inline Coeffs minnorm_lsq(std::span<const double> a, std::span<const double> b) {
  std::vector<double> ac(a.begin(), a.end()), bc(b.begin(), b.end());
  return minnorm_lsq_inplace(ac, bc).alpha;
}

}  // namespace srom
