#pragma once

// Uniform tensor sampling of the (time, parameter) domain and lookup of the
// parameter element whose four vertices form the local snapshot basis.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "srom/errors.hpp"

namespace srom {

/// A point z = (t, mu) of the parameter domain.
struct ParamPoint {
  double t = 0.0;
  double mu = 0.0;
  bool operator==(const ParamPoint&) const = default;
};

/// One cell of the sample mesh.  Vertices run counter-clockwise:
/// (t1,mu1), (t2,mu1), (t2,mu2), (t1,mu2).
struct ParamElement {
  int it = 0;
  int imu = 0;
  std::array<int, 4> vertex{};  ///< sample indices
  std::array<ParamPoint, 4> z{};
};

inline std::vector<double> uniform_points(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

/// m points strictly inside (lo, hi), evenly spaced.
inline std::vector<double> interior_points(double lo, double hi, int m) {
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) v[static_cast<std::size_t>(j)] = lo + (hi - lo) * (j + 1) / (m + 1);
  return v;
}

class ParamGrid {
 public:
  ParamGrid() = default;

  std::size_t size() const { return static_cast<std::size_t>(n_t_) * static_cast<std::size_t>(n_mu_); }
  int n_t() const { return n_t_; }
  int n_mu() const { return n_mu_; }
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }
  double mu_lo() const { return mu_lo_; }
  double mu_hi() const { return mu_hi_; }
  const std::vector<double>& t_nodes() const { return t_nodes_; }
  const std::vector<double>& mu_nodes() const { return mu_nodes_; }

  /// Samples are ordered time-fastest: index = it + n_t * imu.
  int index(int it, int imu) const { return it + n_t_ * imu; }
  ParamPoint sample(int j) const {
    return {t_nodes_[static_cast<std::size_t>(j % n_t_)], mu_nodes_[static_cast<std::size_t>(j / n_t_)]};
  }
  std::vector<ParamPoint> samples() const {
    std::vector<ParamPoint> s;
    s.reserve(size());
    for (std::size_t j = 0; j < size(); ++j) s.push_back(sample(static_cast<int>(j)));
    return s;
  }

  bool contains(const ParamPoint& z) const {
    const double et = 1e-12 * std::max(1.0, t_hi_ - t_lo_);
    const double em = 1e-12 * std::max(1.0, std::abs(mu_hi_ - mu_lo_));
    return z.t >= t_lo_ - et && z.t <= t_hi_ + et && z.mu >= mu_lo_ - em && z.mu <= mu_hi_ + em;
  }

  /// Element whose half-open box [t1,t2) x [mu1,mu2) contains z; points on
  /// the far boundary go to the last element.  A point within 1e-9 of a
  /// sample line counts as lying on it.
  ParamElement containing_element(const ParamPoint& z) const {
    if (!contains(z)) {
      throw DomainError("parameter (" + std::to_string(z.t) + ", " + std::to_string(z.mu) + ") is outside the sampled domain");
    }
    const int it = cell_of(z.t, t_lo_, t_hi_, n_t_);
    const int imu = cell_of(z.mu, mu_lo_, mu_hi_, n_mu_);
    ParamElement e;
    e.it = it;
    e.imu = imu;
    e.vertex = {index(it, imu), index(it + 1, imu), index(it + 1, imu + 1), index(it, imu + 1)};
    for (int v = 0; v < 4; ++v) e.z[static_cast<std::size_t>(v)] = sample(e.vertex[static_cast<std::size_t>(v)]);
    return e;
  }

  /// Sample closest to the centre of the domain in normalized coordinates;
  /// ties go to the lowest index.
  int centroid_sample() const {
    const double tc = 0.5 * (t_lo_ + t_hi_);
    const double mc = 0.5 * (mu_lo_ + mu_hi_);
    const double st = t_hi_ > t_lo_ ? t_hi_ - t_lo_ : 1.0;
    const double sm = mu_hi_ != mu_lo_ ? std::abs(mu_hi_ - mu_lo_) : 1.0;
    int best = 0;
    double best_d = INFINITY;
    for (std::size_t j = 0; j < size(); ++j) {
      const auto z = sample(static_cast<int>(j));
      const double d = std::hypot((z.t - tc) / st, (z.mu - mc) / sm);
      if (d < best_d - 1e-12) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    return best;
  }

  friend ParamGrid build_param_grid(double, double, double, double, int, int);

 private:
  static int cell_of(double x, double lo, double hi, int n) {
    const double h = (hi - lo) / (n - 1);
    const auto i = static_cast<int>(std::floor((x - lo) / h + 1e-9));
    return std::clamp(i, 0, n - 2);
  }

  double t_lo_ = 0.0, t_hi_ = 1.0, mu_lo_ = 0.0, mu_hi_ = 1.0;
  int n_t_ = 2, n_mu_ = 2;
  std::vector<double> t_nodes_, mu_nodes_;
};

/// Tensor grid of n_t x n_mu samples with the domain vertices included.
inline ParamGrid build_param_grid(double t_lo, double t_hi, double mu_lo, double mu_hi, int n_t, int n_mu) {
  if (n_t < 2 || n_mu < 2) throw ConfigError("parameter grid needs at least 2 samples per axis");
  if (!(t_hi > t_lo) || !(mu_hi > mu_lo)) throw ConfigError("parameter ranges must be non-degenerate");
  ParamGrid g;
  g.t_lo_ = t_lo;
  g.t_hi_ = t_hi;
  g.mu_lo_ = mu_lo;
  g.mu_hi_ = mu_hi;
  g.n_t_ = n_t;
  g.n_mu_ = n_mu;
  g.t_nodes_ = uniform_points(t_lo, t_hi, n_t);
  g.mu_nodes_ = uniform_points(mu_lo, mu_hi, n_mu);
  return g;
}

}  // namespace srom
