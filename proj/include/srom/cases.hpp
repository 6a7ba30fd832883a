#pragma once

// The three benchmark problems, their scaled-down variants and a custom
// linear-advection case.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "srom/errors.hpp"
#include "srom/fv.hpp"
#include "srom/grid.hpp"
#include "srom/shifts.hpp"

namespace srom {

struct TestCase {
  std::string label;
  /// Static cases are fitted directly to a projected exact solution; there
  /// is no time stepping and b(z) = U(z).
  bool is_static = false;

  int dim = 1;
  Point origin{0.0, 0.0};
  double extent = 1.0;
  int nx = 100;

  FluxModel flux;
  std::function<double(const Point&, double)> initial;
  /// Static cases: cell averages of the exact solution at (t, mu).
  std::function<Field(const CartesianGrid&, double, double)> project;

  double t_end = 0.0;
  double mu_lo = 0.0, mu_hi = 1.0;
  TimeStepPolicy time_step;

  int n_t = 2, n_mu = 2;
  int m_hyp = 5;
  double n_fraction = 0.005;  ///< default reduced mesh size as a fraction of N
  int targets_mu = 40;
  int targets_t = 0;  ///< static cases only; time-dependent cases use every step
  int training_t = 0;  ///< static cases: time samples per training mu

  CalibrationOptions calibration;
  ShiftMode shift_mode = ShiftMode::ReferenceComposed;
  ShiftInterpolation interpolation = ShiftInterpolation::GlobalLagrange;
  std::optional<int> z_ref;

  CartesianGrid grid() const { return CartesianGrid(dim, origin, extent, nx); }
  FomConfig fom() const { return FomConfig{grid(), flux, initial, t_end, time_step, mu_lo, mu_hi}; }
  double dt() const { return fom().resolved_dt(); }
  std::size_t mesh_size(double fraction) const {
    const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(grid().size())));
    return std::max<std::size_t>(n, 1);
  }
};

/// u_t + mu u_x = 0 on [0, 3], mu in [1, 3], t in [0, 0.5]; u_0 = mu on [0.5, 1].
inline TestCase test1_case(int nx = 1000) {
  TestCase c;
  c.label = "test1";
  c.dim = 1;
  c.origin = {0.0, 0.0};
  c.extent = 3.0;
  c.nx = nx;
  c.flux = LinearAdvection{[](double mu) { return Point{mu, 0.0}; }, "advection-1d"};
  c.initial = [](const Point& x, double mu) { return x[0] >= 0.5 && x[0] <= 1.0 ? mu : 0.0; };
  c.t_end = 0.5;
  c.mu_lo = 1.0;
  c.mu_hi = 3.0;
  c.n_t = c.n_mu = 2;
  c.m_hyp = 5;
  c.n_fraction = 0.005;
  c.targets_mu = 40;
  return c;
}

namespace detail {

/// Fraction of the cell [a, a + h] covered by [lo, hi] under 5-point
/// Gauss-Legendre quadrature.
inline double gl5_indicator(double a, double h, double lo, double hi) {
  static constexpr std::array<double, 5> x{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                           0.9061798459386640};
  static constexpr std::array<double, 5> w{0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                           0.2369268850561891};
  double s = 0.0;
  for (std::size_t q = 0; q < 5; ++q) {
    const double p = a + 0.5 * h * (1.0 + x[q]);
    if (p >= lo && p <= hi) s += 0.5 * w[q];
  }
  return s;
}

}  // namespace detail

/// Cell averages of exp(-mu t) on |x1 - (mu + t)| <= 0.3, |x2 - t| <= 0.3,
/// by tensor 5 x 5 Gauss-Legendre quadrature.  The integrand is separable,
/// so the 2D rule factors into two 1D sums.
inline Field project_moving_box(const CartesianGrid& g, double t, double mu) {
  Field f(g);
  const double amp = std::exp(-mu * t);
  const double h = g.dx();
  std::vector<double> px(static_cast<std::size_t>(g.nx())), py(static_cast<std::size_t>(g.nx()));
  for (int i = 0; i < g.nx(); ++i) {
    const double a0 = g.origin()[0] + i * h;
    const double a1 = g.origin()[1] + i * h;
    px[static_cast<std::size_t>(i)] = detail::gl5_indicator(a0, h, mu + t - 0.3, mu + t + 0.3);
    py[static_cast<std::size_t>(i)] = detail::gl5_indicator(a1, h, t - 0.3, t + 0.3);
  }
  for (int j = 0; j < g.nx(); ++j) {
    const double yj = py[static_cast<std::size_t>(j)];
    if (yj == 0.0) continue;
    for (int i = 0; i < g.nx(); ++i) f[g.flat(i, j)] = amp * px[static_cast<std::size_t>(i)] * yj;
  }
  return f;
}

/// Moving, decaying box on [-0.5, 2.5]^2 with (t, mu) in [0, 1]^2.
inline TestCase test2_case(int nx = 600) {
  TestCase c;
  c.label = "test2";
  c.is_static = true;
  c.dim = 2;
  c.origin = {-0.5, -0.5};
  c.extent = 3.0;
  c.nx = nx;
  c.project = project_moving_box;
  c.t_end = 1.0;
  c.mu_lo = 0.0;
  c.mu_hi = 1.0;
  c.n_t = c.n_mu = 3;
  c.m_hyp = 4;
  c.n_fraction = 0.01;
  c.targets_mu = 100;
  c.targets_t = 100;
  c.training_t = 100;
  return c;
}

/// u_t + cos(mu) u_x1 + sin(mu) u_x2 = 0 on [-1, 1]^2, mu in [0, 2 pi],
/// t in [0, 0.5]; u_0 the indicator of the disc of radius 0.2.
inline TestCase test3_case(int nx = 800) {
  TestCase c;
  c.label = "test3";
  c.dim = 2;
  c.origin = {-1.0, -1.0};
  c.extent = 2.0;
  c.nx = nx;
  c.flux = LinearAdvection{[](double mu) { return Point{std::cos(mu), std::sin(mu)}; }, "transport-2d"};
  c.initial = [](const Point& x, double) { return std::hypot(x[0], x[1]) <= 0.2 ? 1.0 : 0.0; };
  c.t_end = 0.5;
  c.mu_lo = 0.0;
  c.mu_hi = 2.0 * std::numbers::pi;
  c.n_t = c.n_mu = 6;
  c.m_hyp = 5;
  c.n_fraction = 0.02;
  c.targets_mu = 50;
  return c;
}

struct CustomCaseSpec {
  int dim = 1;
  Point origin{0.0, 0.0};
  double extent = 1.0;
  int nx = 200;
  Point velocity{1.0, 0.0};  ///< a(mu) = mu * velocity
  Point centre{0.25, 0.0};
  double radius = 0.1;  ///< half width (1D) or disc radius (2D) of the initial bump
  double t_end = 0.25;
  double mu_lo = 0.5, mu_hi = 1.0;
};

/// Linear advection with speed mu * velocity of an indicator bump.
inline TestCase custom_case(const CustomCaseSpec& s) {
  TestCase c;
  c.label = "custom";
  c.dim = s.dim;
  c.origin = s.origin;
  c.extent = s.extent;
  c.nx = s.nx;
  const Point v = s.velocity;
  c.flux = LinearAdvection{[v](double mu) { return Point{mu * v[0], mu * v[1]}; }, "advection"};
  const int dim = s.dim;
  const Point centre = s.centre;
  const double radius = s.radius;
  c.initial = [dim, centre, radius](const Point& x, double) {
    const double d = dim == 1 ? std::abs(x[0] - centre[0]) : std::hypot(x[0] - centre[0], x[1] - centre[1]);
    return d <= radius ? 1.0 : 0.0;
  };
  c.t_end = s.t_end;
  c.mu_lo = s.mu_lo;
  c.mu_hi = s.mu_hi;
  c.n_t = c.n_mu = 2;
  c.m_hyp = 3;
  c.n_fraction = 0.05;
  c.targets_mu = 5;
  return c;
}

/// Named presets: test1, test2, test3 and their "-small" variants.
inline TestCase make_case(const std::string& name) {
  if (name == "test1") return test1_case(1000);
  if (name == "test1-small") {
    auto c = test1_case(200);
    c.label = name;
    return c;
  }
  if (name == "test2") return test2_case(600);
  if (name == "test2-small") {
    auto c = test2_case(150);
    c.label = name;
    return c;
  }
  if (name == "test3") return test3_case(800);
  if (name == "test3-small") {
    auto c = test3_case(200);
    c.label = name;
    return c;
  }
  if (name == "custom") return custom_case({});
  throw ConfigError("unknown test case '" + name + "'");
}

}  // namespace srom
