#pragma once

// First-order finite-volume full-order model: flux models, the local
// Lax-Friedrichs numerical flux, the CFL time step and explicit Euler.
// Ghost cells outside the domain hold zero.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "srom/errors.hpp"
#include "srom/grid.hpp"

namespace srom {

/// A flux with its parameter already fixed.
template <class F>
concept BoundFlux = requires(const F& f, double u, int axis) {
  { f.flux(u, axis) } -> std::convertible_to<double>;
  { f.speed(u, axis) } -> std::convertible_to<double>;
};

/// f(u, mu) = a(mu) u.
struct LinearAdvection {
  std::function<Point(double)> velocity;
  std::string label = "linear-advection";

  struct Bound {
    Point a;
    double flux(double u, int axis) const { return a[static_cast<std::size_t>(axis)] * u; }
    double speed(double, int axis) const { return std::abs(a[static_cast<std::size_t>(axis)]); }
  };
  Bound bind(double mu) const { return {velocity(mu)}; }
  Point derivative_bound(double mu) const {
    const Point a = velocity(mu);
    return {std::abs(a[0]), std::abs(a[1])};
  }
};

/// f(u, mu) = mu * d * u^2 / 2 along a fixed direction d.  `u_max` bounds
/// |u| over the solution range and enters the derivative bound only.
struct Burgers {
  Point direction{1.0, 0.0};
  double u_max = 1.0;
  std::string label = "burgers";

  struct Bound {
    Point d;
    double flux(double u, int axis) const { return 0.5 * d[static_cast<std::size_t>(axis)] * u * u; }
    double speed(double u, int axis) const { return std::abs(d[static_cast<std::size_t>(axis)] * u); }
  };
  Bound bind(double mu) const { return {{mu * direction[0], mu * direction[1]}}; }
  Point derivative_bound(double mu) const {
    return {std::abs(mu * direction[0]) * u_max, std::abs(mu * direction[1]) * u_max};
  }
};

/// Type-erased flux model.  Kernels visit the bound flux once per call so
/// the per-face evaluations are inlined.
class FluxModel {
 public:
  using Impl = std::variant<LinearAdvection, Burgers>;

  FluxModel() : impl_(LinearAdvection{[](double) { return Point{1.0, 0.0}; }}) {}
  FluxModel(LinearAdvection f) : impl_(std::move(f)) {}  // NOLINT
  FluxModel(Burgers f) : impl_(std::move(f)) {}          // NOLINT

  std::string label() const {
    return std::visit([](const auto& f) { return f.label; }, impl_);
  }
  /// sup over u of |df/du| per axis at parameter mu.
  Point derivative_bound(double mu) const {
    return std::visit([&](const auto& f) { return f.derivative_bound(mu); }, impl_);
  }
  double flux(double u, double mu, int axis) const {
    return std::visit([&](const auto& f) { return f.bind(mu).flux(u, axis); }, impl_);
  }
  /// Calls fn(bound) with the concrete bound flux at mu.
  template <class Fn>
  decltype(auto) visit_bound(double mu, Fn&& fn) const {
    return std::visit([&](const auto& f) -> decltype(auto) { return fn(f.bind(mu)); }, impl_);
  }
  /// True when the flux is translation invariant (shifting commutes with F).
  bool is_linear() const { return std::holds_alternative<LinearAdvection>(impl_); }

 private:
  Impl impl_;
};

/// Local Lax-Friedrichs flux across a face with left state a, right state b.
template <BoundFlux F>
inline double llf_flux(const F& f, double a, double b, int axis) {
  const double lambda = std::max(f.speed(a, axis), f.speed(b, axis));
  return 0.5 * (f.flux(a, axis) + f.flux(b, axis)) - 0.5 * lambda * (b - a);
}

/// F_i = -(1/dx) * sum over faces of the outward LLF flux, for i in ids.
/// `get(j)` must return the value of cell j for every j in halo(ids).
template <BoundFlux F, class Get>
void apply_F(const CartesianGrid& g, const F& f, Get&& get, std::span<const CellId> ids, std::span<double> out) {
  const double inv_dx = 1.0 / g.dx();
  const CellId nx = g.nx();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const CellId id = ids[k];
    const double ui = get(id);
    double acc = 0.0;
    if (g.dim() == 1) {
      const double ul = id > 0 ? get(id - 1) : 0.0;
      const double ur = id + 1 < nx ? get(id + 1) : 0.0;
      acc = llf_flux(f, ui, ur, 0) - llf_flux(f, ul, ui, 0);
    } else {
      const CellId ix = id % nx;
      const CellId iy = id / nx;
      const double ul = ix > 0 ? get(id - 1) : 0.0;
      const double ur = ix + 1 < nx ? get(id + 1) : 0.0;
      const double ud = iy > 0 ? get(id - nx) : 0.0;
      const double uu = iy + 1 < nx ? get(id + nx) : 0.0;
      acc = (llf_flux(f, ui, ur, 0) - llf_flux(f, ul, ui, 0)) + (llf_flux(f, ui, uu, 1) - llf_flux(f, ud, ui, 1));
    }
    out[k] = -inv_dx * acc;
  }
}

/// Convenience overload over a whole field and a flux model.
inline std::vector<double> apply_F(const Field& u, const FluxModel& flux, double mu, std::span<const CellId> ids) {
  std::vector<double> out(ids.size());
  const auto values = u.values();
  flux.visit_bound(mu, [&](const auto& f) {
    apply_F(u.grid(), f, [&](CellId j) { return values[static_cast<std::size_t>(j)]; }, ids, out);
  });
  return out;
}

/// Values on a subset of cells with O(1) lookup; reading a cell that was not
/// set since the last `clear()` is a contract violation.
class LocalValues {
 public:
  LocalValues() = default;
  explicit LocalValues(CellId n) : marks_(n), values_(static_cast<std::size_t>(n), 0.0) {}

  void clear() { marks_.next_generation(); }
  void set(CellId i, double v) {
    marks_.mark(i);
    values_[static_cast<std::size_t>(i)] = v;
  }
  double get(CellId i) const {
    if (!marks_.marked(i)) throw ContractViolation("value of cell " + std::to_string(i) + " is not available");
    return values_[static_cast<std::size_t>(i)];
  }

 private:
  CellMarks marks_;
  std::vector<double> values_;
};

inline std::vector<CellId> all_cells(const CartesianGrid& g) {
  std::vector<CellId> ids(static_cast<std::size_t>(g.size()));
  for (CellId i = 0; i < g.size(); ++i) ids[static_cast<std::size_t>(i)] = i;
  return ids;
}

/// u + dt * F(u) on every cell.
inline Field fom_step(const Field& u, const FluxModel& flux, double mu, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const auto& g = u.grid();
  Field next(g);
  const auto in = u.values();
  auto out = next.values();
  std::vector<CellId> ids = all_cells(g);
  flux.visit_bound(mu, [&](const auto& f) {
    apply_F(g, f, [&](CellId j) { return in[static_cast<std::size_t>(j)]; }, ids, out);
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] + dt * out[i];
  return next;
}

/// Largest stable step: fraction * dx / (2 sup_mu |f'|), with |f'| the
/// Euclidean norm of the per-axis derivative bound.  The supremum over the
/// parameter range is taken on 1025 uniformly spaced samples.
inline double cfl_dt(const CartesianGrid& g, const FluxModel& flux, double mu_lo, double mu_hi, double fraction = 1.0) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("CFL fraction must lie in (0, 1]");
  constexpr int kSamples = 1025;
  double sup = 0.0;
  for (int s = 0; s < kSamples; ++s) {
    const double mu = mu_lo + (mu_hi - mu_lo) * s / (kSamples - 1);
    const Point b = flux.derivative_bound(mu);
    sup = std::max(sup, std::hypot(b[0], g.dim() == 2 ? b[1] : 0.0));
  }
  if (!(sup > 0.0)) throw DegenerateFlux("flux derivative bound is zero; no CFL time step exists");
  return fraction * g.dx() / (2.0 * sup);
}

/// Explicit step size or a CFL fraction.
struct TimeStepPolicy {
  std::optional<double> dt;
  double cfl_fraction = 1.0;
};

/// Times 0 = t_0 < ... < t_K = T for a constant step; the last step is
/// shortened when dt does not divide T.
inline std::vector<double> time_grid(double t_end, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (t_end < 0.0) throw ConfigError("final time must be non-negative");
  std::vector<double> t{0.0};
  if (t_end == 0.0) return t;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  for (std::size_t k = 1; k < steps; ++k) t.push_back(static_cast<double>(k) * dt);
  t.push_back(t_end);
  return t;
}

struct FomConfig {
  CartesianGrid grid;
  FluxModel flux;
  std::function<double(const Point&, double)> initial;
  double t_end = 0.0;
  TimeStepPolicy time_step;
  double mu_lo = 0.0;  ///< parameter range used by the CFL bound
  double mu_hi = 0.0;

  double resolved_dt() const {
    if (time_step.dt) return *time_step.dt;
    return cfl_dt(grid, flux, mu_lo, mu_hi, time_step.cfl_fraction);
  }
};

struct Trajectory {
  double mu = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  double cfl_fraction = 1.0;
  bool dt_override = false;
  std::vector<double> times;
  std::vector<Field> fields;
};

inline Field initial_field(const FomConfig& cfg, double mu) {
  return project_midpoint(cfg.grid, [&](const Point& x) { return cfg.initial(x, mu); });
}

/// Index of the step time within dt/2 of t.
inline std::size_t step_index_of(const std::vector<double>& times, double t, double dt) {
  auto it = std::lower_bound(times.begin(), times.end(), t - 0.5 * dt);
  if (it == times.end() || std::abs(*it - t) > 0.5 * dt) {
    throw ConfigError("record time " + std::to_string(t) + " is not a computed step time");
  }
  return static_cast<std::size_t>(it - times.begin());
}

/// Runs explicit Euler from the midpoint projection of the initial data and
/// records the fields at `record_times`.
inline Trajectory run_fom(const FomConfig& cfg, double mu, const std::vector<double>& record_times) {
  Trajectory tr;
  tr.mu = mu;
  tr.dt = cfg.resolved_dt();
  tr.dt_override = cfg.time_step.dt.has_value();
  tr.cfl_fraction = cfg.time_step.cfl_fraction;
  const auto times = time_grid(cfg.t_end, tr.dt);
  tr.steps = times.size() - 1;

  std::vector<std::size_t> wanted;
  for (double t : record_times) wanted.push_back(step_index_of(times, t, tr.dt));
  std::vector<std::size_t> order(wanted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return wanted[a] < wanted[b]; });

  tr.times.resize(wanted.size());
  tr.fields.resize(wanted.size());
  Field u = initial_field(cfg, mu);
  std::size_t next = 0;
  for (std::size_t k = 0;; ++k) {
    while (next < order.size() && wanted[order[next]] == k) {
      tr.times[order[next]] = times[k];
      tr.fields[order[next]] = u;
      ++next;
    }
    if (k == tr.steps || next == order.size()) break;
    u = fom_step(u, cfg.flux, mu, times[k + 1] - times[k]);
  }
  return tr;
}

/// Every step of a run, for reference solutions.
inline std::vector<Field> run_fom_all(const FomConfig& cfg, double mu, double dt) {
  const auto times = time_grid(cfg.t_end, dt);
  std::vector<Field> out;
  out.reserve(times.size());
  out.push_back(initial_field(cfg, mu));
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    out.push_back(fom_step(out.back(), cfg.flux, mu, times[k + 1] - times[k]));
  }
  return out;
}

/// Writes `step_XXXXXX.trom` files and a key = value manifest into dir.
inline void write_trajectory(const std::filesystem::path& dir, const Trajectory& tr) {
  std::filesystem::create_directories(dir);
  std::ofstream m(dir / "manifest.txt");
  if (!m) throw IoError("cannot write manifest in " + dir.string());
  m << std::setprecision(17);
  m << "mu = " << tr.mu << "\n"
    << "dt = " << tr.dt << "\n"
    << "steps = " << tr.steps << "\n"
    << "cfl_fraction = " << tr.cfl_fraction << "\n"
    << "dt_override = " << (tr.dt_override ? 1 : 0) << "\n"
    << "count = " << tr.fields.size() << "\n";
  for (std::size_t i = 0; i < tr.fields.size(); ++i) {
    std::ostringstream name;
    name << "step_" << std::setw(6) << std::setfill('0') << i << ".trom";
    write_field((dir / name.str()).string(), tr.fields[i]);
    m << "time_" << i << " = " << tr.times[i] << "\n"
      << "file_" << i << " = " << name.str() << "\n";
  }
}

}  // namespace srom
