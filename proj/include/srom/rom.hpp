#pragma once

// Shifted-snapshot reduced-order model: basis assembly, the explicit Euler
// right-hand side b, residual minimization and the online time loop.

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srom/errors.hpp"
#include "srom/fv.hpp"
#include "srom/grid.hpp"
#include "srom/linalg.hpp"
#include "srom/reduced_mesh.hpp"
#include "srom/sampling.hpp"
#include "srom/shifts.hpp"

namespace srom {

/// Snapshots U(z_j) indexed by sample number, with cached support boxes.
class SnapshotStore {
 public:
  SnapshotStore() = default;
  explicit SnapshotStore(std::size_t samples) : fields_(samples), boxes_(samples) {}

  std::size_t size() const { return fields_.size(); }
  void put(std::size_t j, Field f) {
    if (j >= fields_.size()) throw StoreError("snapshot index " + std::to_string(j) + " out of range");
    boxes_[j] = support_box(f);
    fields_[j] = std::move(f);
  }
  bool has(std::size_t j) const { return j < fields_.size() && fields_[j].has_value(); }
  const Field& get(std::size_t j) const {
    if (!has(j)) throw StoreError("no snapshot stored for sample " + std::to_string(j));
    return *fields_[j];
  }
  const CellBox& support(std::size_t j) const {
    get(j);
    return boxes_[j];
  }
  std::vector<Field> fields() const {
    std::vector<Field> out;
    for (std::size_t j = 0; j < size(); ++j) out.push_back(get(j));
    return out;
  }

 private:
  std::vector<std::optional<Field>> fields_;
  std::vector<CellBox> boxes_;
};

enum class BasisMode { Shifted, Plain };

/// A(z): four columns T[c_i] U(zRef_i), evaluated lazily row by row.
class RomBasis {
 public:
  RomBasis() = default;
  RomBasis(const CartesianGrid& g, const ParamElement& e, std::array<const Field*, 4> cols, std::array<GridShift, 4> shifts)
      : grid_(g), element_(e), cols_(cols), shifts_(shifts) {
    for (int c = 0; c < kBasisSize; ++c) data_[static_cast<std::size_t>(c)] = cols[static_cast<std::size_t>(c)]->values().data();
  }

  const CartesianGrid& grid() const { return grid_; }
  const ParamElement& element() const { return element_; }
  const GridShift& shift(int c) const { return shifts_[static_cast<std::size_t>(c)]; }
  const Field& snapshot(int c) const { return *cols_[static_cast<std::size_t>(c)]; }

  /// A(id, c) = U(zRef_c) at the cell id - shift_c, or 0 outside the domain.
  double value(int c, CellId id) const {
    const CellId nx = grid_.nx();
    const auto& s = shifts_[static_cast<std::size_t>(c)].cells;
    if (grid_.dim() == 1) {
      const CellId src = id - s[0];
      return src >= 0 && src < nx ? data_[static_cast<std::size_t>(c)][src] : 0.0;
    }
    const CellId sx = id % nx - s[0];
    const CellId sy = id / nx - s[1];
    return sx >= 0 && sx < nx && sy >= 0 && sy < nx ? data_[static_cast<std::size_t>(c)][sx + nx * sy] : 0.0;
  }

  /// sum_c alpha_c A(id, c)
  double reconstruct(const Coeffs& alpha, CellId id) const {
    double v = 0.0;
    for (int c = 0; c < kBasisSize; ++c) v += alpha[static_cast<std::size_t>(c)] * value(c, id);
    return v;
  }

  Field reconstruct(const Coeffs& alpha) const {
    Field f(grid_);
    for (CellId i = 0; i < grid_.size(); ++i) f[i] = reconstruct(alpha, i);
    return f;
  }

 private:
  CartesianGrid grid_;
  ParamElement element_;
  std::array<const Field*, 4> cols_{};
  std::array<const double*, 4> data_{};
  std::array<GridShift, 4> shifts_{};
};

/// Assembles A(z) for the element containing z.  `interp` must already have
/// its target set to z when mode is Shifted.
inline RomBasis assemble_basis(const ParamElement& e, const ShiftTable& table, const ShiftInterpolator& interp,
                               const SnapshotStore& store, BasisMode mode) {
  std::array<const Field*, 4> cols{};
  std::array<GridShift, 4> shifts{};
  for (int v = 0; v < 4; ++v) {
    const auto j = static_cast<std::size_t>(e.vertex[static_cast<std::size_t>(v)]);
    cols[static_cast<std::size_t>(v)] = &store.get(j);
    if (mode == BasisMode::Shifted) shifts[static_cast<std::size_t>(v)] = snap_shift(interp.shift_to(table, j), cols[0]->grid());
  }
  return RomBasis(cols[0]->grid(), e, cols, shifts);
}

inline RomBasis assemble_basis(const ParamGrid& pgrid, const ParamPoint& z, const ShiftTable& table,
                               ShiftInterpolation kind, const SnapshotStore& store, BasisMode mode) {
  ShiftInterpolator ip(pgrid, kind);
  ip.set_target(z);
  return assemble_basis(pgrid.containing_element(z), table, ip, store, mode);
}

/// Rows ids of A, column-major into out (|ids| x 4).
inline void fill_A(const RomBasis& basis, std::span<const CellId> ids, std::span<double> out) {
  const std::size_t n = ids.size();
  for (int c = 0; c < kBasisSize; ++c) {
    double* col = out.data() + static_cast<std::size_t>(c) * n;
    for (std::size_t k = 0; k < n; ++k) col[k] = basis.value(c, ids[k]);
  }
}

/// Reusable buffers for evaluating b on a subset of cells in O(|ids|).
class RhsWorkspace {
 public:
  explicit RhsWorkspace(const CartesianGrid& g) : halo_(g), local_(g.size()) {}

  /// b_i = U_m,i + dt F_i(U_m) for i in ids, with U_m = A(prev) alpha(prev)
  /// reconstructed on halo(ids) only.
  void compute_b(const RomBasis& basis, const Coeffs& alpha, const FluxModel& flux, double mu, double dt,
                 std::span<const CellId> ids, std::span<double> out) {
    const auto cells = halo_.build(ids);
    local_.clear();
    for (CellId j : cells) local_.set(j, basis.reconstruct(alpha, j));
    const auto& g = basis.grid();
    flux.visit_bound(mu, [&](const auto& f) { apply_F(g, f, [&](CellId j) { return local_.get(j); }, ids, out); });
    for (std::size_t k = 0; k < ids.size(); ++k) out[k] = local_.get(ids[k]) + dt * out[k];
  }

 private:
  HaloBuilder halo_;
  LocalValues local_;
};

inline std::vector<double> compute_b(const RomBasis& basis, const Coeffs& alpha, const FluxModel& flux, double mu, double dt,
                                     std::span<const CellId> ids) {
  RhsWorkspace ws(basis.grid());
  std::vector<double> out(ids.size());
  ws.compute_b(basis, alpha, flux, mu, dt, ids, out);
  return out;
}

/// Least-squares fit of a full field: argmin ||A y - u0|| over all cells.
inline Coeffs init_coeffs(const RomBasis& basis, const Field& u0) {
  const auto ids = all_cells(basis.grid());
  std::vector<double> a(ids.size() * kBasisSize);
  fill_A(basis, ids, a);
  std::vector<double> b(u0.values().begin(), u0.values().end());
  return minnorm_lsq_inplace(a, b).alpha;
}

/// One residual-minimizing step: A from the new basis, b from the previous.
inline Coeffs rom_step(const RomBasis& prev, const Coeffs& alpha, const RomBasis& next, std::span<const CellId> ids,
                       const FluxModel& flux, double mu, double dt) {
  if (ids.empty()) throw HyperReductionFailure("reduced mesh is empty");
  auto b = compute_b(prev, alpha, flux, mu, dt, ids);
  std::vector<double> a(ids.size() * kBasisSize);
  fill_A(next, ids, a);
  return minnorm_lsq_inplace(a, b).alpha;
}

/// Cells of the union of the column supports and the support of `extra`.
/// Rows outside it are zero in both A and b, so fits restricted to it are
/// exact full-mesh fits.
inline CellBox active_box(const RomBasis& basis, const SnapshotStore& store, const CellBox& extra) {
  CellBox box = extra;
  for (int c = 0; c < kBasisSize; ++c) {
    const auto j = static_cast<std::size_t>(basis.element().vertex[static_cast<std::size_t>(c)]);
    box = box.united(store.support(j).shifted(basis.shift(c)).clipped(basis.grid()));
  }
  return box;
}

inline std::vector<CellId> box_cells(const CartesianGrid& g, const CellBox& box) {
  std::vector<CellId> ids;
  ids.reserve(static_cast<std::size_t>(box.count()));
  box.for_each(g, [&](CellId id, CellId, CellId) { ids.push_back(id); });
  return ids;
}

struct StaticFit {
  Coeffs alpha{};
  bool empty_mesh = false;  ///< E was empty; alpha = 0
};

/// alpha = argmin ||A[E] y - b[E]|| with b a precomputed target field.
inline StaticFit static_fit(const RomBasis& basis, const Field& target, std::span<const CellId> ids, LsqWorkspace& ws) {
  StaticFit out;
  if (ids.empty()) {
    out.empty_mesh = true;
    return out;
  }
  ws.reserve(ids.size());
  auto a = ws.a(ids.size());
  auto b = ws.b(ids.size());
  fill_A(basis, ids, a);
  for (std::size_t k = 0; k < ids.size(); ++k) b[k] = target[ids[k]];
  out.alpha = minnorm_lsq_inplace(a, b).alpha;
  return out;
}

// ---------------------------------------------------------------------------
// Online loop

struct RomModel {
  CartesianGrid grid;
  FluxModel flux;
  ParamGrid pgrid;
  std::shared_ptr<const SnapshotStore> store;
  std::shared_ptr<const ShiftTable> shifts;
  ShiftInterpolation interpolation = ShiftInterpolation::GlobalLagrange;
  BasisMode mode = BasisMode::Shifted;
  std::function<double(const Point&, double)> initial;
};

enum class MeshMode { Full, Fixed, Adaptive };

inline std::string to_string(MeshMode m) {
  switch (m) {
    case MeshMode::Full: return "full";
    case MeshMode::Fixed: return "fixed";
    case MeshMode::Adaptive: return "adaptive";
  }
  return "?";
}

struct MeshSpec {
  MeshMode mode = MeshMode::Full;
  std::vector<CellId> e_off;
  int z_ref = 0;  ///< sample whose shift moves the adaptive mesh
};

struct TimingSplit {
  double adapt = 0.0;
  double assemble_A = 0.0;
  double assemble_b = 0.0;
  double lsq = 0.0;
  double init = 0.0;
  double total = 0.0;  ///< whole online run, init included

  double steps() const { return total - init; }
  TimingSplit& operator+=(const TimingSplit& o) {
    adapt += o.adapt;
    assemble_A += o.assemble_A;
    assemble_b += o.assemble_b;
    lsq += o.lsq;
    init += o.init;
    total += o.total;
    return *this;
  }
};

/// Read-only view of one completed step, handed to observers.
struct StepView {
  std::size_t k = 0;  ///< index of the new time level
  double t = 0.0;
  double mu = 0.0;
  const RomBasis* basis = nullptr;
  Coeffs alpha{};
  std::span<const CellId> ids;
  std::span<const double> b;  ///< b on ids; empty unless RunOptions::keep_rhs
};

struct RunOptions {
  double mu = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
  MeshSpec mesh;
  bool keep_rhs = false;
  /// Coefficient magnitude treated as divergence.
  double blowup = 1e150;
};

struct RomRun {
  std::vector<double> times;
  std::vector<Coeffs> alphas;
  RomBasis final_basis;
  TimingSplit timing;
  std::size_t steps_done = 0;
  bool diverged = false;
  std::size_t min_mesh = 0, max_mesh = 0;

  Field final_field() const { return final_basis.reconstruct(alphas.back()); }
};

using StepObserver = std::function<void(const StepView&)>;

namespace detail {
using Clock = std::chrono::steady_clock;
inline double seconds(Clock::time_point a, Clock::time_point b) { return std::chrono::duration<double>(b - a).count(); }
}  // namespace detail

/// Runs the ROM from t = 0 to t_end.  The observer sees every time level
/// (k = 0 included) and its cost is excluded from the timings.
inline RomRun run_rom(const RomModel& model, const RunOptions& opt, const StepObserver& observer = {}) {
  using detail::Clock;
  using detail::seconds;
  if (!model.store || !model.shifts) throw ConfigError("run_rom: offline artifacts missing");
  const auto& g = model.grid;
  const auto times = time_grid(opt.t_end, opt.dt);
  RomRun run;
  run.times = times;
  double observer_time = 0.0;
  const auto t_start = Clock::now();

  ShiftInterpolator ip(model.pgrid, model.interpolation);
  auto basis_at = [&](double t) {
    const ParamPoint z{t, opt.mu};
    ip.set_target(z);
    return assemble_basis(model.pgrid.containing_element(z), *model.shifts, ip, *model.store, model.mode);
  };

  RomBasis basis = basis_at(0.0);
  Coeffs alpha = init_coeffs(basis, project_midpoint(g, [&](const Point& x) { return model.initial(x, opt.mu); }));
  run.alphas.push_back(alpha);
  run.timing.init = seconds(t_start, Clock::now());
  if (observer) {
    const auto o0 = Clock::now();
    observer(StepView{0, 0.0, opt.mu, &basis, alpha, {}, {}});
    observer_time += seconds(o0, Clock::now());
  }

  std::vector<CellId> full;
  if (opt.mesh.mode == MeshMode::Full) full = all_cells(g);
  std::vector<CellId> adapted;
  CellMarks marks(opt.mesh.mode == MeshMode::Adaptive ? g.size() : 0);
  RhsWorkspace rhs(g);
  LsqWorkspace lsq;
  std::vector<double> b_copy;
  const std::size_t max_rows = opt.mesh.mode == MeshMode::Full ? full.size() : opt.mesh.e_off.size();
  lsq.reserve(max_rows);
  if (opt.keep_rhs) b_copy.resize(max_rows);
  run.min_mesh = max_rows;

  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double t_next = times[k + 1];
    const double dt = t_next - times[k];
    auto c0 = Clock::now();

    RomBasis next = basis_at(t_next);
    auto c1 = Clock::now();
    run.timing.assemble_A += seconds(c0, c1);

    std::span<const CellId> ids;
    if (opt.mesh.mode == MeshMode::Full) {
      ids = full;
    } else if (opt.mesh.mode == MeshMode::Fixed) {
      ids = opt.mesh.e_off;
    } else {
      const Point c = ip.shift_to(*model.shifts, static_cast<std::size_t>(opt.mesh.z_ref));
      adapt_reduced_mesh_into(opt.mesh.e_off, g, snap_shift(c, g), marks, adapted);
      ids = adapted;
    }
    if (ids.empty()) throw HyperReductionFailure("reduced mesh is empty");
    run.min_mesh = std::min(run.min_mesh, ids.size());
    run.max_mesh = std::max(run.max_mesh, ids.size());
    auto c2 = Clock::now();
    run.timing.adapt += seconds(c1, c2);

    auto b = lsq.b(ids.size());
    rhs.compute_b(basis, alpha, model.flux, opt.mu, dt, ids, b);
    auto c3 = Clock::now();
    run.timing.assemble_b += seconds(c2, c3);

    auto a = lsq.a(ids.size());
    fill_A(next, ids, a);
    auto c4 = Clock::now();
    run.timing.assemble_A += seconds(c3, c4);

    if (opt.keep_rhs) std::copy(b.begin(), b.end(), b_copy.begin());
    auto c5 = Clock::now();
    const Coeffs new_alpha = minnorm_lsq_inplace(a, b).alpha;
    auto c6 = Clock::now();
    run.timing.lsq += seconds(c5, c6);

    basis = std::move(next);
    alpha = new_alpha;
    run.alphas.push_back(alpha);
    ++run.steps_done;

    bool finite = true;
    for (double v : alpha) finite = finite && std::isfinite(v) && std::abs(v) < opt.blowup;
    if (observer && finite) {
      StepView view{k + 1, t_next, opt.mu, &basis, alpha, ids, {}};
      if (opt.keep_rhs) view.b = std::span<const double>(b_copy.data(), ids.size());
      const auto o0 = Clock::now();
      observer(view);
      observer_time += seconds(o0, Clock::now());
    }
    if (!finite) {
      run.diverged = true;
      break;
    }
  }
  run.final_basis = basis;
  run.timing.total = seconds(t_start, Clock::now()) - observer_time;
  return run;
}

}  // namespace srom
