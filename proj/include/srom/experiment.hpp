#pragma once

// Offline pipeline, ROM variants, error/runtime metrics and CSV reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "srom/cases.hpp"
#include "srom/errors.hpp"
#include "srom/fv.hpp"
#include "srom/grid.hpp"
#include "srom/hyper.hpp"
#include "srom/rom.hpp"
#include "srom/sampling.hpp"
#include "srom/shifts.hpp"

namespace srom {

/// ||u_N - u_m|| / ||u_N|| in the discrete L2 norm.
inline double compute_error(const Field& u_n, const Field& u_m) {
  if (u_n.size() != u_m.size()) throw ConfigError("compute_error: fields differ in size");
  double num = 0.0, den = 0.0;
  const auto a = u_n.values();
  const auto b = u_m.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  if (den == 0.0) throw UndefinedReference("relative error undefined: reference field is zero");
  return std::sqrt(num / den);
}

enum class Variant { AdpSS, NAdpSS, SS, S };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::AdpSS: return "Adp-SS-ROM";
    case Variant::NAdpSS: return "N-Adp-SS-ROM";
    case Variant::SS: return "SS-ROM";
    case Variant::S: return "S-ROM";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "Adp-SS" || s == "Adp-SS-ROM" || s == "adp") return Variant::AdpSS;
  if (s == "N-Adp-SS" || s == "N-Adp-SS-ROM" || s == "nadp") return Variant::NAdpSS;
  if (s == "SS" || s == "SS-ROM" || s == "ss") return Variant::SS;
  if (s == "S" || s == "S-ROM" || s == "s") return Variant::S;
  throw ConfigError("unknown ROM variant '" + s + "'");
}

inline bool is_hyper_reduced(Variant v) { return v == Variant::AdpSS || v == Variant::NAdpSS; }

/// Snapshots, calibrated shifts and (optionally) the ranked reduced meshes.
struct OfflineArtifacts {
  TestCase tc;
  CartesianGrid grid;
  ParamGrid pgrid;
  double dt = 0.0;
  int z_ref = 0;
  std::shared_ptr<SnapshotStore> store;
  std::shared_ptr<ShiftTable> shifts;

  /// Every cell ranked by residual row norm; the first n entries are the
  /// reduced mesh of size n.
  std::vector<CellId> ranked_plain;
  std::vector<CellId> ranked_shifted;
  std::uint64_t residual_hash = 0;
  std::uint64_t shifted_residual_hash = 0;

  bool has_hyper() const { return !ranked_plain.empty(); }

  RomModel model(BasisMode mode) const {
    RomModel m;
    m.grid = grid;
    m.flux = tc.flux;
    m.pgrid = pgrid;
    m.store = store;
    m.shifts = shifts;
    m.interpolation = tc.interpolation;
    m.mode = mode;
    m.initial = tc.initial;
    return m;
  }

  std::vector<CellId> reduced_mesh(Variant v, std::size_t n) const {
    if (!has_hyper()) throw ConfigError("reduced mesh requested before hyper-reduction offline stage");
    const auto& r = v == Variant::AdpSS ? ranked_shifted : ranked_plain;
    if (n < 1 || n > r.size()) throw ConfigError("reduced mesh size out of range");
    return {r.begin(), r.begin() + static_cast<std::ptrdiff_t>(n)};
  }
};

/// FOM snapshots at the sample grid and the shift table.
inline OfflineArtifacts build_offline(const TestCase& tc) {
  OfflineArtifacts off;
  off.tc = tc;
  off.grid = tc.grid();
  off.pgrid = build_param_grid(0.0, tc.t_end, tc.mu_lo, tc.mu_hi, tc.n_t, tc.n_mu);
  off.z_ref = tc.z_ref.value_or(off.pgrid.centroid_sample());
  if (off.z_ref < 0 || static_cast<std::size_t>(off.z_ref) >= off.pgrid.size()) throw ConfigError("z_ref sample out of range");
  off.store = std::make_shared<SnapshotStore>(off.pgrid.size());
  if (tc.is_static) {
    for (std::size_t j = 0; j < off.pgrid.size(); ++j) {
      const auto z = off.pgrid.sample(static_cast<int>(j));
      off.store->put(j, tc.project(off.grid, z.t, z.mu));
    }
  } else {
    const auto cfg = tc.fom();
    off.dt = cfg.resolved_dt();
    for (int imu = 0; imu < off.pgrid.n_mu(); ++imu) {
      auto tr = run_fom(cfg, off.pgrid.mu_nodes()[static_cast<std::size_t>(imu)], off.pgrid.t_nodes());
      for (int it = 0; it < off.pgrid.n_t(); ++it) off.store->put(static_cast<std::size_t>(off.pgrid.index(it, imu)), tr.fields[static_cast<std::size_t>(it)]);
    }
  }
  const auto fields = off.store->fields();
  off.shifts = std::make_shared<ShiftTable>(build_shift_table(fields, off.pgrid.samples(), off.z_ref, tc.shift_mode, tc.calibration));
  return off;
}

/// Static residual snapshots: A(z) alpha(z) - U(z) for the full-mesh fit at
/// each training parameter, run-major.
inline ResidualSnapshots collect_static_residuals(const OfflineArtifacts& off, std::span<const double> training_mu,
                                                  std::span<const double> training_t) {
  ResidualSnapshots s(off.grid);
  LsqWorkspace ws;
  ShiftInterpolator ip(off.pgrid, off.tc.interpolation);
  std::vector<double> res;
  for (double mu : training_mu) {
    for (double t : training_t) {
      const ParamPoint z{t, mu};
      const Field target = off.tc.project(off.grid, t, mu);
      ip.set_target(z);
      const auto basis = assemble_basis(off.pgrid.containing_element(z), *off.shifts, ip, *off.store, BasisMode::Shifted);
      const auto ids = box_cells(off.grid, active_box(basis, *off.store, support_box(target)));
      const auto fit = static_fit(basis, target, ids, ws);
      res.resize(ids.size());
      for (std::size_t k = 0; k < ids.size(); ++k) res[k] = basis.reconstruct(fit.alpha, ids[k]) - target[ids[k]];
      s.add_column(z, ids, res);
    }
  }
  return s;
}

/// Residual snapshots at m_hyp interior training parameters, plain and
/// shifted rankings of all cells.
inline void build_hyper(OfflineArtifacts& off) {
  const auto& tc = off.tc;
  const auto training_mu = interior_points(tc.mu_lo, tc.mu_hi, tc.m_hyp);
  ResidualSnapshots s;
  if (tc.is_static) {
    s = collect_static_residuals(off, training_mu, uniform_points(0.0, tc.t_end, tc.training_t));
  } else {
    s = collect_residual_snapshots(off.model(BasisMode::Shifted), training_mu, tc.t_end, off.dt);
  }
  const auto shifted = shift_residuals(s, *off.shifts, off.pgrid, off.z_ref, tc.interpolation);
  const auto n = static_cast<std::size_t>(off.grid.size());
  off.ranked_plain = select_reduced_mesh(s, n);
  off.ranked_shifted = select_reduced_mesh(shifted, n);
  off.residual_hash = s.hash();
  off.shifted_residual_hash = shifted.hash();
}

struct ExperimentOptions {
  int repeats = 1;  ///< timed repetitions per target; the median is reported
  double instability_threshold = 1e6;
  int targets_mu = 0;  ///< 0: case default
  int targets_t = 0;
  std::vector<double> mu_values;  ///< explicit target mu values; overrides targets_mu
  std::vector<double> t_values;   ///< static cases: explicit target times
};

struct ErrorReport {
  std::vector<double> per_target;  ///< max over time of e(t, mu) per target mu (or e(z) for static cases)
  double max_error = 0.0;
  bool unstable = false;
  std::size_t diverged_runs = 0;
  std::size_t empty_mesh_fits = 0;  ///< static fits on an empty mesh (alpha = 0)
};

struct RuntimeReport {
  std::vector<double> per_target;  ///< C_z
  double mean = 0.0;               ///< C
  TimingSplit split;               ///< averages over targets
  double mean_step = 0.0;          ///< average online time per time step
};

struct ExperimentReport {
  std::string case_label;
  Variant variant = Variant::SS;
  int nx = 0, n_t = 0, n_mu = 0;
  std::size_t n = 0;  ///< reduced mesh size; N for full-mesh variants
  double n_pct = 100.0;
  ErrorReport error;
  RuntimeReport runtime;
};

namespace detail {

inline std::vector<double> target_mus(const OfflineArtifacts& off, const ExperimentOptions& opt) {
  if (!opt.mu_values.empty()) return opt.mu_values;
  const int m = opt.targets_mu > 0 ? opt.targets_mu : off.tc.targets_mu;
  return uniform_points(off.tc.mu_lo, off.tc.mu_hi, m);
}

inline ExperimentReport blank_report(const OfflineArtifacts& off, Variant v, std::size_t n) {
  ExperimentReport r;
  r.case_label = off.tc.label;
  r.variant = v;
  r.nx = off.grid.nx();
  r.n_t = off.pgrid.n_t();
  r.n_mu = off.pgrid.n_mu();
  r.n = is_hyper_reduced(v) ? n : static_cast<std::size_t>(off.grid.size());
  r.n_pct = 100.0 * static_cast<double>(r.n) / static_cast<double>(off.grid.size());
  return r;
}

inline void finish(ExperimentReport& r, const ExperimentOptions& opt, std::size_t steps_per_run) {
  auto& e = r.error;
  e.max_error = e.per_target.empty() ? 0.0 : *std::max_element(e.per_target.begin(), e.per_target.end());
  e.unstable = !(e.max_error <= opt.instability_threshold);
  auto& rt = r.runtime;
  const auto m = static_cast<double>(std::max<std::size_t>(rt.per_target.size(), 1));
  rt.mean = 0.0;
  for (double c : rt.per_target) rt.mean += c;
  rt.mean /= m;
  rt.split.adapt /= m;
  rt.split.assemble_A /= m;
  rt.split.assemble_b /= m;
  rt.split.lsq /= m;
  rt.split.init /= m;
  rt.split.total /= m;
  rt.mean_step = steps_per_run > 0 ? rt.split.steps() / static_cast<double>(steps_per_run) : 0.0;
}

inline TimingSplit median_run(std::vector<TimingSplit> runs) {
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.total < b.total; });
  return runs[runs.size() / 2];
}

}  // namespace detail

/// Runs one ROM variant over the case's target parameters.
inline ExperimentReport run_time_dependent(const OfflineArtifacts& off, Variant v, std::size_t n, const ExperimentOptions& opt) {
  auto report = detail::blank_report(off, v, n);
  const auto model = off.model(v == Variant::S ? BasisMode::Plain : BasisMode::Shifted);
  const auto cfg = off.tc.fom();
  const auto times = time_grid(off.tc.t_end, off.dt);

  RunOptions ro;
  ro.t_end = off.tc.t_end;
  ro.dt = off.dt;
  if (v == Variant::AdpSS) {
    ro.mesh = {MeshMode::Adaptive, off.reduced_mesh(v, n), off.z_ref};
  } else if (v == Variant::NAdpSS) {
    ro.mesh = {MeshMode::Fixed, off.reduced_mesh(v, n), off.z_ref};
  }

  for (double mu : detail::target_mus(off, opt)) {
    ro.mu = mu;
    Field u = initial_field(cfg, mu);
    std::size_t fom_k = 0;
    double worst = 0.0;
    auto observer = [&](const StepView& s) {
      while (fom_k < s.k) {
        u = fom_step(u, cfg.flux, mu, times[fom_k + 1] - times[fom_k]);
        ++fom_k;
      }
      worst = std::max(worst, compute_error(u, s.basis->reconstruct(s.alpha)));
    };
    std::vector<TimingSplit> timings;
    auto run = run_rom(model, ro, observer);
    timings.push_back(run.timing);
    if (run.diverged) {
      worst = std::numeric_limits<double>::infinity();
      ++report.error.diverged_runs;
    }
    for (int r = 1; r < opt.repeats; ++r) timings.push_back(run_rom(model, ro).timing);
    const auto t = detail::median_run(timings);
    report.error.per_target.push_back(worst);
    report.runtime.per_target.push_back(t.total);
    report.runtime.split += t;
  }
  detail::finish(report, opt, times.size() - 1);
  return report;
}

/// Static fits U_m(z) = A(z) alpha(z) over a tensor grid of targets.
inline ExperimentReport run_static(const OfflineArtifacts& off, Variant v, std::size_t n, const ExperimentOptions& opt) {
  using detail::Clock;
  using detail::seconds;
  auto report = detail::blank_report(off, v, n);
  const auto& g = off.grid;
  const BasisMode mode = v == Variant::S ? BasisMode::Plain : BasisMode::Shifted;
  std::vector<CellId> e_off;
  if (is_hyper_reduced(v)) e_off = off.reduced_mesh(v, n);
  const int nt = opt.targets_t > 0 ? opt.targets_t : off.tc.targets_t;
  const auto ts = opt.t_values.empty() ? uniform_points(0.0, off.tc.t_end, nt) : opt.t_values;
  const auto mus = detail::target_mus(off, opt);

  ShiftInterpolator ip(off.pgrid, off.tc.interpolation);
  LsqWorkspace ws;
  CellMarks marks(v == Variant::AdpSS ? g.size() : 0);
  std::vector<CellId> ids;
  for (double mu : mus) {
    for (double t : ts) {
      const ParamPoint z{t, mu};
      const Field target = off.tc.project(g, t, mu);
      const CellBox target_box = support_box(target);
      std::vector<TimingSplit> timings;
      StaticFit fit;
      RomBasis basis;
      for (int r = 0; r < std::max(opt.repeats, 1); ++r) {
        TimingSplit ts_run;
        const auto c0 = Clock::now();
        ip.set_target(z);
        basis = assemble_basis(off.pgrid.containing_element(z), *off.shifts, ip, *off.store, mode);
        const auto c1 = Clock::now();
        if (v == Variant::AdpSS) {
          adapt_reduced_mesh_into(e_off, g, snap_shift(ip.shift_to(*off.shifts, static_cast<std::size_t>(off.z_ref)), g), marks, ids);
        } else if (v == Variant::NAdpSS) {
          ids = e_off;
        } else {
          ids = box_cells(g, active_box(basis, *off.store, target_box));
        }
        const auto c2 = Clock::now();
        fit = static_fit(basis, target, ids, ws);
        const auto c3 = Clock::now();
        ts_run.assemble_A = seconds(c0, c1);
        ts_run.adapt = seconds(c1, c2);
        ts_run.lsq = seconds(c2, c3);
        ts_run.total = seconds(c0, c3);
        timings.push_back(ts_run);
      }
      if (fit.empty_mesh) ++report.error.empty_mesh_fits;
      // Error over the union of supports; every other cell is zero in both.
      double num = 0.0, den = 0.0;
      active_box(basis, *off.store, target_box).for_each(g, [&](CellId id, CellId, CellId) {
        const double d = target[id] - basis.reconstruct(fit.alpha, id);
        num += d * d;
        den += target[id] * target[id];
      });
      if (den == 0.0) throw UndefinedReference("relative error undefined: reference field is zero");
      const auto tm = detail::median_run(timings);
      report.error.per_target.push_back(std::sqrt(num / den));
      report.runtime.per_target.push_back(tm.total);
      report.runtime.split += tm;
    }
  }
  detail::finish(report, opt, 1);
  return report;
}

inline ExperimentReport run_experiment(const OfflineArtifacts& off, Variant v, std::size_t n, const ExperimentOptions& opt = {}) {
  if (is_hyper_reduced(v) && !off.has_hyper()) throw ConfigError("hyper-reduced variant needs the hyper-reduction offline stage");
  return off.tc.is_static ? run_static(off, v, n, opt) : run_time_dependent(off, v, n, opt);
}

// ---------------------------------------------------------------------------
// Reports

inline const char* kReportHeader = "case,variant,N_x,N_t,N_mu,n,n_pct,E,C,C_adapt,C_A,C_b,C_ls,unstable_flag";

inline std::string report_row(const ExperimentReport& r) {
  std::ostringstream os;
  os << std::setprecision(6);
  const auto& s = r.runtime.split;
  os << r.case_label << "," << to_string(r.variant) << "," << r.nx << "," << r.n_t << "," << r.n_mu << "," << r.n << ","
     << r.n_pct << "," << r.error.max_error << "," << r.runtime.mean << "," << s.adapt << "," << s.assemble_A << ","
     << s.assemble_b << "," << s.lsq << "," << (r.error.unstable ? 1 : 0);
  return os.str();
}

namespace detail {
inline void write_rows(const std::filesystem::path& path, const std::vector<const ExperimentReport*>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << kReportHeader << "\n";
  for (const auto* r : rows) os << report_row(*r) << "\n";
  if (!os) throw IoError("write failed for " + path.string());
}
}  // namespace detail

/// Writes the report CSV at `path` and two plot-data CSVs next to it
/// (<stem>_error_vs_n.csv sorted by n, <stem>_error_vs_runtime.csv sorted by C).
inline void emit_report(const std::vector<ExperimentReport>& reports, const std::filesystem::path& path) {
  if (reports.empty()) throw ConfigError("emit_report: no reports to write");
  std::vector<const ExperimentReport*> rows;
  for (const auto& r : reports) rows.push_back(&r);
  detail::write_rows(path, rows);

  auto sibling = [&](const std::string& suffix) {
    return path.parent_path() / (path.stem().string() + suffix + ".csv");
  };
  auto by_n = rows;
  std::stable_sort(by_n.begin(), by_n.end(), [](auto a, auto b) {
    return std::tie(a->case_label, a->n) < std::tie(b->case_label, b->n);
  });
  detail::write_rows(sibling("_error_vs_n"), by_n);
  auto by_c = rows;
  std::stable_sort(by_c.begin(), by_c.end(), [](auto a, auto b) { return a->runtime.mean < b->runtime.mean; });
  detail::write_rows(sibling("_error_vs_runtime"), by_c);
}

// ---------------------------------------------------------------------------
// Persistence of the offline stage

inline void save_offline(const OfflineArtifacts& off, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t j = 0; j < off.store->size(); ++j) {
    std::ostringstream name;
    name << "sample_" << std::setw(4) << std::setfill('0') << j << ".trom";
    write_field((dir / name.str()).string(), off.store->get(j));
  }
  write_shift_table((dir / "shifts.txt").string(), *off.shifts);
  if (off.has_hyper()) {
    const auto zr = off.pgrid.sample(off.z_ref);
    write_reduced_mesh((dir / "mesh_plain.txt").string(), {off.ranked_plain, zr, off.residual_hash});
    write_reduced_mesh((dir / "mesh_shifted.txt").string(), {off.ranked_shifted, zr, off.shifted_residual_hash});
  }
}

/// Loads what save_offline wrote for the same case configuration.
inline OfflineArtifacts load_offline(const TestCase& tc, const std::filesystem::path& dir) {
  OfflineArtifacts off;
  off.tc = tc;
  off.grid = tc.grid();
  off.pgrid = build_param_grid(0.0, tc.t_end, tc.mu_lo, tc.mu_hi, tc.n_t, tc.n_mu);
  if (!tc.is_static) off.dt = tc.dt();
  off.shifts = std::make_shared<ShiftTable>(read_shift_table((dir / "shifts.txt").string()));
  if (off.shifts->size() != off.pgrid.size()) throw StoreError("shift table does not match the sample grid");
  off.z_ref = off.shifts->ref;
  off.store = std::make_shared<SnapshotStore>(off.pgrid.size());
  for (std::size_t j = 0; j < off.pgrid.size(); ++j) {
    std::ostringstream name;
    name << "sample_" << std::setw(4) << std::setfill('0') << j << ".trom";
    const auto p = dir / name.str();
    if (!std::filesystem::exists(p)) throw StoreError("missing snapshot " + p.string());
    off.store->put(j, read_field(p.string(), off.grid));
  }
  if (std::filesystem::exists(dir / "mesh_plain.txt") && std::filesystem::exists(dir / "mesh_shifted.txt")) {
    auto plain = read_reduced_mesh((dir / "mesh_plain.txt").string());
    auto shifted = read_reduced_mesh((dir / "mesh_shifted.txt").string());
    off.ranked_plain = std::move(plain.ids);
    off.ranked_shifted = std::move(shifted.ids);
    off.residual_hash = plain.source_hash;
    off.shifted_residual_hash = shifted.source_hash;
  }
  return off;
}

}  // namespace srom
