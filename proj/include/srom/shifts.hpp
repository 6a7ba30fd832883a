#pragma once

// Offline shift calibration between snapshots and online interpolation of the
// calibrated shifts over the (t, mu) sample grid.
//
// Convention: c(z_j, z_i) is the shift that carries the snapshot at z_i onto
// the snapshot at z_j, i.e. it minimizes ||T[c] U(z_i) - U(z_j)||.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "srom/errors.hpp"
#include "srom/grid.hpp"
#include "srom/sampling.hpp"

namespace srom {

struct DiscontinuitySet {
  std::vector<CellId> cells;
  /// The range-relative threshold flagged nothing and the largest-jump
  /// relative threshold was used instead.
  bool used_jump_fallback = false;

  bool empty() const { return cells.empty(); }
};

/// Flags cell i when max_j |u_i - u_j| over its face neighbours exceeds
/// theta * (max u - min u).  Smeared fronts can keep every jump below that
/// level; the threshold then drops to theta times the largest jump.
inline DiscontinuitySet detect_discontinuity(const Field& u, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("discontinuity threshold must lie in (0, 1)");
  DiscontinuitySet out;
  const auto v = u.values();
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  if (range < 1e-12) return out;

  const auto& g = u.grid();
  std::vector<double> jump(v.size(), 0.0);
  double max_jump = 0.0;
  for (CellId i = 0; i < g.size(); ++i) {
    double m = 0.0;
    face_neighbours(g, i, [&](CellId j) { m = std::max(m, std::abs(v[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)])); });
    jump[static_cast<std::size_t>(i)] = m;
    max_jump = std::max(max_jump, m);
  }
  auto collect = [&](double threshold) {
    for (CellId i = 0; i < g.size(); ++i) {
      if (jump[static_cast<std::size_t>(i)] > threshold) out.cells.push_back(i);
    }
  };
  collect(theta * range);
  if (out.cells.empty() && max_jump > 0.0) {
    out.used_jump_fallback = true;
    collect(theta * max_jump);
  }
  return out;
}

struct CalibrationOptions {
  double theta = 0.25;
  std::size_t cap = 20000;
  std::uint64_t seed = 12345;
};

struct CalibrationResult {
  GridShift cells;
  Point shift{0.0, 0.0};
  double objective = 0.0;  ///< ||T[c] source - target||_L2 at the optimum
  std::size_t candidates = 0;
  /// A discontinuity set was empty; the zero shift was returned.
  bool degenerate = false;
};

namespace detail {

inline std::uint64_t pack_offset(CellId dx, CellId dy) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(static_cast<std::int32_t>(dx))) << 32) |
         static_cast<std::uint32_t>(static_cast<std::int32_t>(dy));
}
inline GridShift unpack_offset(std::uint64_t k) {
  return {{static_cast<std::int32_t>(static_cast<std::uint32_t>(k >> 32)), static_cast<std::int32_t>(static_cast<std::uint32_t>(k & 0xffffffffu))}};
}

/// Evaluates ||T[c] s - t||^2 (sum of squares, no cell volume) using the
/// supports of s and t.
class ShiftObjective {
 public:
  ShiftObjective(const Field& source, const Field& target)
      : g_(source.grid()), s_(source.values()), t_(target.values()), box_s_(support_box(source)), box_t_(support_box(target)) {
    for (double x : s_) ss_ += x * x;
    for (double x : t_) tt_ += x * x;
  }

  double operator()(const GridShift& c) const {
    // ||T[c] s||^2: the part of supp(s) that stays inside after shifting.
    double shifted_ss = ss_;
    const CellBox moved = box_s_.shifted(c);
    const CellBox kept = moved.clipped(g_);
    if (!box_s_.empty() && kept.count() != moved.count()) {
      shifted_ss = 0.0;
      kept.for_each(g_, [&](CellId, CellId ix, CellId iy) {
        const double x = s_[static_cast<std::size_t>(g_.flat(ix - c.cells[0], iy - c.cells[1]))];
        shifted_ss += x * x;
      });
    }
    // Cross term over supp(T[c] s) intersected with supp(t).
    double cross = 0.0;
    CellBox overlap;
    if (!kept.empty() && !box_t_.empty()) {
      overlap.lo = {std::max(kept.lo[0], box_t_.lo[0]), std::max(kept.lo[1], box_t_.lo[1])};
      overlap.hi = {std::min(kept.hi[0], box_t_.hi[0]), std::min(kept.hi[1], box_t_.hi[1])};
      overlap.for_each(g_, [&](CellId id, CellId ix, CellId iy) {
        cross += s_[static_cast<std::size_t>(g_.flat(ix - c.cells[0], iy - c.cells[1]))] * t_[static_cast<std::size_t>(id)];
      });
    }
    return std::max(0.0, shifted_ss + tt_ - 2.0 * cross);
  }

  double scale() const { return ss_ + tt_; }

 private:
  CartesianGrid g_;
  std::span<const double> s_, t_;
  CellBox box_s_, box_t_;
  double ss_ = 0.0, tt_ = 0.0;
};

inline double shift_norm2(const GridShift& c) {
  return static_cast<double>(c.cells[0] * c.cells[0] + c.cells[1] * c.cells[1]);
}

}  // namespace detail

/// Enumerates the candidate shifts that map discontinuity cells of `source`
/// onto discontinuity cells of `target` (plus the zero shift) and returns the
/// minimizer of ||T[c] source - target||.  Ties go to the smaller |c|, then
/// to the lexicographically smaller offset.
inline CalibrationResult calibrate_shift(const Field& source, const Field& target, const CalibrationOptions& opt = {}) {
  if (!(source.grid() == target.grid())) throw ConfigError("calibrate_shift: fields live on different grids");
  const auto& g = source.grid();
  CalibrationResult res;
  const auto ds = detect_discontinuity(source, opt.theta);
  const auto dt = detect_discontinuity(target, opt.theta);
  if (ds.empty() || dt.empty()) {
    res.degenerate = true;
    const detail::ShiftObjective obj(source, target);
    res.objective = std::sqrt(obj(GridShift{}) * g.cell_volume());
    res.candidates = 1;
    return res;
  }

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(std::min<std::size_t>(ds.cells.size() * dt.cells.size(), 1u << 22));
  std::vector<std::array<CellId, 2>> mt, ms;
  for (CellId i : dt.cells) mt.push_back(g.multi_index(i));
  for (CellId j : ds.cells) ms.push_back(g.multi_index(j));
  for (const auto& a : mt)
    for (const auto& b : ms) seen.insert(detail::pack_offset(a[0] - b[0], a[1] - b[1]));
  seen.erase(detail::pack_offset(0, 0));

  std::vector<std::uint64_t> keys(seen.begin(), seen.end());
  std::sort(keys.begin(), keys.end());
  std::vector<GridShift> cands;
  if (opt.cap > 0 && keys.size() + 1 > opt.cap) {
    std::vector<std::uint64_t> picked;
    picked.reserve(opt.cap - 1);
    std::mt19937_64 rng(opt.seed);
    std::sample(keys.begin(), keys.end(), std::back_inserter(picked), opt.cap - 1, rng);
    keys.swap(picked);
  }
  cands.reserve(keys.size() + 1);
  cands.push_back(GridShift{});
  for (auto k : keys) cands.push_back(detail::unpack_offset(k));

  const detail::ShiftObjective obj(source, target);
  const double tie_tol = 1e-12 * obj.scale();
  GridShift best = cands.front();
  double best_val = obj(best);
  for (std::size_t k = 1; k < cands.size(); ++k) {
    const double val = obj(cands[k]);
    bool better = val < best_val - tie_tol;
    if (!better && std::abs(val - best_val) <= tie_tol) {
      const double na = detail::shift_norm2(cands[k]);
      const double nb = detail::shift_norm2(best);
      better = na < nb || (na == nb && cands[k].cells < best.cells);
    }
    if (better) {
      best = cands[k];
      best_val = val;
    }
  }
  res.cells = best;
  res.shift = best.physical(g);
  res.objective = std::sqrt(best_val * g.cell_volume());
  res.candidates = cands.size();
  return res;
}

enum class ShiftMode { ReferenceComposed, Pairwise };
enum class ShiftInterpolation { GlobalLagrange, Bilinear };

inline std::string to_string(ShiftMode m) { return m == ShiftMode::Pairwise ? "pairwise" : "reference"; }
inline std::string to_string(ShiftInterpolation m) { return m == ShiftInterpolation::Bilinear ? "bilinear" : "global"; }

/// Calibrated shifts between the snapshot samples.
struct ShiftTable {
  int dim = 1;
  std::vector<ParamPoint> samples;
  int ref = 0;
  ShiftMode mode = ShiftMode::ReferenceComposed;
  /// to_ref[j] = c(z_j, z_ref).
  std::vector<Point> to_ref;
  /// pairwise[j * m + i] = c(z_j, z_i); filled in pairwise mode only.
  std::vector<Point> pairwise;
  /// Largest per-axis |direct - composed| seen by the validation pass.
  double additivity_defect = 0.0;
  std::size_t validation_pairs = 0;
  std::size_t degenerate_calibrations = 0;

  std::size_t size() const { return samples.size(); }

  /// c(z_j, z_i).  In reference mode c(z_j, z_i) = c(z_j, z_ref) - c(z_i, z_ref).
  Point c(std::size_t j, std::size_t i) const {
    if (mode == ShiftMode::Pairwise) return pairwise[j * size() + i];
    return {to_ref[j][0] - to_ref[i][0], to_ref[j][1] - to_ref[i][1]};
  }

  /// Builds a reference-mode table from a known shift function c(z, zhat).
  template <class Fn>
  static ShiftTable from_function(int dim, std::vector<ParamPoint> samples, int ref, Fn&& fn) {
    ShiftTable t;
    t.dim = dim;
    t.samples = std::move(samples);
    t.ref = ref;
    for (const auto& z : t.samples) t.to_ref.push_back(fn(z, t.samples[static_cast<std::size_t>(ref)]));
    return t;
  }
};

/// Calibrates the shift table for the given snapshots (one per sample).
inline ShiftTable build_shift_table(std::span<const Field> snapshots, std::vector<ParamPoint> samples, int ref,
                                    ShiftMode mode, const CalibrationOptions& opt = {}) {
  if (snapshots.size() != samples.size()) throw ConfigError("build_shift_table: one snapshot per sample required");
  if (snapshots.empty()) throw ConfigError("build_shift_table: no snapshots");
  const std::size_t m = snapshots.size();
  if (ref < 0 || static_cast<std::size_t>(ref) >= m) throw ConfigError("build_shift_table: reference sample out of range");
  ShiftTable t;
  t.dim = snapshots[0].grid().dim();
  t.samples = std::move(samples);
  t.ref = ref;
  t.mode = mode;
  t.to_ref.assign(m, Point{0.0, 0.0});

  auto direct = [&](std::size_t j, std::size_t i) -> Point {
    if (i == j) return {0.0, 0.0};
    const auto r = calibrate_shift(snapshots[i], snapshots[j], opt);
    if (r.degenerate) ++t.degenerate_calibrations;
    return r.shift;
  };

  if (mode == ShiftMode::Pairwise) {
    t.pairwise.assign(m * m, Point{0.0, 0.0});
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < m; ++i) t.pairwise[j * m + i] = direct(j, i);
    for (std::size_t j = 0; j < m; ++j) t.to_ref[j] = t.pairwise[j * m + static_cast<std::size_t>(ref)];
    return t;
  }

  for (std::size_t j = 0; j < m; ++j) t.to_ref[j] = direct(j, static_cast<std::size_t>(ref));

  // Additivity check on ceil(m/4) random direct pairs.
  if (m > 1) {
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    const std::size_t pairs = (m + 3) / 4;
    for (std::size_t p = 0; p < pairs; ++p) {
      std::size_t i = pick(rng), j = pick(rng);
      if (i == j) j = (j + 1) % m;
      const Point d = direct(j, i);
      const Point comp = t.c(j, i);
      for (int a = 0; a < t.dim; ++a) t.additivity_defect = std::max(t.additivity_defect, std::abs(d[a] - comp[a]));
      ++t.validation_pairs;
    }
  }
  return t;
}

/// Interpolation weights over the sample grid for one target parameter.
/// Global mode uses barycentric tensor Lagrange interpolation through all
/// nodes; bilinear mode uses the four vertices of the containing element.
class ShiftInterpolator {
 public:
  ShiftInterpolator() = default;
  ShiftInterpolator(const ParamGrid& grid, ShiftInterpolation kind) : grid_(grid), kind_(kind) {
    bary_t_ = barycentric_weights(grid.n_t());
    bary_mu_ = barycentric_weights(grid.n_mu());
    wt_.resize(static_cast<std::size_t>(grid.n_t()));
    wmu_.resize(static_cast<std::size_t>(grid.n_mu()));
  }

  const ParamGrid& grid() const { return grid_; }
  ShiftInterpolation kind() const { return kind_; }

  /// Per-axis node weights for z; after this call `weight(j)` is valid.
  void set_target(const ParamPoint& z) {
    if (!grid_.contains(z)) throw DomainError("shift interpolation target outside the sampled domain");
    if (kind_ == ShiftInterpolation::GlobalLagrange) {
      lagrange(z.t, grid_.t_nodes(), bary_t_, wt_);
      lagrange(z.mu, grid_.mu_nodes(), bary_mu_, wmu_);
    } else {
      const auto e = grid_.containing_element(z);
      std::fill(wt_.begin(), wt_.end(), 0.0);
      std::fill(wmu_.begin(), wmu_.end(), 0.0);
      linear(z.t, grid_.t_nodes(), e.it, wt_);
      linear(z.mu, grid_.mu_nodes(), e.imu, wmu_);
    }
  }

  double weight(std::size_t j) const {
    const auto nt = static_cast<std::size_t>(grid_.n_t());
    return wt_[j % nt] * wmu_[j / nt];
  }

  /// sum_j w_j v_j for the current target.
  template <class Get>
  Point combine(Get&& value_of) const {
    Point out{0.0, 0.0};
    const auto nt = wt_.size();
    for (std::size_t imu = 0; imu < wmu_.size(); ++imu) {
      if (wmu_[imu] == 0.0) continue;
      for (std::size_t it = 0; it < nt; ++it) {
        const double w = wt_[it] * wmu_[imu];
        if (w == 0.0) continue;
        const Point v = value_of(it + nt * imu);
        out[0] += w * v[0];
        out[1] += w * v[1];
      }
    }
    return out;
  }

  /// Interpolated c(z, z_i) for the current target.
  Point shift_to(const ShiftTable& table, std::size_t i) const {
    if (table.mode == ShiftMode::ReferenceComposed) {
      const Point s = combine([&](std::size_t j) { return table.to_ref[j]; });
      return {s[0] - table.to_ref[i][0], s[1] - table.to_ref[i][1]};
    }
    return combine([&](std::size_t j) { return table.c(j, i); });
  }

 private:
  static std::vector<double> barycentric_weights(int n) {
    // Equispaced nodes: w_k = (-1)^k binom(n-1, k).
    std::vector<double> w(static_cast<std::size_t>(n));
    double b = 1.0;
    for (int k = 0; k < n; ++k) {
      w[static_cast<std::size_t>(k)] = (k % 2 == 0 ? 1.0 : -1.0) * b;
      b = b * (n - 1 - k) / (k + 1);
    }
    return w;
  }

  static void lagrange(double x, const std::vector<double>& nodes, const std::vector<double>& bary, std::vector<double>& out) {
    const double h = nodes.size() > 1 ? nodes[1] - nodes[0] : 1.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (std::abs(x - nodes[k]) <= 1e-12 * std::abs(h)) {
        std::fill(out.begin(), out.end(), 0.0);
        out[k] = 1.0;
        return;
      }
    }
    double denom = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      out[k] = bary[k] / (x - nodes[k]);
      denom += out[k];
    }
    for (auto& v : out) v /= denom;
  }

  static void linear(double x, const std::vector<double>& nodes, int cell, std::vector<double>& out) {
    const auto c = static_cast<std::size_t>(cell);
    const double s = std::clamp((x - nodes[c]) / (nodes[c + 1] - nodes[c]), 0.0, 1.0);
    out[c] = 1.0 - s;
    out[c + 1] = s;
  }

  ParamGrid grid_;
  ShiftInterpolation kind_ = ShiftInterpolation::GlobalLagrange;
  std::vector<double> bary_t_, bary_mu_, wt_, wmu_;
};

/// Interpolated shift c_m(z, z_i), un-snapped.
inline Point interpolate_shift(const ShiftTable& table, const ParamGrid& grid, const ParamPoint& z, std::size_t i,
                               ShiftInterpolation kind = ShiftInterpolation::GlobalLagrange) {
  ShiftInterpolator ip(grid, kind);
  ip.set_target(z);
  return ip.shift_to(table, i);
}

// Text format:
//   # srom shift table
//   dim = <1|2>
//   mode = <reference|pairwise>
//   ref = <sample index>
//   z_ref = <t> <mu>
//   samples = <m>
//   additivity_defect = <value>
//   then m rows "t mu c_1 [c_2]" holding c(z_j, z_ref),
//   and in pairwise mode m*m rows "j i c_1 [c_2]".

inline void write_shift_table(const std::string& path, const ShiftTable& t) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << std::setprecision(17);
  os << "# srom shift table\n"
     << "dim = " << t.dim << "\n"
     << "mode = " << to_string(t.mode) << "\n"
     << "ref = " << t.ref << "\n"
     << "z_ref = " << t.samples[static_cast<std::size_t>(t.ref)].t << " " << t.samples[static_cast<std::size_t>(t.ref)].mu << "\n"
     << "samples = " << t.size() << "\n"
     << "additivity_defect = " << t.additivity_defect << "\n";
  for (std::size_t j = 0; j < t.size(); ++j) {
    os << t.samples[j].t << " " << t.samples[j].mu;
    for (int a = 0; a < t.dim; ++a) os << " " << t.to_ref[j][a];
    os << "\n";
  }
  if (t.mode == ShiftMode::Pairwise) {
    for (std::size_t j = 0; j < t.size(); ++j)
      for (std::size_t i = 0; i < t.size(); ++i) {
        os << j << " " << i;
        for (int a = 0; a < t.dim; ++a) os << " " << t.pairwise[j * t.size() + i][a];
        os << "\n";
      }
  }
  if (!os) throw IoError("write failed for " + path);
}

inline ShiftTable read_shift_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  ShiftTable t;
  std::size_t m = 0;
  std::string line;
  auto value_of = [](const std::string& l) { return l.substr(l.find('=') + 1); };
  int header = 0;
  while (header < 6 && std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto key = line.substr(0, line.find_first_of(" ="));
    std::istringstream v(value_of(line));
    if (key == "dim") v >> t.dim;
    else if (key == "mode") {
      std::string s;
      v >> s;
      t.mode = s == "pairwise" ? ShiftMode::Pairwise : ShiftMode::ReferenceComposed;
    } else if (key == "ref") v >> t.ref;
    else if (key == "z_ref") {
    } else if (key == "samples") v >> m;
    else if (key == "additivity_defect") v >> t.additivity_defect;
    else throw IoError(path + ": unexpected key " + key);
    ++header;
  }
  for (std::size_t j = 0; j < m; ++j) {
    ParamPoint z;
    Point c{0.0, 0.0};
    if (!(is >> z.t >> z.mu)) throw IoError(path + ": truncated table");
    for (int a = 0; a < t.dim; ++a) is >> c[a];
    t.samples.push_back(z);
    t.to_ref.push_back(c);
  }
  if (t.mode == ShiftMode::Pairwise) {
    t.pairwise.assign(m * m, Point{0.0, 0.0});
    for (std::size_t k = 0; k < m * m; ++k) {
      std::size_t j = 0, i = 0;
      Point c{0.0, 0.0};
      if (!(is >> j >> i)) throw IoError(path + ": truncated pairwise block");
      for (int a = 0; a < t.dim; ++a) is >> c[a];
      t.pairwise[j * m + i] = c;
    }
  }
  if (!is && !is.eof()) throw IoError(path + ": malformed table");
  return t;
}

}  // namespace srom
