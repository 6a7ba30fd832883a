#pragma once

// Residual snapshots, reduced-mesh selection by largest residual row norm,
// the shifted-residual pipeline and persistence of the offline mesh.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "srom/errors.hpp"
#include "srom/grid.hpp"
#include "srom/reduced_mesh.hpp"
#include "srom/rom.hpp"
#include "srom/sampling.hpp"
#include "srom/shifts.hpp"

namespace srom {

/// Column-compressed residual snapshot matrix (N rows).  Only exact nonzeros
/// are stored, so row norms agree bit for bit with the dense matrix.
class ResidualSnapshots {
 public:
  struct Column {
    ParamPoint z;
    std::vector<CellId> rows;
    std::vector<double> values;
  };

  ResidualSnapshots() = default;
  explicit ResidualSnapshots(CartesianGrid g) : grid_(g) {}

  const CartesianGrid& grid() const { return grid_; }
  std::size_t rows() const { return static_cast<std::size_t>(grid_.size()); }
  std::size_t cols() const { return cols_.size(); }
  const Column& column(std::size_t j) const { return cols_.at(j); }
  bool shifted() const { return shifted_; }
  void mark_shifted() { shifted_ = true; }

  void add_column(const ParamPoint& z, std::span<const CellId> ids, std::span<const double> values) {
    Column c;
    c.z = z;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (values[k] != 0.0) {
        c.rows.push_back(ids[k]);
        c.values.push_back(values[k]);
      }
    }
    sort_column(c);
    cols_.push_back(std::move(c));
  }
  void add_dense_column(const ParamPoint& z, std::span<const double> values) {
    Column c;
    c.z = z;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] != 0.0) {
        c.rows.push_back(static_cast<CellId>(i));
        c.values.push_back(values[i]);
      }
    }
    cols_.push_back(std::move(c));
  }

  Field dense_column(std::size_t j) const {
    Field f(grid_);
    const auto& c = cols_.at(j);
    for (std::size_t k = 0; k < c.rows.size(); ++k) f[c.rows[k]] = c.values[k];
    return f;
  }

  /// Squared l2 norm of every row, accumulated column by column in order.
  std::vector<double> row_norms2() const {
    std::vector<double> r(rows(), 0.0);
    for (const auto& c : cols_)
      for (std::size_t k = 0; k < c.rows.size(); ++k) r[static_cast<std::size_t>(c.rows[k])] += c.values[k] * c.values[k];
    return r;
  }

  /// FNV-1a over the dimensions, metadata and stored entries.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
      }
    };
    const auto n = static_cast<std::uint64_t>(rows());
    mix(&n, sizeof n);
    for (const auto& c : cols_) {
      mix(&c.z.t, sizeof(double));
      mix(&c.z.mu, sizeof(double));
      for (std::size_t k = 0; k < c.rows.size(); ++k) {
        mix(&c.rows[k], sizeof(CellId));
        mix(&c.values[k], sizeof(double));
      }
    }
    return h;
  }

  std::vector<Column>& columns() { return cols_; }

 private:
  static void sort_column(Column& c) {
    if (std::is_sorted(c.rows.begin(), c.rows.end())) return;
    std::vector<std::size_t> p(c.rows.size());
    std::iota(p.begin(), p.end(), 0);
    std::sort(p.begin(), p.end(), [&](auto a, auto b) { return c.rows[a] < c.rows[b]; });
    std::vector<CellId> r;
    std::vector<double> v;
    for (auto i : p) {
      r.push_back(c.rows[i]);
      v.push_back(c.values[i]);
    }
    c.rows.swap(r);
    c.values.swap(v);
  }

  CartesianGrid grid_;
  std::vector<Column> cols_;
  bool shifted_ = false;
};

/// Full-mesh SS-ROM runs at the training parameters; column (k, mu) holds
/// A(t_{k+1}) alpha(t_{k+1}) - b(t_k) for k >= 1, run-major.
inline ResidualSnapshots collect_residual_snapshots(const RomModel& model, std::span<const double> training_mu, double t_end,
                                                    double dt) {
  ResidualSnapshots s(model.grid);
  std::vector<double> res;
  for (std::size_t r = 0; r < training_mu.size(); ++r) {
    RunOptions opt;
    opt.mu = training_mu[r];
    opt.t_end = t_end;
    opt.dt = dt;
    opt.keep_rhs = true;
    try {
      auto run = run_rom(model, opt, [&](const StepView& v) {
        if (v.k < 2) return;
        res.resize(v.ids.size());
        for (std::size_t i = 0; i < v.ids.size(); ++i) res[i] = v.basis->reconstruct(v.alpha, v.ids[i]) - v.b[i];
        s.add_column({v.t, v.mu}, v.ids, res);
      });
      if (run.diverged) throw Error("diverged");
    } catch (const Error& e) {
      throw Error("residual training run " + std::to_string(r) + " (mu = " + std::to_string(training_mu[r]) +
                  ") failed: " + e.what());
    }
  }
  return s;
}

/// Column (t, mu) becomes T[-snap(c_m((t, mu), z_ref))] column: the exact inverse of
/// the integer shift that adapt_reduced_mesh applies online.
inline ResidualSnapshots shift_residuals(const ResidualSnapshots& s, const ShiftTable& table, const ParamGrid& pgrid,
                                         int z_ref, ShiftInterpolation kind = ShiftInterpolation::GlobalLagrange) {
  const auto& g = s.grid();
  ResidualSnapshots out(g);
  ShiftInterpolator ip(pgrid, kind);
  for (std::size_t j = 0; j < s.cols(); ++j) {
    const auto& c = s.column(j);
    ip.set_target(c.z);
    const Point cm = ip.shift_to(table, static_cast<std::size_t>(z_ref));
    const GridShift back = -snap_shift(cm, g);
    std::vector<CellId> ids;
    std::vector<double> vals;
    for (std::size_t k = 0; k < c.rows.size(); ++k) {
      const auto mi = g.multi_index(c.rows[k]);
      const CellId tx = mi[0] + back.cells[0];
      const CellId ty = mi[1] + back.cells[1];
      if (g.in_range(tx, ty)) {
        ids.push_back(g.flat(tx, ty));
        vals.push_back(c.values[k]);
      }
    }
    out.add_column(c.z, ids, vals);
  }
  out.mark_shifted();
  return out;
}

/// Indices of the n rows with the largest l2 norm, by descending norm; equal
/// norms keep ascending index order.
inline std::vector<CellId> select_reduced_mesh(const std::vector<double>& row_norms2, std::size_t n) {
  if (n < 1 || n > row_norms2.size()) {
    throw ConfigError("reduced mesh size " + std::to_string(n) + " must lie in [1, " + std::to_string(row_norms2.size()) + "]");
  }
  std::vector<CellId> idx(row_norms2.size());
  std::iota(idx.begin(), idx.end(), CellId{0});
  auto by_norm = [&](CellId a, CellId b) {
    const double ra = row_norms2[static_cast<std::size_t>(a)], rb = row_norms2[static_cast<std::size_t>(b)];
    return ra > rb || (ra == rb && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(), by_norm);
  idx.resize(n);
  return idx;
}

inline std::vector<CellId> select_reduced_mesh(const ResidualSnapshots& s, std::size_t n) {
  return select_reduced_mesh(s.row_norms2(), n);
}

// Reduced mesh file:
//   # srom reduced mesh
//   n = <count>
//   z_ref = <t> <mu>
//   source_hash = <hex FNV-1a of S>
//   then one cell id per line.

struct StoredMesh {
  std::vector<CellId> ids;
  ParamPoint z_ref;
  std::uint64_t source_hash = 0;
};

inline void write_reduced_mesh(const std::string& path, const StoredMesh& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << std::setprecision(17) << "# srom reduced mesh\n"
     << "n = " << m.ids.size() << "\n"
     << "z_ref = " << m.z_ref.t << " " << m.z_ref.mu << "\n"
     << "source_hash = " << std::hex << m.source_hash << std::dec << "\n";
  for (CellId id : m.ids) os << id << "\n";
  if (!os) throw IoError("write failed for " + path);
}

inline StoredMesh read_reduced_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  StoredMesh m;
  std::size_t n = 0;
  std::string line;
  int header = 0;
  while (header < 3 && std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto key = line.substr(0, line.find_first_of(" ="));
    std::istringstream v(line.substr(line.find('=') + 1));
    if (key == "n") v >> n;
    else if (key == "z_ref") v >> m.z_ref.t >> m.z_ref.mu;
    else if (key == "source_hash") v >> std::hex >> m.source_hash;
    else throw IoError(path + ": unexpected key " + key);
    ++header;
  }
  m.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CellId id = 0;
    if (!(is >> id)) throw IoError(path + ": expected " + std::to_string(n) + " cell ids");
    m.ids.push_back(id);
  }
  return m;
}

}  // namespace srom
