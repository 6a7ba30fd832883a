#pragma once

// Uniform Cartesian meshes in one or two dimensions, cell-average fields on
// them, and the integer shift operator used by the shifted-snapshot bases.
//
// Cells are numbered 0-based and row-major with the first axis fastest:
// id = ix + nx * iy.  Shifts act by T[c]v(x) = v(x - c) with zero fill
// outside the domain.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srom/errors.hpp"

namespace srom {

using CellId = std::int64_t;
using Point = std::array<double, 2>;

/// Relative guard (in cell units) applied before flooring a physical shift.
/// Calibrated shifts are differences of cell centres, so c/dx is integral up
/// to rounding; without the guard 7*dx/dx may floor to 6.
inline constexpr double kSnapGuard = 1e-9;

class CartesianGrid {
 public:
  CartesianGrid() = default;

  /// Square domain [origin, origin + extent]^dim with `cells_per_axis`
  /// cells along each axis.
  CartesianGrid(int dim, Point origin, double extent, int cells_per_axis)
      : dim_(dim), origin_(origin), extent_(extent), nx_(cells_per_axis) {
    if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
    if (cells_per_axis < 2) throw ConfigError("grid needs at least 2 cells per axis");
    if (!(extent > 0.0) || !std::isfinite(extent)) throw ConfigError("grid extent must be positive");
    dx_ = extent / cells_per_axis;
    size_ = dim == 1 ? CellId{nx_} : CellId{nx_} * nx_;
    if (dim == 1) origin_[1] = 0.0;
  }

  int dim() const { return dim_; }
  const Point& origin() const { return origin_; }
  double extent() const { return extent_; }
  int nx() const { return nx_; }
  double dx() const { return dx_; }
  /// Total number of cells, nx^dim.
  CellId size() const { return size_; }
  /// Cell volume dx^dim.
  double cell_volume() const { return dim_ == 1 ? dx_ : dx_ * dx_; }

  bool valid(CellId id) const { return id >= 0 && id < size_; }

  std::array<CellId, 2> multi_index(CellId id) const {
    if (!valid(id)) throw IndexError("cell id " + std::to_string(id) + " out of range");
    if (dim_ == 1) return {id, 0};
    return {id % nx_, id / nx_};
  }

  CellId flat(CellId ix, CellId iy) const { return ix + CellId{nx_} * iy; }

  bool in_range(CellId ix, CellId iy) const {
    return ix >= 0 && ix < nx_ && (dim_ == 1 ? iy == 0 : (iy >= 0 && iy < nx_));
  }

  Point cell_centre(CellId id) const {
    const auto mi = multi_index(id);
    Point x{origin_[0] + (static_cast<double>(mi[0]) + 0.5) * dx_, 0.0};
    if (dim_ == 2) x[1] = origin_[1] + (static_cast<double>(mi[1]) + 0.5) * dx_;
    return x;
  }

  bool contains(const Point& x) const {
    for (int a = 0; a < dim_; ++a) {
      if (!(x[a] >= origin_[a] && x[a] <= origin_[a] + extent_)) return false;
    }
    return true;
  }

  /// Cell whose half-open box contains x; the right boundary belongs to the
  /// last cell.  Empty when x lies outside the closed domain.
  std::optional<CellId> locate(const Point& x) const {
    if (!contains(x)) return std::nullopt;
    std::array<CellId, 2> mi{0, 0};
    for (int a = 0; a < dim_; ++a) {
      auto i = static_cast<CellId>(std::floor((x[a] - origin_[a]) / dx_));
      mi[a] = std::clamp<CellId>(i, 0, nx_ - 1);
    }
    return flat(mi[0], mi[1]);
  }

  bool operator==(const CartesianGrid& o) const {
    return dim_ == o.dim_ && origin_ == o.origin_ && extent_ == o.extent_ && nx_ == o.nx_;
  }

 private:
  int dim_ = 1;
  Point origin_{0.0, 0.0};
  double extent_ = 1.0;
  int nx_ = 2;
  double dx_ = 0.5;
  CellId size_ = 2;
};

/// A shift by an integer number of cells per axis.
struct GridShift {
  std::array<CellId, 2> cells{0, 0};

  GridShift operator+(const GridShift& o) const { return {{cells[0] + o.cells[0], cells[1] + o.cells[1]}}; }
  GridShift operator-(const GridShift& o) const { return {{cells[0] - o.cells[0], cells[1] - o.cells[1]}}; }
  GridShift operator-() const { return {{-cells[0], -cells[1]}}; }
  bool operator==(const GridShift&) const = default;
  bool is_zero() const { return cells[0] == 0 && cells[1] == 0; }

  Point physical(const CartesianGrid& g) const {
    return {static_cast<double>(cells[0]) * g.dx(), static_cast<double>(cells[1]) * g.dx()};
  }
};

/// Projects a physical shift onto the mesh: floor(c/dx) cells per axis.
/// Note the asymmetry: 0.26 -> 1 cell but -0.26 -> -2 cells for dx = 0.25.
inline GridShift snap_shift(const Point& c, const CartesianGrid& g) {
  GridShift s;
  for (int a = 0; a < g.dim(); ++a) {
    s.cells[a] = static_cast<CellId>(std::floor(c[a] / g.dx() + kSnapGuard));
  }
  return s;
}

/// Cell-average values on a grid.
class Field {
 public:
  Field() = default;
  explicit Field(CartesianGrid g) : grid_(g), values_(static_cast<std::size_t>(g.size()), 0.0) {}
  Field(CartesianGrid g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
    if (static_cast<CellId>(values_.size()) != grid_.size()) {
      throw ConfigError("field length does not match grid size");
    }
  }

  const CartesianGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](CellId i) const { return values_[static_cast<std::size_t>(i)]; }
  double& operator[](CellId i) { return values_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Discrete L2 norm sqrt(dx^dim * sum v_i^2).
  double l2_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(grid_.cell_volume() * s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

 private:
  CartesianGrid grid_;
  std::vector<double> values_;
};

/// Samples a function at cell centres.
template <class Fn>
Field project_midpoint(const CartesianGrid& g, Fn&& fn) {
  Field f(g);
  for (CellId i = 0; i < g.size(); ++i) f[i] = fn(g.cell_centre(i));
  return f;
}

/// Source cell of target cell `(ix, iy)` under shift `s`, if it is inside.
inline std::optional<CellId> shifted_source(const CartesianGrid& g, CellId ix, CellId iy, const GridShift& s) {
  const CellId sx = ix - s.cells[0];
  const CellId sy = iy - s.cells[1];
  if (!g.in_range(sx, sy)) return std::nullopt;
  return g.flat(sx, sy);
}

/// T[c]u: cell i receives u at the cell containing centre(i) - c, or zero.
inline Field shift_field(const Field& u, const GridShift& c) {
  const auto& g = u.grid();
  Field out(g);
  const CellId ny = g.dim() == 1 ? 1 : g.nx();
  CellId id = 0;
  for (CellId iy = 0; iy < ny; ++iy) {
    for (CellId ix = 0; ix < g.nx(); ++ix, ++id) {
      if (auto src = shifted_source(g, ix, iy, c)) out[id] = u[*src];
    }
  }
  return out;
}

/// Neighbours across cell faces (von Neumann stencil), clipped at the boundary.
template <class Out>
void face_neighbours(const CartesianGrid& g, CellId id, Out&& out) {
  const auto mi = g.multi_index(id);
  const CellId nx = g.nx();
  if (mi[0] > 0) out(id - 1);
  if (mi[0] + 1 < nx) out(id + 1);
  if (g.dim() == 2) {
    if (mi[1] > 0) out(id - nx);
    if (mi[1] + 1 < nx) out(id + nx);
  }
}

/// ids together with their face neighbours, ascending and duplicate-free.
inline std::vector<CellId> halo(const CartesianGrid& g, std::span<const CellId> ids) {
  std::vector<CellId> out;
  out.reserve(ids.size() * static_cast<std::size_t>(2 * g.dim() + 1));
  for (CellId id : ids) {
    if (!g.valid(id)) throw IndexError("halo: cell id out of range");
    out.push_back(id);
    face_neighbours(g, id, [&](CellId j) { out.push_back(j); });
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// O(1)-reset membership marks over the cells of a grid.  Allocation is O(N)
/// once; each `next_generation()` invalidates all marks without touching them.
class CellMarks {
 public:
  CellMarks() = default;
  explicit CellMarks(CellId n) : stamp_(static_cast<std::size_t>(n), 0u) {}

  void resize(CellId n) {
    if (static_cast<CellId>(stamp_.size()) != n) {
      stamp_.assign(static_cast<std::size_t>(n), 0u);
      gen_ = 1;
    }
  }
  void next_generation() {
    if (++gen_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0u);
      gen_ = 1;
    }
  }
  bool marked(CellId i) const { return stamp_[static_cast<std::size_t>(i)] == gen_; }
  /// Marks i; returns false when it was already marked.
  bool mark(CellId i) {
    auto& s = stamp_[static_cast<std::size_t>(i)];
    if (s == gen_) return false;
    s = gen_;
    return true;
  }

 private:
  std::vector<std::uint32_t> stamp_;
  std::uint32_t gen_ = 1;
};

/// Unordered halo built in O(|ids|) with a reusable mark array.
class HaloBuilder {
 public:
  explicit HaloBuilder(const CartesianGrid& g) : grid_(g), marks_(g.size()) {}

  std::span<const CellId> build(std::span<const CellId> ids) {
    marks_.next_generation();
    cells_.clear();
    auto add = [&](CellId j) {
      if (marks_.mark(j)) cells_.push_back(j);
    };
    for (CellId id : ids) {
      add(id);
      face_neighbours(grid_, id, add);
    }
    return cells_;
  }

 private:
  CartesianGrid grid_;
  CellMarks marks_;
  std::vector<CellId> cells_;
};

/// Axis-aligned index box [lo, hi] (inclusive) of cells; empty when lo > hi.
struct CellBox {
  std::array<CellId, 2> lo{1, 1};
  std::array<CellId, 2> hi{0, 0};

  bool empty() const { return lo[0] > hi[0] || lo[1] > hi[1]; }

  CellBox shifted(const GridShift& s) const {
    if (empty()) return *this;
    return {{lo[0] + s.cells[0], lo[1] + s.cells[1]}, {hi[0] + s.cells[0], hi[1] + s.cells[1]}};
  }
  CellBox clipped(const CartesianGrid& g) const {
    CellBox b = *this;
    const CellId ymax = g.dim() == 1 ? 0 : g.nx() - 1;
    b.lo[0] = std::max<CellId>(b.lo[0], 0);
    b.hi[0] = std::min<CellId>(b.hi[0], g.nx() - 1);
    b.lo[1] = std::max<CellId>(b.lo[1], 0);
    b.hi[1] = std::min<CellId>(b.hi[1], ymax);
    return b;
  }
  CellBox united(const CellBox& o) const {
    if (empty()) return o;
    if (o.empty()) return *this;
    return {{std::min(lo[0], o.lo[0]), std::min(lo[1], o.lo[1])}, {std::max(hi[0], o.hi[0]), std::max(hi[1], o.hi[1])}};
  }
  CellBox grown(CellId k, const CartesianGrid& g) const {
    if (empty()) return *this;
    CellBox b{{lo[0] - k, lo[1] - (g.dim() == 2 ? k : 0)}, {hi[0] + k, hi[1] + (g.dim() == 2 ? k : 0)}};
    return b.clipped(g);
  }
  CellId count() const { return empty() ? 0 : (hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1); }

  template <class Fn>
  void for_each(const CartesianGrid& g, Fn&& fn) const {
    if (empty()) return;
    for (CellId iy = lo[1]; iy <= hi[1]; ++iy)
      for (CellId ix = lo[0]; ix <= hi[0]; ++ix) fn(g.flat(ix, iy), ix, iy);
  }
};

/// Bounding box of the nonzero cells of a field.
inline CellBox support_box(const Field& u) {
  const auto& g = u.grid();
  CellBox b;
  const CellId ny = g.dim() == 1 ? 1 : g.nx();
  CellId id = 0;
  for (CellId iy = 0; iy < ny; ++iy) {
    for (CellId ix = 0; ix < g.nx(); ++ix, ++id) {
      if (u[id] != 0.0) b = b.united(CellBox{{ix, iy}, {ix, iy}});
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Snapshot file: "TROM", u32 version, u32 dim, u32 nx, then N little-endian
// IEEE doubles in cell order.

inline constexpr std::uint32_t kFieldFileVersion = 1;

namespace detail {
template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}
template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("unexpected end of snapshot file");
  return to_little(v);
}
}  // namespace detail

inline void write_field(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("TROM", 4);
  detail::put<std::uint32_t>(os, kFieldFileVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid().dim()));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid().nx()));
  for (double v : f.values()) detail::put<double>(os, v);
  if (!os) throw IoError("write failed for " + path);
}

/// Reads a snapshot file and checks it against `g`.
inline Field read_field(const std::string& path, const CartesianGrid& g) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TROM", 4) != 0) throw IoError(path + ": bad magic");
  const auto version = detail::get<std::uint32_t>(is);
  if (version != kFieldFileVersion) throw IoError(path + ": unsupported version");
  const auto dim = detail::get<std::uint32_t>(is);
  const auto nx = detail::get<std::uint32_t>(is);
  if (static_cast<int>(dim) != g.dim() || static_cast<int>(nx) != g.nx()) {
    throw IoError(path + ": grid mismatch");
  }
  Field f(g);
  for (auto& v : f.values()) v = detail::get<double>(is);
  return f;
}

}  // namespace srom
