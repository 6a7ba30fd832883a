#pragma once

// Reduced meshes and their online adaptation.

#include <span>
#include <string>
#include <vector>

#include "srom/errors.hpp"
#include "srom/grid.hpp"

namespace srom {

struct ReducedMesh {
  enum class Origin { Offline, Adapted };

  std::vector<CellId> ids;
  Origin origin = Origin::Offline;
  GridShift applied{};

  std::size_t size() const { return ids.size(); }
};

/// Moves every cell of e_off to the cell containing map(centre) and keeps the
/// first occurrence of each hit; points leaving the domain are dropped.
/// O(|e_off|) given a reusable mark array sized to the grid.
template <class CentreMap>
void adapt_reduced_mesh_mapped(std::span<const CellId> e_off, const CartesianGrid& g, CentreMap&& map, CellMarks& marks,
                             std::vector<CellId>& out) {
  if (e_off.empty()) throw HyperReductionFailure("offline reduced mesh is empty");
  marks.next_generation();
  out.clear();
  for (CellId id : e_off) {
    if (auto hit = g.locate(map(g.cell_centre(id)))) {
      if (marks.mark(*hit)) out.push_back(*hit);
    }
  }
  if (out.empty()) throw HyperReductionFailure("adapted reduced mesh left the domain");
}

/// E_z: e_off translated by the integer shift c.  On a Cartesian grid
/// locate(centre(i) + c) is cell i + c, so the lookup is done on indices.
inline void adapt_reduced_mesh_into(std::span<const CellId> e_off, const CartesianGrid& g, const GridShift& c,
                                    CellMarks& marks, std::vector<CellId>& out) {
  if (e_off.empty()) throw HyperReductionFailure("offline reduced mesh is empty");
  marks.next_generation();
  out.clear();
  const CellId nx = g.nx();
  const CellId ny = g.dim() == 1 ? 1 : nx;
  for (CellId id : e_off) {
    if (!g.valid(id)) throw IndexError("reduced mesh cell id out of range");
    const CellId tx = id % nx + c.cells[0];
    const CellId ty = id / nx + c.cells[1];
    if (tx < 0 || tx >= nx || ty < 0 || ty >= ny) continue;
    const CellId hit = tx + nx * ty;
    if (marks.mark(hit)) out.push_back(hit);
  }
  if (out.empty()) throw HyperReductionFailure("adapted reduced mesh left the domain");
}

inline ReducedMesh adapt_reduced_mesh(const ReducedMesh& e_off, const CartesianGrid& g, const GridShift& c) {
  CellMarks marks(g.size());
  ReducedMesh out;
  out.origin = ReducedMesh::Origin::Adapted;
  out.applied = c;
  adapt_reduced_mesh_into(e_off.ids, g, c, marks, out.ids);
  return out;
}

}  // namespace srom
