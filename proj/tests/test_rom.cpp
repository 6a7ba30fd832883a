#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "srom/experiment.hpp"

using namespace srom;

namespace {

Eigen::Vector4d pinv_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(1e-13);
  return cod.solve(b);
}

Eigen::VectorXd to_eigen(const Field& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
  for (CellId i = 0; i < static_cast<CellId>(f.size()); ++i) v(i) = f[i];
  return v;
}

// Dense A(z): columns are shift_field(U(zRef_i), snap(c(z, zRef_i))).
Eigen::MatrixXd dense_basis(const OfflineArtifacts& off, double t, double mu) {
  const ParamPoint z{t, mu};
  const auto e = off.pgrid.containing_element(z);
  Eigen::MatrixXd a(off.grid.size(), 4);
  for (int v = 0; v < 4; ++v) {
    const auto j = static_cast<std::size_t>(e.vertex[static_cast<std::size_t>(v)]);
    const Point c = interpolate_shift(*off.shifts, off.pgrid, z, j, off.tc.interpolation);
    a.col(v) = to_eigen(shift_field(off.store->get(j), snap_shift(c, off.grid)));
  }
  return a;
}

}  // namespace

TEST(Snapshots, StoreRejectsMissing) {
  SnapshotStore s(2);
  EXPECT_THROW(s.get(0), StoreError);
  EXPECT_THROW(s.put(5, Field(CartesianGrid(1, {0, 0}, 1.0, 4))), StoreError);
}

TEST(Basis, ValueMatchesShiftedSnapshot) {
  const auto off = build_offline(test3_case(40));
  const ParamPoint z{0.3, 2.0};
  const auto basis = assemble_basis(off.pgrid, z, *off.shifts, off.tc.interpolation, *off.store, BasisMode::Shifted);
  const auto dense = dense_basis(off, z.t, z.mu);
  for (int c = 0; c < 4; ++c)
    for (CellId i = 0; i < off.grid.size(); ++i) EXPECT_EQ(basis.value(c, i), dense(i, c));
}

TEST(Rom, FullMeshLoopMatchesDenseOracle) {
  const auto off = build_offline(test1_case(100));
  const auto tc = off.tc;
  const double mu = 1.7;
  RunOptions ro;
  ro.mu = mu;
  ro.t_end = tc.t_end;
  ro.dt = off.dt;
  const auto run = run_rom(off.model(BasisMode::Shifted), ro);
  ASSERT_FALSE(run.diverged);

  const auto times = time_grid(tc.t_end, off.dt);
  Eigen::MatrixXd a = dense_basis(off, 0.0, mu);
  const Field u0 = project_midpoint(off.grid, [&](const Point& x) { return tc.initial(x, mu); });
  Eigen::Vector4d alpha = pinv_solve(a, to_eigen(u0));
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const Eigen::VectorXd um = a * alpha;
    Field f(off.grid, std::vector<double>(um.data(), um.data() + um.size()));
    // one explicit Euler step of the full-order scheme is U + dt F(U)
    const Field b = fom_step(f, tc.flux, mu, times[k + 1] - times[k]);
    a = dense_basis(off, times[k + 1], mu);
    alpha = pinv_solve(a, to_eigen(b));
    for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(alpha(c) - run.alphas[k + 1][static_cast<std::size_t>(c)]));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Rom, SubsetRhsMatchesFullRhs) {
  const auto off = build_offline(test3_case(40));
  const auto basis = assemble_basis(off.pgrid, {0.2, 1.0}, *off.shifts, off.tc.interpolation, *off.store, BasisMode::Shifted);
  const Coeffs alpha{0.3, -0.2, 0.6, 0.4};
  const auto all = all_cells(off.grid);
  const auto full = compute_b(basis, alpha, off.tc.flux, 1.0, 0.01, all);
  const std::vector<CellId> ids{0, 41, 777, 820, 1599};
  const auto part = compute_b(basis, alpha, off.tc.flux, 1.0, 0.01, ids);
  for (std::size_t k = 0; k < ids.size(); ++k) EXPECT_EQ(part[k], full[static_cast<std::size_t>(ids[k])]);
}

TEST(Rom, ExactRepresentabilityOnFullMesh) {
  for (const auto& tc : {test1_case(200), test3_case(40)}) {
    const auto off = build_offline(tc);
    for (std::size_t j = 0; j < off.pgrid.size(); ++j) {
      const auto z = off.pgrid.sample(static_cast<int>(j));
      const auto basis = assemble_basis(off.pgrid, z, *off.shifts, tc.interpolation, *off.store, BasisMode::Shifted);
      LsqWorkspace ws;
      const auto ids = all_cells(off.grid);
      const auto& target = off.store->get(j);
      const auto fit = static_fit(basis, target, ids, ws);
      double worst = 0.0;
      for (CellId i = 0; i < off.grid.size(); ++i) worst = std::max(worst, std::abs(basis.reconstruct(fit.alpha, i) - target[i]));
      EXPECT_LE(worst, 1e-10) << tc.label << " sample " << j;
    }
  }
}

TEST(Rom, StaticFitOnEmptyMeshIsZero) {
  const auto off = build_offline(test2_case(40));
  const auto basis = assemble_basis(off.pgrid, {0.5, 0.5}, *off.shifts, off.tc.interpolation, *off.store, BasisMode::Shifted);
  LsqWorkspace ws;
  const auto fit = static_fit(basis, off.store->get(0), {}, ws);
  EXPECT_TRUE(fit.empty_mesh);
  for (double v : fit.alpha) EXPECT_EQ(v, 0.0);
}

TEST(Rom, EmptyReducedMeshThrows) {
  const auto off = build_offline(test1_case(100));
  const auto basis = assemble_basis(off.pgrid, {0.1, 2.0}, *off.shifts, off.tc.interpolation, *off.store, BasisMode::Shifted);
  EXPECT_THROW(rom_step(basis, Coeffs{}, basis, {}, off.tc.flux, 2.0, off.dt), HyperReductionFailure);
}

TEST(Rom, ObserverExcludedFromTiming) {
  const auto off = build_offline(test1_case(100));
  RunOptions ro;
  ro.mu = 2.0;
  ro.t_end = off.tc.t_end;
  ro.dt = off.dt;
  std::size_t seen = 0;
  const auto run = run_rom(off.model(BasisMode::Shifted), ro, [&](const StepView& v) {
    EXPECT_EQ(v.k, seen);
    ++seen;
  });
  EXPECT_EQ(seen, run.times.size());
  const auto& s = run.timing;
  EXPECT_LE(s.adapt + s.assemble_A + s.assemble_b + s.lsq + s.init, s.total * (1 + 1e-9));
}
