#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "srom/grid.hpp"

using namespace srom;

namespace {
CartesianGrid unit2d(int n) { return CartesianGrid(2, {0.0, 0.0}, 1.0, n); }
}  // namespace

TEST(Grid, CellCentreRowMajor) {
  const auto g = unit2d(4);
  const auto c = g.cell_centre(6);
  EXPECT_DOUBLE_EQ(c[0], 0.625);
  EXPECT_DOUBLE_EQ(c[1], 0.375);
}

TEST(Grid, LocateCentreRoundTrip) {
  for (const auto& g : {CartesianGrid(1, {-2.0, 0.0}, 4.0, 97), unit2d(13), CartesianGrid(2, {-1.0, -1.0}, 2.0, 40)}) {
    for (CellId i = 0; i < g.size(); ++i) {
      auto hit = g.locate(g.cell_centre(i));
      ASSERT_TRUE(hit.has_value());
      EXPECT_EQ(*hit, i);
    }
  }
}

TEST(Grid, LocateOutsideIsEmpty) {
  const auto g = unit2d(4);
  EXPECT_FALSE(g.locate({1.5, 0.5}).has_value());
  EXPECT_FALSE(g.locate({0.5, -0.01}).has_value());
}

TEST(Grid, RejectsBadConstruction) {
  EXPECT_THROW(CartesianGrid(3, {0.0, 0.0}, 1.0, 4), ConfigError);
  EXPECT_THROW(CartesianGrid(1, {0.0, 0.0}, -1.0, 4), ConfigError);
  EXPECT_THROW(CartesianGrid(1, {0.0, 0.0}, 1.0, 1), ConfigError);
}

TEST(Grid, HaloOfInteriorCell) {
  const auto g = unit2d(4);
  const std::vector<CellId> ids{6};
  EXPECT_EQ(halo(g, ids), (std::vector<CellId>{2, 5, 6, 7, 10}));
}

TEST(Grid, HaloClipsAtCorner) {
  const auto g = unit2d(4);
  const std::vector<CellId> ids{0, 15};
  EXPECT_EQ(halo(g, ids), (std::vector<CellId>{0, 1, 4, 11, 14, 15}));
  const std::vector<CellId> bad{16};
  EXPECT_THROW(halo(g, bad), IndexError);
}

TEST(Grid, HaloBuilderMatchesHalo) {
  const auto g = unit2d(10);
  HaloBuilder hb(g);
  std::mt19937 rng(3);
  std::uniform_int_distribution<CellId> pick(0, g.size() - 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<CellId> ids(7);
    for (auto& i : ids) i = pick(rng);
    auto got = hb.build(ids);
    std::vector<CellId> sorted(got.begin(), got.end());
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, halo(g, ids));
  }
}

TEST(Grid, ShiftFieldZeroFills) {
  const CartesianGrid g(1, {0.0, 0.0}, 1.0, 4);
  const Field u(g, {1, 2, 3, 4});
  const auto s = shift_field(u, GridShift{{1, 0}});
  EXPECT_EQ(std::vector<double>(s.values().begin(), s.values().end()), (std::vector<double>{0, 1, 2, 3}));
  const auto l = shift_field(u, GridShift{{-2, 0}});
  EXPECT_EQ(std::vector<double>(l.values().begin(), l.values().end()), (std::vector<double>{3, 4, 0, 0}));
}

TEST(Grid, ShiftIdentityAndComposition) {
  const auto g = unit2d(12);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Field u(g);
  // interior support so neither shift pushes mass out of the domain
  for (CellId iy = 4; iy < 8; ++iy)
    for (CellId ix = 4; ix < 8; ++ix) u[g.flat(ix, iy)] = val(rng);
  const GridShift a{{2, -1}}, b{{-3, 2}};
  const auto id = shift_field(u, GridShift{});
  for (CellId i = 0; i < g.size(); ++i) EXPECT_EQ(id[i], u[i]);
  const auto ab = shift_field(shift_field(u, a), b);
  const auto direct = shift_field(u, a + b);
  for (CellId i = 0; i < g.size(); ++i) EXPECT_EQ(ab[i], direct[i]);
  const auto back = shift_field(shift_field(u, a), -a);
  for (CellId i = 0; i < g.size(); ++i) EXPECT_EQ(back[i], u[i]);
}

TEST(Grid, ShiftOutOfDomainGivesZeros) {
  const auto g = unit2d(4);
  Field u(g, std::vector<double>(16, 1.0));
  const auto s = shift_field(u, GridShift{{5, 0}});
  EXPECT_EQ(s.max_abs(), 0.0);
}

TEST(Grid, SnapShiftFloors) {
  const CartesianGrid g(1, {0.0, 0.0}, 1.0, 4);  // dx = 0.25
  EXPECT_EQ(snap_shift({0.26, 0.0}, g).cells[0], 1);
  EXPECT_EQ(snap_shift({-0.26, 0.0}, g).cells[0], -2);
  EXPECT_EQ(snap_shift({0.0, 0.0}, g).cells[0], 0);
  // integral multiples survive rounding
  const CartesianGrid h(1, {0.0, 0.0}, 3.0, 1000);
  EXPECT_EQ(snap_shift({7 * h.dx(), 0.0}, h).cells[0], 7);
}

TEST(Grid, SupportBox) {
  const auto g = unit2d(6);
  Field u(g);
  EXPECT_TRUE(support_box(u).empty());
  u[g.flat(1, 2)] = 1.0;
  u[g.flat(4, 3)] = -2.0;
  const auto b = support_box(u);
  EXPECT_EQ(b.lo[0], 1);
  EXPECT_EQ(b.hi[0], 4);
  EXPECT_EQ(b.lo[1], 2);
  EXPECT_EQ(b.hi[1], 3);
  EXPECT_EQ(b.count(), 8);
}

TEST(Grid, FieldFileRoundTrip) {
  const auto g = unit2d(5);
  Field u(g);
  for (CellId i = 0; i < g.size(); ++i) u[i] = 0.1 * static_cast<double>(i) - 1.0 / 3.0;
  const auto path = (std::filesystem::temp_directory_path() / "srom_field_rt.trom").string();
  write_field(path, u);
  const auto v = read_field(path, g);
  for (CellId i = 0; i < g.size(); ++i) EXPECT_EQ(u[i], v[i]);
  EXPECT_THROW(read_field(path, unit2d(6)), IoError);
  std::filesystem::remove(path);
}

TEST(Grid, CellMarksGenerations) {
  CellMarks m(10);
  m.next_generation();
  EXPECT_TRUE(m.mark(3));
  EXPECT_FALSE(m.mark(3));
  m.next_generation();
  EXPECT_FALSE(m.marked(3));
  EXPECT_TRUE(m.mark(3));
}
