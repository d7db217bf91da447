#include <gtest/gtest.h>

#include <map>
#include <set>

#include "capacore/oracle.hpp"
#include "capacore/params.hpp"
#include "capacore/partition.hpp"
#include "capacore/random.hpp"

using namespace capacore;

namespace {

std::vector<Point> random_points(Rng& rng, std::size_t n, std::int64_t delta, int d) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(d));
    for (auto& x : c) x = uniform_int(rng, 1, delta);
    out.emplace_back(std::move(c), i);
  }
  return out;
}

CellEstimates exact_estimates(const std::vector<Point>& pts, const Grid& g) {
  CellEstimates e(static_cast<std::size_t>(g.levels() + 2));
  for (const auto& p : pts)
    for (int i = -1; i <= g.levels(); ++i) e[static_cast<std::size_t>(i + 1)][g.cell_of(p, i)] += 1.0;
  return e;
}

// Reference marking: a cell is heavy iff every cell on its path from the root,
// itself included, has count >= its level threshold (levels -1..L-1).
bool ref_heavy(const Point& p, int level, const std::vector<Point>& pts, const Grid& g, const std::vector<double>& T) {
  for (int i = -1; i <= level; ++i) {
    const CellId c = g.cell_of(p, i);
    double n = 0;
    for (const auto& q : pts) n += g.cell_of(q, i) == c;
    if (n < T[static_cast<std::size_t>(i + 1)]) return false;
  }
  return level <= g.levels() - 1;
}

}  // namespace

TEST(Partition, SinglePointTinyThresholds) {
  const Grid g = Grid::random(8, 2, 3);
  const std::vector<Point> pts = {Point({3, 5})};
  const std::vector<double> T(5, 0.5);
  const auto s = mark_cells(exact_estimates(pts, g), T, g);
  for (int i = -1; i <= 2; ++i) EXPECT_TRUE(s.is_heavy(g.cell_of(pts[0], i)));
  EXPECT_TRUE(s.is_crucial(g.cell_of(pts[0], 3), g));
  EXPECT_EQ(part_of(pts[0], s, g), (PartKey{3, 0}));
  EXPECT_EQ(s.total_heavy(), 4u);
}

TEST(Partition, HugeThresholdMarksNothing) {
  Rng rng(1);
  const Grid g = Grid::random(8, 2, 4);
  const auto pts = random_points(rng, 20, 8, 2);
  const std::vector<double> T(5, 21.0);
  const auto s = mark_cells(exact_estimates(pts, g), T, g);
  EXPECT_EQ(s.total_heavy(), 0u);
  for (const auto& p : pts) EXPECT_FALSE(part_of(p, s, g).has_value());
}

TEST(Partition, MatchesReferenceMarking) {
  Rng rng(2);
  for (int it = 0; it < 40; ++it) {
    const Grid g = Grid::random(16, 2, rng());
    const auto pts = random_points(rng, 40, 16, 2);
    std::vector<double> T;
    for (int i = -1; i <= g.levels(); ++i) T.push_back(1.0 + static_cast<double>(uniform_int(rng, 0, 3)) * (i + 2));
    const auto s = mark_cells(exact_estimates(pts, g), T, g);
    for (const auto& p : pts) {
      for (int i = -1; i <= g.levels() - 1; ++i) EXPECT_EQ(s.is_heavy(g.cell_of(p, i)), ref_heavy(p, i, pts, g, T));
      // the part level is the first non-heavy level below a heavy root
      auto key = part_of(p, s, g);
      if (!ref_heavy(p, -1, pts, g, T)) {
        EXPECT_FALSE(key.has_value());
        continue;
      }
      ASSERT_TRUE(key.has_value());
      int lvl = 0;
      while (lvl < g.levels() && ref_heavy(p, lvl, pts, g, T)) ++lvl;
      EXPECT_EQ(key->level, lvl);
      EXPECT_TRUE(s.is_crucial(g.cell_of(p, lvl), g));
    }
  }
}

TEST(Partition, HeavyIndexIsLexicographic) {
  Rng rng(3);
  const Grid g = Grid::random(16, 2, 5);
  const auto pts = random_points(rng, 60, 16, 2);
  const std::vector<double> T(6, 1.0);
  const auto s = mark_cells(exact_estimates(pts, g), T, g);
  for (int i = -1; i <= 3; ++i) {
    std::vector<CellId> cells;
    for (const auto& [c, j] : s.heavy(i)) cells.push_back(c);
    std::sort(cells.begin(), cells.end(), [](const CellId& a, const CellId& b) { return a.lattice < b.lattice; });
    for (std::size_t j = 0; j < cells.size(); ++j) EXPECT_EQ(*s.heavy_index(cells[j]), j);
  }
}

TEST(Partition, PartsShareParentCell) {
  Rng rng(4);
  for (int it = 0; it < 30; ++it) {
    const Grid g = Grid::random(16, 2, rng());
    const auto pts = random_points(rng, 50, 16, 2);
    std::vector<double> T;
    for (int i = -1; i <= 4; ++i) T.push_back(static_cast<double>(uniform_int(rng, 1, 6)));
    const auto s = mark_cells(exact_estimates(pts, g), T, g);
    std::map<PartKey, CellId> parent;
    for (const auto& p : pts) {
      auto key = part_of(p, s, g);
      if (!key) continue;
      const CellId up = g.cell_of(p, key->level - 1);
      auto [itp, fresh] = parent.emplace(*key, up);
      EXPECT_EQ(itp->second, up);
      // part diameter: within one cell of G_{i-1}
      for (const auto& q : pts)
        if (part_of(q, s, g) == key) EXPECT_LE(dist_pow(p, q, 2.0), 2.0 * g.side(key->level - 1) * g.side(key->level - 1));
    }
  }
}

TEST(Partition, DumpFormat) {
  const Grid g(8, 1, {0});
  const std::vector<Point> pts = {Point({1}), Point({2}), Point({8})};
  const std::vector<double> T = {1, 3, 3, 3, 3};
  const auto s = mark_cells(exact_estimates(pts, g), T, g);
  // Zero shift: level-0 cells of side 8 split {1,2} from {8}; the root is
  // heavy, both level-0 cells are crucial (2 and 1 points are below 3).
  EXPECT_EQ(s.dump(g), "-1 0 H 0\n0 0 C 0\n0 1 C 0\n");
}

// Heavy-cell count bound with exact counts and o <= OPT for a tight cluster.
TEST(Partition, HeavyCountBoundTightCluster) {
  Rng rng(5);
  ParamsInput in;
  in.k = 1;
  in.r = 2;
  in.delta = 8;
  in.d = 2;
  in.eps = in.eta = 0.25;
  const Params params = Params::derive(in);
  for (int it = 0; it < 10; ++it) {
    std::vector<Point> pts;
    const std::int64_t cx = uniform_int(rng, 2, 7), cy = uniform_int(rng, 2, 7);
    for (std::uint64_t i = 0; i < 16; ++i)
      pts.emplace_back(std::vector<std::int64_t>{cx + uniform_int(rng, -1, 1), cy + uniform_int(rng, -1, 1)}, i);
    const double opt = brute_opt(pts, 1, 2.0, 8, 2).value;
    ASSERT_GT(opt, 0);
    const Grid g = Grid::random(8, 2, rng());
    for (double o = 1; o <= opt; o *= 2) {
      const auto sched = params.schedule(o);
      const auto s = mark_cells(exact_estimates(pts, g), sched.T, g);
      EXPECT_LE(static_cast<double>(s.total_heavy()), 2000.0 * (1 + params.d_pow()) * params.L() * opt / o);
    }
  }
}
