#include <gtest/gtest.h>

#include <cmath>

#include "capacore/geometry.hpp"
#include "capacore/random.hpp"

using namespace capacore;

namespace {

Point P(std::int64_t x, std::int64_t y) { return Point({x, y}); }

Point random_point(Rng& rng, std::int64_t delta, int d) {
  std::vector<std::int64_t> c(static_cast<std::size_t>(d));
  for (auto& x : c) x = uniform_int(rng, 1, delta);
  return Point(std::move(c));
}

}  // namespace

TEST(DistPow, PythagoreanTriple) {
  EXPECT_EQ(dist_pow(P(1, 1), P(4, 5), 2.0), 25.0);
  EXPECT_EQ(dist_pow(P(1, 1), P(4, 5), 1.0), 5.0);
  EXPECT_EQ(dist_pow(P(1, 1), P(1, 1), 7.0), 0.0);
}

TEST(DistPow, DimensionMismatchIsUsageError) {
  EXPECT_THROW(dist_pow(P(1, 1), Point({1, 1, 1}), 2.0), UsageError);
}

TEST(DistPow, AgreesWithDirectPowerForRealR) {
  Rng rng(5);
  for (int it = 0; it < 500; ++it) {
    const Point a = random_point(rng, 64, 3), b = random_point(rng, 64, 3);
    const double r = 1.0 + 3.0 * uniform01(rng);
    double s = 0;
    for (int j = 0; j < 3; ++j) s += std::pow(static_cast<double>(a.coords[j] - b.coords[j]), 2.0);
    EXPECT_NEAR(dist_pow(a, b, r), std::pow(std::sqrt(s), r), 1e-9 * (1 + std::pow(std::sqrt(s), r)));
  }
}

TEST(DistPow, RelaxedTriangle) {
  Rng rng(6);
  for (int it = 0; it < 2000; ++it) {
    const Point x = random_point(rng, 32, 2), y = random_point(rng, 32, 2), z = random_point(rng, 32, 2);
    const double r = 1.0 + 4.0 * uniform01(rng);
    EXPECT_LE(dist_pow(x, z, r), std::pow(2.0, r - 1) * (dist_pow(x, y, r) + dist_pow(y, z, r)) * (1 + 1e-12));
  }
}

TEST(PointOrder, TagIsFinalKey) {
  const Point a({1, 2}, 5), b({1, 2}, 7), c({1, 3});
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
  EXPECT_NE(a, b);
  EXPECT_LT(Point({1, 2}), a);  // untagged sorts first
}

TEST(Grid, CellOfZeroShift) {
  const Grid g(8, 2, {0, 0});
  EXPECT_EQ(g.cell_of(P(3, 7), 0).lattice, (std::vector<std::int64_t>{0, 0}));
  EXPECT_EQ(g.cell_of(P(3, 7), 2).lattice, (std::vector<std::int64_t>{1, 3}));
  EXPECT_EQ(g.cell_of(P(3, 7), 3).lattice, (std::vector<std::int64_t>{3, 7}));
}

TEST(Grid, CellOfMatchesFloorOracle) {
  Rng rng(7);
  for (int it = 0; it < 50; ++it) {
    const Grid g = Grid::random(16, 2, rng());
    for (int k = 0; k < 50; ++k) {
      const Point p = random_point(rng, 16, 2);
      for (int level = 0; level <= g.levels(); ++level) {
        const CellId c = g.cell_of(p, level);
        for (int j = 0; j < 2; ++j) {
          const long double x = static_cast<long double>(p.coords[j]) - std::ldexp(static_cast<long double>(g.shift_fp()[j]), -32);
          EXPECT_EQ(c.lattice[j], static_cast<std::int64_t>(std::floor(x / g.side(level))));
        }
      }
    }
  }
}

TEST(Grid, SingleRootCellCoversDomain) {
  Rng rng(8);
  for (int it = 0; it < 30; ++it) {
    const std::int64_t delta = std::int64_t{1} << uniform_int(rng, 1, 5);
    const Grid g = Grid::random(delta, 2, rng());
    const CellId root = g.cell_of(P(1, 1), -1);
    for (std::int64_t x = 1; x <= delta; ++x)
      for (std::int64_t y = 1; y <= delta; ++y) {
        EXPECT_EQ(g.cell_of(P(x, y), -1), root);
        EXPECT_TRUE(g.contains(root, P(x, y)));
      }
  }
}

TEST(Grid, ContainmentChainAndParent) {
  Rng rng(9);
  for (int it = 0; it < 40; ++it) {
    const Grid g = Grid::random(32, 3, rng());
    const Point p = random_point(rng, 32, 3);
    for (int level = 0; level <= g.levels(); ++level) {
      const CellId c = g.cell_of(p, level), up = g.cell_of(p, level - 1);
      EXPECT_TRUE(g.contains(c, p));
      EXPECT_TRUE(g.contains(up, c));
      EXPECT_EQ(g.parent(c), up);
    }
  }
}

TEST(Grid, SameCellDiameterBound) {
  Rng rng(10);
  const Grid g = Grid::random(16, 2, 99);
  for (int it = 0; it < 3000; ++it) {
    const Point a = random_point(rng, 16, 2), b = random_point(rng, 16, 2);
    const double r = 1.0 + 2.0 * uniform01(rng);
    for (int level = -1; level <= g.levels(); ++level) {
      if (g.cell_of(a, level) != g.cell_of(b, level)) continue;
      EXPECT_LE(dist_pow(a, b, r), std::pow(std::sqrt(2.0) * g.side(level), r) * (1 + 1e-12));
    }
  }
}

TEST(Grid, ShiftDeterministicAndInRange) {
  EXPECT_EQ(Grid::sample_shift(3, 8, 2), Grid::sample_shift(3, 8, 2));
  const std::int64_t one = std::int64_t{1} << kShiftFracBits;
  for (std::uint64_t s = 0; s < 200; ++s)
    for (auto v : Grid::sample_shift(s, 8, 2)) {
      EXPECT_GE(v, 0);
      EXPECT_LT(v, 8 * one);
    }
}

TEST(Grid, ShiftMeanIsHalfDelta) {
  const int n = 10000;
  const double delta = 8;
  double sum = 0;
  for (int s = 0; s < n; ++s) sum += std::ldexp(static_cast<double>(Grid::sample_shift(static_cast<std::uint64_t>(s), 8, 1)[0]), -32);
  const double stderr_ = delta / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(sum / n, delta / 2, 5 * stderr_);
}

TEST(Grid, RejectsBadInput) {
  EXPECT_THROW(Grid(6, 2, {0, 0}), UsageError);
  const Grid g(8, 2, {0, 0});
  EXPECT_THROW(g.check_point(P(0, 3)), UsageError);
  EXPECT_THROW(g.check_point(P(9, 3)), UsageError);
  EXPECT_THROW(g.cell_of(P(1, 1), 4), UsageError);
}

TEST(NearestCenter, LowestIndexOnTies) {
  const std::vector<Point> z = {P(1, 1), P(3, 3), P(1, 1)};
  EXPECT_EQ(nearest_center(P(2, 2), z), 0u);
  EXPECT_EQ(nearest_center(P(3, 4), z), 1u);
}
