#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capacore/error.hpp"
#include "capacore/random.hpp"

namespace capacore {

// A point of the integer grid [1, Delta]^d. The optional tag distinguishes
// points that share coordinates (stream identity).
struct Point {
  std::vector<std::int64_t> coords;
  std::optional<std::uint64_t> tag;

  Point() = default;
  explicit Point(std::vector<std::int64_t> c, std::optional<std::uint64_t> t = std::nullopt)
      : coords(std::move(c)), tag(t) {}

  std::size_t dim() const { return coords.size(); }

  // Lexicographic on coordinates, tag as the final key ("alphabetical order").
  friend auto operator<=>(const Point&, const Point&) = default;
  friend bool operator==(const Point&, const Point&) = default;
};

inline std::string to_string(const Point& p) {
  std::string s = "(";
  for (std::size_t j = 0; j < p.coords.size(); ++j) {
    if (j) s += ",";
    s += std::to_string(p.coords[j]);
  }
  s += ")";
  if (p.tag) s += "#" + std::to_string(*p.tag);
  return s;
}

inline std::int64_t squared_distance(const Point& p, const Point& q) {
  require(p.dim() == q.dim(), "dimension mismatch in distance");
  std::int64_t s = 0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const std::int64_t diff = p.coords[j] - q.coords[j];
    s += diff * diff;
  }
  return s;
}

// dist(p, q)^r for the Euclidean base distance, computed from the integer
// squared distance D as D^(r/2).
inline double pow_from_squared(std::int64_t sq, double r) {
  if (r == 2.0) return static_cast<double>(sq);
  if (r == 1.0) return std::sqrt(static_cast<double>(sq));
  if (sq == 0) return 0.0;
  return std::pow(static_cast<double>(sq), r / 2.0);
}

inline double dist_pow(const Point& p, const Point& q, double r) {
  require(r >= 1.0, "r must be >= 1");
  return pow_from_squared(squared_distance(p, q), r);
}

// Index of the nearest center, lowest index on ties.
inline std::size_t nearest_center(const Point& p, std::span<const Point> centers) {
  std::size_t best = 0;
  std::int64_t best_sq = -1;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const std::int64_t sq = squared_distance(p, centers[c]);
    if (best_sq < 0 || sq < best_sq) {
      best_sq = sq;
      best = c;
    }
  }
  return best;
}

struct CellId {
  int level = 0;
  std::vector<std::int64_t> lattice;

  friend auto operator<=>(const CellId&, const CellId&) = default;
  friend bool operator==(const CellId&, const CellId&) = default;
};

inline std::string to_string(const CellId& c) {
  std::string s = std::to_string(c.level);
  for (auto t : c.lattice) s += " " + std::to_string(t);
  return s;
}

struct CellIdHash {
  std::size_t operator()(const CellId& c) const noexcept {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(c.level + 2));
    for (auto t : c.lattice) h = splitmix64(h ^ static_cast<std::uint64_t>(t));
    return static_cast<std::size_t>(h);
  }
};

inline constexpr int kShiftFracBits = 32;
inline constexpr int kMaxLog2Delta = 24;

inline bool is_power_of_two(std::int64_t x) { return x > 0 && (x & (x - 1)) == 0; }

inline int log2_exact(std::int64_t delta) {
  require(is_power_of_two(delta), "Delta must be a power of two");
  int l = 0;
  while ((std::int64_t{1} << l) < delta) ++l;
  return l;
}

inline std::int64_t next_power_of_two(std::int64_t x) {
  std::int64_t p = 1;
  while (p < x) p <<= 1;
  return p;
}

// Randomly shifted hierarchical grid over [1, Delta]^d. Level i has cell side
// g_i = Delta / 2^i for i in [-1, L]. Shift entries are dyadic rationals with
// 32 fractional bits, stored as integer numerators.
//
// Levels 0..L are anchored at the shift. Cells of G_{-1} (side 2 Delta) are
// anchored at shift or shift - Delta per axis, whichever makes one cell hold
// all of [1, Delta]^d; both choices refine to the same G_0.
class Grid {
 public:
  Grid(std::int64_t delta, int d, std::vector<std::int64_t> shift_fp)
      : delta_(delta), L_(log2_exact(delta)), d_(d), shift_fp_(std::move(shift_fp)) {
    require(L_ >= 1 && L_ <= kMaxLog2Delta, "Delta must be in [2, 2^24]");
    require(d_ >= 1, "dimension must be >= 1");
    require(static_cast<int>(shift_fp_.size()) == d_, "shift has wrong dimension");
    const std::int64_t one = std::int64_t{1} << kShiftFracBits;
    root_parity_.resize(d_);
    for (int j = 0; j < d_; ++j) {
      require(shift_fp_[j] >= 0 && shift_fp_[j] < delta_ * one, "shift entry outside [0, Delta)");
      root_parity_[j] = shift_fp_[j] < one ? 0 : 1;
    }
  }

  static Grid random(std::int64_t delta, int d, std::uint64_t seed) {
    return Grid(delta, d, sample_shift(seed, delta, d));
  }

  // Uniform on [0, Delta) with 32 fractional bits; deterministic in seed.
  static std::vector<std::int64_t> sample_shift(std::uint64_t seed, std::int64_t delta, int d) {
    const int l = log2_exact(delta);
    const int bits = l + kShiftFracBits;
    Rng rng(seed);
    std::vector<std::int64_t> s(d);
    for (auto& v : s) v = static_cast<std::int64_t>(rng() >> (64 - bits));
    return s;
  }

  std::int64_t delta() const { return delta_; }
  int levels() const { return L_; }  // L
  int dim() const { return d_; }
  const std::vector<std::int64_t>& shift_fp() const { return shift_fp_; }
  double shift(int j) const { return std::ldexp(static_cast<double>(shift_fp_[j]), -kShiftFracBits); }

  // Side length g_i.
  double side(int level) const { return std::ldexp(static_cast<double>(delta_), -level); }

  void check_point(const Point& p) const {
    require(static_cast<int>(p.dim()) == d_, "point has wrong dimension");
    for (auto x : p.coords) require(x >= 1 && x <= delta_, "coordinate outside [1, Delta]");
  }

  CellId cell_of(const Point& p, int level) const {
    require(level >= -1 && level <= L_, "level out of range");
    require(static_cast<int>(p.dim()) == d_, "point has wrong dimension");
    CellId c{level, std::vector<std::int64_t>(d_)};
    for (int j = 0; j < d_; ++j) {
      std::int64_t num = (p.coords[j] << kShiftFracBits) - shift_fp_[j];
      if (level == -1) num += static_cast<std::int64_t>(root_parity_[j]) * (delta_ << kShiftFracBits);
      c.lattice[j] = num >> (L_ - level + kShiftFracBits);  // arithmetic shift == floor
    }
    return c;
  }

  CellId parent(const CellId& c) const {
    require(c.level >= 0 && c.level <= L_, "cell has no parent");
    CellId p{c.level - 1, c.lattice};
    for (int j = 0; j < d_; ++j) {
      const std::int64_t t = c.level == 0 ? c.lattice[j] + root_parity_[j] : c.lattice[j];
      p.lattice[j] = t >> 1;
    }
    return p;
  }

  // Lower corner of a cell along axis j, in units of 2^-32.
  std::int64_t corner_fp(const CellId& c, int j) const {
    const std::int64_t g = side_fp(c.level);
    std::int64_t anchor = shift_fp_[j];
    if (c.level == -1) anchor -= static_cast<std::int64_t>(root_parity_[j]) * (delta_ << kShiftFracBits);
    return anchor + c.lattice[j] * g;
  }

  std::int64_t side_fp(int level) const { return std::int64_t{1} << (L_ - level + kShiftFracBits); }

  // Geometric containment of inner in outer, checked on corners.
  bool contains(const CellId& outer, const CellId& inner) const {
    for (int j = 0; j < d_; ++j) {
      const std::int64_t lo_o = corner_fp(outer, j), hi_o = lo_o + side_fp(outer.level);
      const std::int64_t lo_i = corner_fp(inner, j), hi_i = lo_i + side_fp(inner.level);
      if (lo_i < lo_o || hi_i > hi_o) return false;
    }
    return true;
  }

  bool contains(const CellId& cell, const Point& p) const {
    for (int j = 0; j < d_; ++j) {
      const std::int64_t x = p.coords[j] << kShiftFracBits;
      const std::int64_t lo = corner_fp(cell, j);
      if (x < lo || x >= lo + side_fp(cell.level)) return false;
    }
    return true;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.delta_ == b.delta_ && a.d_ == b.d_ && a.shift_fp_ == b.shift_fp_;
  }

 private:
  std::int64_t delta_;
  int L_;
  int d_;
  std::vector<std::int64_t> shift_fp_;
  std::vector<int> root_parity_;
};

}  // namespace capacore
