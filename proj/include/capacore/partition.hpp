#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "capacore/error.hpp"
#include "capacore/geometry.hpp"

namespace capacore {

// Part Q_{i,j}: the crucial cells of level i below the j-th (0-based,
// lexicographic) heavy cell of level i-1.
struct PartKey {
  int level = 0;
  std::size_t index = 0;

  friend auto operator<=>(const PartKey&, const PartKey&) = default;
  friend bool operator==(const PartKey&, const PartKey&) = default;
};

// Per-level cell estimates tau(C ∩ Q), index level + 1 (levels -1..L).
using CellEstimates = std::vector<std::map<CellId, double>>;

class PartitionStructure {
 public:
  PartitionStructure() = default;
  explicit PartitionStructure(int L) : L_(L), heavy_(static_cast<std::size_t>(L + 1)), crucial_(static_cast<std::size_t>(L + 2)) {}

  int L() const { return L_; }

  bool is_heavy(const CellId& c) const {
    if (c.level < -1 || c.level > L_ - 1) return false;
    return heavy_[static_cast<std::size_t>(c.level + 1)].count(c) > 0;
  }

  // A cell of level 0..L is crucial iff its parent is heavy and it is not.
  bool is_crucial(const CellId& c, const Grid& grid) const {
    if (c.level < 0 || c.level > L_) return false;
    return !is_heavy(c) && is_heavy(grid.parent(c));
  }

  // Heavy cells of level (-1..L-1) in lexicographic lattice order.
  const std::map<CellId, std::size_t>& heavy(int level) const { return heavy_[static_cast<std::size_t>(level + 1)]; }

  std::optional<std::size_t> heavy_index(const CellId& c) const {
    if (c.level < -1 || c.level > L_ - 1) return std::nullopt;
    const auto& m = heavy(c.level);
    auto it = m.find(c);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  // s_i: number of heavy cells in G_{i-1}, for i in 0..L.
  std::size_t parts_at(int level) const { return heavy(level - 1).size(); }

  std::size_t total_heavy() const {
    std::size_t s = 0;
    for (const auto& m : heavy_) s += m.size();
    return s;
  }

  // Crucial cells that were materialized from the estimates (levels 0..L).
  const std::set<CellId>& crucial(int level) const { return crucial_[static_cast<std::size_t>(level + 1)]; }

  // Part of a crucial cell: its level and the index of its heavy parent.
  std::optional<PartKey> part_of_cell(const CellId& c, const Grid& grid) const {
    if (!is_crucial(c, grid)) return std::nullopt;
    return PartKey{c.level, *heavy_index(grid.parent(c))};
  }

  // One line per marked cell: "level lattice... H|C index". For heavy cells the
  // index is the cell's own heavy index; for crucial cells it is the part index.
  std::string dump(const Grid& grid) const {
    std::ostringstream os;
    for (int i = -1; i <= L_; ++i) {
      if (i <= L_ - 1)
        for (const auto& [c, j] : heavy(i)) os << to_string(c) << " H " << j << "\n";
      if (i >= 0)
        for (const auto& c : crucial(i)) os << to_string(c) << " C " << part_of_cell(c, grid)->index << "\n";
    }
    return os.str();
  }

  void add_heavy(const CellId& c) {
    auto& m = heavy_[static_cast<std::size_t>(c.level + 1)];
    m.emplace(c, 0);
  }
  void add_crucial(const CellId& c) { crucial_[static_cast<std::size_t>(c.level + 1)].insert(c); }

  // Renumbers heavy cells of every level in lexicographic order.
  void reindex() {
    for (auto& m : heavy_) {
      std::size_t j = 0;
      for (auto& [c, idx] : m) idx = j++;
    }
  }

  friend bool operator==(const PartitionStructure& a, const PartitionStructure& b) {
    return a.L_ == b.L_ && a.heavy_ == b.heavy_ && a.crucial_ == b.crucial_;
  }

 private:
  int L_ = 0;
  std::vector<std::map<CellId, std::size_t>> heavy_;  // levels -1..L-1
  std::vector<std::set<CellId>> crucial_;             // levels -1..L (slot for -1 stays empty)
};

// Marks heavy and crucial cells top-down from level -1. `thresholds` holds
// T_i(o) for levels -1..L (index level + 1). Cells absent from `estimates`
// count as empty and are never materialized.
inline PartitionStructure mark_cells(const CellEstimates& estimates, const std::vector<double>& thresholds,
                                     const Grid& grid) {
  const int L = grid.levels();
  require(estimates.size() >= static_cast<std::size_t>(L + 1), "estimates must cover levels -1..L-1");
  require(thresholds.size() >= static_cast<std::size_t>(L + 1), "thresholds must cover levels -1..L-1");
  PartitionStructure s(L);
  for (int i = -1; i <= L - 1; ++i) {
    const double T = thresholds[static_cast<std::size_t>(i + 1)];
    for (const auto& [c, tau] : estimates[static_cast<std::size_t>(i + 1)]) {
      require(c.level == i, "cell estimate filed under the wrong level");
      const bool ancestors_heavy = i == -1 || s.is_heavy(grid.parent(c));
      if (!ancestors_heavy) continue;
      if (tau >= T) {
        s.add_heavy(c);
      } else if (i >= 0) {
        s.add_crucial(c);
      }
    }
  }
  if (estimates.size() > static_cast<std::size_t>(L + 1)) {
    for (const auto& [c, tau] : estimates[static_cast<std::size_t>(L + 1)]) {
      if (s.is_heavy(grid.parent(c))) s.add_crucial(c);
    }
  }
  s.reindex();
  return s;
}

// Part of a point: the unique crucial cell on its root-to-leaf cell path.
inline std::optional<PartKey> part_of(const Point& p, const PartitionStructure& s, const Grid& grid) {
  CellId prev = grid.cell_of(p, -1);
  if (!s.is_heavy(prev)) return std::nullopt;
  for (int i = 0; i <= grid.levels(); ++i) {
    CellId c = grid.cell_of(p, i);
    if (i == grid.levels() || !s.is_heavy(c)) return PartKey{i, *s.heavy_index(prev)};
    prev = std::move(c);
  }
  return std::nullopt;
}

}  // namespace capacore
