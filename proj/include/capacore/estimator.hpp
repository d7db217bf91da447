#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "capacore/error.hpp"
#include "capacore/geometry.hpp"
#include "capacore/hashing.hpp"
#include "capacore/params.hpp"
#include "capacore/partition.hpp"
#include "capacore/random.hpp"

namespace capacore {

// Hash roles: h_i (cell counts), h'_i (part sizes), hat-h_i (coreset sample).
enum class HashRole : std::uint64_t { Cell = 1, Part = 2, Sample = 3 };

inline constexpr std::uint64_t kShiftFamily = 0x5348;

// Polynomials per (role, level), drawn once per master seed and shared by every
// guess o; only the acceptance threshold depends on o.
class PolynomialPool {
 public:
  PolynomialPool(const Params& params, std::uint64_t master) : master_(master), L_(params.L()) {
    for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample}) {
      const int lambda = role == HashRole::Sample ? params.hash_independence() : params.estimate_independence();
      auto& v = polys_[role];
      for (int i = -1; i <= L_; ++i) {
        const std::uint64_t seed = derive_seed(master, static_cast<std::uint64_t>(role), static_cast<std::uint64_t>(i + 1));
        v.push_back(std::make_shared<const PolynomialHash>(seed, lambda));
      }
    }
  }

  const std::shared_ptr<const PolynomialHash>& get(HashRole role, int level) const {
    return polys_.at(role)[static_cast<std::size_t>(level + 1)];
  }
  std::uint64_t master() const { return master_; }
  int L() const { return L_; }

 private:
  std::uint64_t master_;
  int L_;
  std::map<HashRole, std::vector<std::shared_ptr<const PolynomialHash>>> polys_;
};

// Per-level rates for one guess o. With exact counts, psi and psi' are 1.
struct SamplingRates {
  std::vector<double> psi, psi_prime, phi;  // index level + 1

  static SamplingRates from(const LevelSchedule& s, bool exact_counts) {
    SamplingRates r;
    for (int i = -1; i <= s.L; ++i) {
      r.psi.push_back(exact_counts ? 1.0 : s.at(s.psi, i));
      r.psi_prime.push_back(exact_counts ? 1.0 : s.at(s.psi_prime, i));
      r.phi.push_back(s.at(s.phi, i));
    }
    return r;
  }

  double rate(HashRole role, int level) const {
    const auto idx = static_cast<std::size_t>(level + 1);
    switch (role) {
      case HashRole::Cell:
        return psi[idx];
      case HashRole::Part:
        return psi_prime[idx];
      case HashRole::Sample:
        return phi[idx];
    }
    return 1.0;
  }
};

// The materialized hash functions of one guess o.
class LevelHashes {
 public:
  LevelHashes(const PolynomialPool& pool, const SamplingRates& rates, const PointEncoder& encoder) : L_(pool.L()) {
    for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample}) {
      auto& v = hashes_[role];
      for (int i = -1; i <= L_; ++i) v.emplace_back(pool.get(role, i), rates.rate(role, i), encoder);
    }
  }

  const KWiseHash& get(HashRole role, int level) const { return hashes_.at(role)[static_cast<std::size_t>(level + 1)]; }
  int L() const { return L_; }

 private:
  int L_;
  std::map<HashRole, std::vector<KWiseHash>> hashes_;
};

using CellCounts = std::map<CellId, std::int64_t>;

// Retained samples of h_i (levels -1..L) and h'_i (levels 0..L), kept as
// signed per-cell counts so that a deletion cancels an insertion.
class SampleBank {
 public:
  SampleBank(SamplingRates rates, int L)
      : rates_(std::move(rates)), L_(L), h_(static_cast<std::size_t>(L + 2)), hp_(static_cast<std::size_t>(L + 2)) {}

  // Fold over a point set with the given hashes.
  static SampleBank from_points(const std::vector<Point>& points, const Grid& grid, const LevelHashes& hashes,
                                const SamplingRates& rates) {
    SampleBank bank(rates, grid.levels());
    for (const auto& p : points) bank.add(p, +1, grid, hashes);
    return bank;
  }

  // Bank over already-recovered per-cell counts (streaming and distributed).
  static SampleBank from_counts(SamplingRates rates, int L, std::vector<CellCounts> h, std::vector<CellCounts> hp) {
    SampleBank bank(std::move(rates), L);
    require(h.size() == static_cast<std::size_t>(L + 2) && hp.size() == static_cast<std::size_t>(L + 2),
            "sample counts must cover levels -1..L");
    bank.h_ = std::move(h);
    bank.hp_ = std::move(hp);
    return bank;
  }

  void add(const Point& p, int sign, const Grid& grid, const LevelHashes& hashes) {
    for (int i = -1; i <= L_; ++i) {
      const bool in_h = hashes.get(HashRole::Cell, i).eval(p);
      const bool in_hp = i >= 0 && hashes.get(HashRole::Part, i).eval(p);
      if (!in_h && !in_hp) continue;
      const CellId c = grid.cell_of(p, i);
      if (in_h) bump(h_[static_cast<std::size_t>(i + 1)], c, sign);
      if (in_hp) bump(hp_[static_cast<std::size_t>(i + 1)], c, sign);
    }
  }

  double estimate_cell(const CellId& c) const {
    require(c.level >= -1 && c.level <= L_, "cell level not covered by the bank");
    const auto& m = h_[static_cast<std::size_t>(c.level + 1)];
    auto it = m.find(c);
    const std::int64_t n = it == m.end() ? 0 : it->second;
    return static_cast<double>(n) / rates_.psi[static_cast<std::size_t>(c.level + 1)];
  }

  // tau(C ∩ Q) for every sampled cell of levels -1..L.
  CellEstimates cell_estimates() const {
    CellEstimates out(static_cast<std::size_t>(L_ + 2));
    for (int i = -1; i <= L_; ++i) {
      const double rate = rates_.psi[static_cast<std::size_t>(i + 1)];
      for (const auto& [c, n] : h_[static_cast<std::size_t>(i + 1)]) out[static_cast<std::size_t>(i + 1)][c] = static_cast<double>(n) / rate;
    }
    return out;
  }

  double estimate_part(const PartitionStructure& s, const Grid& grid, int level, std::size_t index) const {
    require(level >= 0 && level <= L_, "part level out of range");
    require(index < s.parts_at(level), "unknown part index");
    std::int64_t n = 0;
    for (const auto& [c, cnt] : hp_[static_cast<std::size_t>(level + 1)]) {
      auto key = s.part_of_cell(c, grid);
      if (key && key->index == index) n += cnt;
    }
    return static_cast<double>(n) / rates_.psi_prime[static_cast<std::size_t>(level + 1)];
  }

  double estimate_level_union(const PartitionStructure& s, const Grid& grid, int level) const {
    require(level >= 0 && level <= L_, "part level out of range");
    std::int64_t n = 0;
    for (const auto& [c, cnt] : hp_[static_cast<std::size_t>(level + 1)])
      if (s.is_crucial(c, grid)) n += cnt;
    return static_cast<double>(n) / rates_.psi_prime[static_cast<std::size_t>(level + 1)];
  }

  // Every part estimate of a level in one pass, indexed by part index.
  std::vector<double> estimate_parts(const PartitionStructure& s, const Grid& grid, int level) const {
    std::vector<std::int64_t> n(s.parts_at(level), 0);
    for (const auto& [c, cnt] : hp_[static_cast<std::size_t>(level + 1)]) {
      if (auto key = s.part_of_cell(c, grid)) n[key->index] += cnt;
    }
    std::vector<double> out(n.size());
    const double rate = rates_.psi_prime[static_cast<std::size_t>(level + 1)];
    for (std::size_t j = 0; j < n.size(); ++j) out[j] = static_cast<double>(n[j]) / rate;
    return out;
  }

  const CellCounts& cell_counts(int level) const { return h_[static_cast<std::size_t>(level + 1)]; }
  const CellCounts& part_counts(int level) const { return hp_[static_cast<std::size_t>(level + 1)]; }
  const SamplingRates& rates() const { return rates_; }

 private:
  static void bump(CellCounts& m, const CellId& c, int sign) {
    auto [it, fresh] = m.emplace(c, 0);
    it->second += sign;
    if (it->second == 0) m.erase(it);
  }

  SamplingRates rates_;
  int L_;
  std::vector<CellCounts> h_, hp_;
};

}  // namespace capacore
