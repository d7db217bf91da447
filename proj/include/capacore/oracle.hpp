#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "capacore/assignment.hpp"
#include "capacore/error.hpp"
#include "capacore/geometry.hpp"

namespace capacore {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

inline bool all_unit(std::span<const double> w) {
  return std::all_of(w.begin(), w.end(), [](double x) { return x == 1.0; });
}

// Nearest-center sum, the t = infinity cost.
inline double uncapacitated_cost(std::span<const Point> Q, std::span<const double> w, std::span<const Point> Z, double r) {
  long double s = 0;
  for (std::size_t p = 0; p < Q.size(); ++p) s += w[p] * dist_pow(Q[p], Z[nearest_center(Q[p], Z)], r);
  return static_cast<double>(s);
}

// cost_t(Q, Z, w): exact for unit weights (capacity floor(t), integral flow),
// the fractional transportation optimum otherwise. Infinity when infeasible.
inline double exact_cost(std::span<const Point> Q, std::span<const double> w, std::span<const Point> Z, double t, double r) {
  require(Q.size() == w.size(), "points and weights differ in length");
  require(!Z.empty(), "need at least one center");
  if (Q.empty()) return 0.0;
  if (std::isinf(t)) return uncapacitated_cost(Q, w, Z, r);
  const double cap = all_unit(w) ? std::floor(t + 1e-9) : t;
  auto fa = fractional_assign(Q, w, Z, cap, r);
  if (!fa) return kInfiniteCost;
  if (all_unit(w)) {
    // the unit-weight optimum is integral; read it back as a partition
    std::vector<std::size_t> map(Q.size());
    for (std::size_t p = 0; p < Q.size(); ++p) {
      if (fa->shares[p].size() != 1 || fa->shares[p][0].second != scale_weight(1.0))
        throw std::logic_error("unit-weight flow is not integral");
      map[p] = fa->shares[p][0].first;
    }
    return make_assignment(Q, w, Z, std::move(map), r).cost;
  }
  return fa->cost;
}

inline double exact_cost(std::span<const Point> Q, std::span<const Point> Z, double t, double r) {
  return exact_cost(Q, unit_weights(Q.size()), Z, t, r);
}

inline constexpr std::size_t kBrutePartitionMaxPoints = 10;

// Minimum over all labelings with per-center weight at most t.
inline double brute_partitions(std::span<const Point> Q, std::span<const double> w, std::span<const Point> Z, double t,
                               double r) {
  require(Q.size() <= kBrutePartitionMaxPoints, "brute_partitions handles at most 10 points");
  require(Q.size() == w.size(), "points and weights differ in length");
  const std::size_t n = Q.size(), k = Z.size();
  require(k >= 1, "need at least one center");
  std::vector<double> c(n * k);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t z = 0; z < k; ++z) c[p * k + z] = w[p] * dist_pow(Q[p], Z[z], r);
  double best = kInfiniteCost;
  std::vector<double> load(k, 0.0);
  const double slack = 1e-9 * std::max(1.0, std::isfinite(t) ? t : 1.0);
  auto rec = [&](auto&& self, std::size_t p, long double acc) -> void {
    if (acc >= best) return;
    if (p == n) {
      best = static_cast<double>(acc);
      return;
    }
    for (std::size_t z = 0; z < k; ++z) {
      if (load[z] + w[p] > t + slack) continue;
      load[z] += w[p];
      self(self, p + 1, acc + c[p * k + z]);
      load[z] -= w[p];
    }
  };
  rec(rec, 0, 0.0L);
  return best;
}

inline double brute_partitions(std::span<const Point> Q, std::span<const Point> Z, double t, double r) {
  return brute_partitions(Q, unit_weights(Q.size()), Z, t, r);
}

struct OptResult {
  double value = 0;
  std::vector<Point> centers;
};

inline constexpr double kBruteOptWorkCap = 2e9;

// Exact uncapacitated optimum over center sets of size <= k drawn from [Delta]^d.
inline OptResult brute_opt(std::span<const Point> Q, int k, double r, std::int64_t delta, int d) {
  require(k >= 1, "k must be >= 1");
  std::map<std::vector<std::int64_t>, std::int64_t> mult;
  for (const auto& p : Q) ++mult[p.coords];
  OptResult res;
  if (mult.empty()) return res;
  if (static_cast<std::size_t>(k) >= mult.size()) {
    for (const auto& [c, m] : mult) res.centers.emplace_back(c);
    return res;
  }
  long double cells = 1;
  for (int j = 0; j < d; ++j) cells *= static_cast<long double>(delta);
  long double combos = 1;
  for (int i = 0; i < k; ++i) combos = combos * (cells - i) / (i + 1);
  if (combos * static_cast<long double>(mult.size()) > kBruteOptWorkCap)
    throw OracleCapError("brute_opt would evaluate " + std::to_string(static_cast<double>(combos)) +
                         " center sets; cap is " + std::to_string(kBruteOptWorkCap / static_cast<double>(mult.size())));
  const std::size_t G = static_cast<std::size_t>(cells), M = mult.size();
  std::vector<Point> grid_pts;
  grid_pts.reserve(G);
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(d));
    std::size_t x = g;
    for (int j = 0; j < d; ++j) {
      c[j] = static_cast<std::int64_t>(x % static_cast<std::size_t>(delta)) + 1;
      x /= static_cast<std::size_t>(delta);
    }
    grid_pts.emplace_back(std::move(c));
  }
  std::vector<Point> pts;
  std::vector<double> m;
  for (const auto& [c, cnt] : mult) {
    pts.emplace_back(c);
    m.push_back(static_cast<double>(cnt));
  }
  std::vector<double> D(M * G);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t g = 0; g < G; ++g) D[i * G + g] = m[i] * dist_pow(pts[i], grid_pts[g], r);

  double best = kInfiniteCost;
  std::vector<std::size_t> choice(static_cast<std::size_t>(k)), best_choice;
  // depth-first over increasing index tuples, carrying the running minimum
  std::vector<std::vector<double>> mins(static_cast<std::size_t>(k + 1), std::vector<double>(M, kInfiniteCost));
  auto rec = [&](auto&& self, int depth, std::size_t start) -> void {
    if (depth == k) {
      long double s = 0;
      for (std::size_t i = 0; i < M; ++i) s += mins[static_cast<std::size_t>(k)][i];
      if (s < best) {
        best = static_cast<double>(s);
        best_choice = choice;
      }
      return;
    }
    for (std::size_t g = start; g + static_cast<std::size_t>(k - depth) <= G; ++g) {
      choice[static_cast<std::size_t>(depth)] = g;
      auto& next = mins[static_cast<std::size_t>(depth + 1)];
      const auto& prev = mins[static_cast<std::size_t>(depth)];
      for (std::size_t i = 0; i < M; ++i) next[i] = std::min(prev[i], D[i * G + g]);
      self(self, depth + 1, g + 1);
    }
  };
  rec(rec, 0, 0);
  res.value = best;
  for (auto g : best_choice) res.centers.push_back(grid_pts[g]);
  return res;
}

// ---------------------------------------------------------------------------
// Sandwich audit: both capacity-relaxed inequalities per (Z, t).

enum class SandwichForm { Symmetric, TwoTier };

struct SandwichRow {
  std::size_t z_id = 0;
  double t = 0;
  SandwichForm form = SandwichForm::Symmetric;
  double cost_q = 0;               // left-hand side built from Q
  double cost_coreset_relaxed = 0;  // matching coreset value
  double ratio = 0;
  bool violated = false;
};

struct SandwichReport {
  std::vector<SandwichRow> rows;
  std::size_t pairs = 0;
  std::size_t violated_symmetric = 0;
  std::size_t violated_two_tier = 0;
  double worst_ratio_symmetric = 0;
  double worst_ratio_two_tier = 0;

  bool holds(SandwichForm f) const {
    return f == SandwichForm::Symmetric ? violated_symmetric == 0 : violated_two_tier == 0;
  }
};

namespace detail {

// a <= b with infinities; the ratio a/b is reported (0/0 = 1).
inline bool leq(double a, double b) {
  if (std::isinf(b)) return true;
  if (std::isinf(a)) return false;
  return a <= b * (1 + 1e-12) + 1e-12;
}

inline double ratio(double a, double b) {
  if (a == 0 && b == 0) return 1.0;
  if (std::isinf(a) && std::isinf(b)) return 1.0;
  if (b == 0 || std::isinf(a)) return kInfiniteCost;
  if (std::isinf(b)) return 0.0;
  return a / b;
}

}  // namespace detail

// Per center set Z and capacity t, evaluates
//   symmetric: cost_{(1+eta)t}(Q,Z) <= (1+eps) cost_t(Q',Z,w')  and
//              cost_{(1+eta)t}(Q',Z,w') <= (1+eps) cost_t(Q,Z)
//   two-tier:  cost_{(1+eta)^2 t}(Q,Z) <= (1+eps) cost_{(1+eta)t}(Q',Z,w') and
//              cost_{(1+eta)t}(Q',Z,w') <= (1+eps) cost_t(Q,Z)
inline SandwichReport sandwich_audit(std::span<const Point> Q, std::span<const Point> coreset_pts,
                                     std::span<const double> coreset_w, const std::vector<std::vector<Point>>& centers,
                                     const std::vector<double>& t_grid, double eps, double eta, double r,
                                     bool keep_rows = true) {
  SandwichReport rep;
  const auto unit = unit_weights(Q.size());
  for (std::size_t zi = 0; zi < centers.size(); ++zi) {
    const auto& Z = centers[zi];
    std::map<double, double> cq, cc;
    auto cost_q = [&](double t) {
      auto it = cq.find(t);
      if (it != cq.end()) return it->second;
      return cq[t] = exact_cost(Q, unit, Z, t, r);
    };
    auto cost_c = [&](double t) {
      auto it = cc.find(t);
      if (it != cc.end()) return it->second;
      return cc[t] = exact_cost(coreset_pts, coreset_w, Z, t, r);
    };
    for (double t : t_grid) {
      ++rep.pairs;
      const double q_t = cost_q(t), q_t1 = cost_q((1 + eta) * t), q_t2 = cost_q((1 + eta) * (1 + eta) * t);
      const double c_t = cost_c(t), c_t1 = cost_c((1 + eta) * t);
      // shared upper inequality
      const bool up = detail::leq(c_t1, (1 + eps) * q_t);
      const double up_ratio = detail::ratio(c_t1, q_t);
      const bool low_sym = detail::leq(q_t1, (1 + eps) * c_t);
      const bool low_two = detail::leq(q_t2, (1 + eps) * c_t1);
      const bool v_sym = !(up && low_sym), v_two = !(up && low_two);
      const double r_sym = std::max(up_ratio, detail::ratio(q_t1, c_t));
      const double r_two = std::max(up_ratio, detail::ratio(q_t2, c_t1));
      rep.violated_symmetric += v_sym;
      rep.violated_two_tier += v_two;
      rep.worst_ratio_symmetric = std::max(rep.worst_ratio_symmetric, r_sym);
      rep.worst_ratio_two_tier = std::max(rep.worst_ratio_two_tier, r_two);
      if (keep_rows) {
        rep.rows.push_back({zi, t, SandwichForm::Symmetric, q_t1, c_t, r_sym, v_sym});
        rep.rows.push_back({zi, t, SandwichForm::TwoTier, q_t2, c_t1, r_two, v_two});
      }
    }
  }
  return rep;
}

inline void write_audit_csv(std::ostream& os, const SandwichReport& rep) {
  os << "Z-id,t,cost_Q,cost_coreset_relaxed,ratio,violated,form\n";
  for (const auto& row : rep.rows)
    os << row.z_id << "," << render_double(row.t) << "," << render_double(row.cost_q) << ","
       << render_double(row.cost_coreset_relaxed) << "," << render_double(row.ratio) << "," << (row.violated ? 1 : 0)
       << "," << (row.form == SandwichForm::Symmetric ? "symmetric" : "two-tier") << "\n";
}

// Integral t values for which the unit instance is feasible: ceil(n/k)..n.
inline std::vector<double> feasible_t_grid(std::size_t n, std::size_t k) {
  std::vector<double> g;
  for (std::size_t t = (n + k - 1) / k; t <= n; ++t) g.push_back(static_cast<double>(t));
  return g;
}

// Random center sets of k distinct grid points.
inline std::vector<std::vector<Point>> sample_center_sets(std::size_t count, int k, std::int64_t delta, int d, Rng& rng) {
  std::vector<std::vector<Point>> out;
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<Point> Z;
    while (static_cast<int>(Z.size()) < k) {
      std::vector<std::int64_t> c(static_cast<std::size_t>(d));
      for (auto& x : c) x = uniform_int(rng, 1, delta);
      Point p(std::move(c));
      if (std::find(Z.begin(), Z.end(), p) == Z.end()) Z.push_back(std::move(p));
    }
    out.push_back(std::move(Z));
  }
  return out;
}

}  // namespace capacore
