#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "capacore/coreset.hpp"
#include "capacore/error.hpp"
#include "capacore/flow.hpp"
#include "capacore/geometry.hpp"
#include "capacore/partition.hpp"

namespace capacore {

inline constexpr int kWeightScaleBits = 20;
inline constexpr int kMinCostScaleBits = 20;
inline constexpr double kInfiniteCapacity = std::numeric_limits<double>::infinity();

// Integral assignment: each point to one center.
struct Assignment {
  std::vector<std::size_t> map;
  double cost = 0;
  std::vector<double> sizes;
};

inline Assignment make_assignment(std::span<const Point> points, std::span<const double> weights,
                                  std::span<const Point> centers, std::vector<std::size_t> map, double r) {
  require(points.size() == weights.size() && points.size() == map.size(), "assignment size mismatch");
  Assignment a;
  a.sizes.assign(centers.size(), 0.0);
  long double cost = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    require(map[p] < centers.size(), "center index out of range");
    cost += static_cast<long double>(weights[p]) * dist_pow(points[p], centers[map[p]], r);
    a.sizes[map[p]] += weights[p];
  }
  a.cost = static_cast<double>(cost);
  a.map = std::move(map);
  return a;
}

inline std::vector<double> unit_weights(std::size_t n) { return std::vector<double>(n, 1.0); }

// Transportation plan with amounts in units of 2^-20 weight.
struct FractionalAssignment {
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<Point> centers;
  double r = 2;
  double capacity = kInfiniteCapacity;
  std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> shares;  // per point, sorted by center
  int cost_bits = kMinCostScaleBits;
  double cost = 0;               // true cost of the plan
  double scaled_objective = 0;   // solver objective in true units
  double rounding_slack = 0;     // bound on |cost - scaled_objective|
  std::vector<double> sizes;
  bool certified = false;
  int augmentations = 0;

  static double unit() { return std::ldexp(1.0, -kWeightScaleBits); }

  std::size_t split_points() const {
    std::size_t s = 0;
    for (const auto& sh : shares) s += sh.size() > 1 ? 1 : 0;
    return s;
  }

  void recompute() {
    sizes.assign(centers.size(), 0.0);
    long double c = 0;
    for (std::size_t p = 0; p < points.size(); ++p)
      for (auto [z, amt] : shares[p]) {
        const long double w = std::ldexp(static_cast<long double>(amt), -kWeightScaleBits);
        c += w * dist_pow(points[p], centers[z], r);
        sizes[z] += static_cast<double>(w);
      }
    cost = static_cast<double>(c);
  }
};

inline std::int64_t scale_weight(double w) {
  require(w >= 0.0 && std::isfinite(w), "weights must be finite and nonnegative");
  return std::llround(std::ldexp(w, kWeightScaleBits));
}

// Optimal relaxed assignment under per-center capacity t (nullopt when the
// total weight does not fit).
inline std::optional<FractionalAssignment> fractional_assign(std::span<const Point> points,
                                                              std::span<const double> weights,
                                                              std::span<const Point> centers, double capacity,
                                                              double r) {
  require(points.size() == weights.size(), "points and weights differ in length");
  require(!centers.empty(), "need at least one center");
  require(capacity >= 0.0, "capacity must be nonnegative");
  const std::size_t n = points.size(), k = centers.size();
  FractionalAssignment fa;
  fa.points.assign(points.begin(), points.end());
  fa.weights.assign(weights.begin(), weights.end());
  fa.centers.assign(centers.begin(), centers.end());
  fa.r = r;
  fa.capacity = capacity;
  fa.shares.assign(n, {});

  std::vector<std::int64_t> sw(n);
  std::int64_t total = 0;
  for (std::size_t p = 0; p < n; ++p) {
    sw[p] = scale_weight(weights[p]);
    total += sw[p];
  }
  std::vector<double> unit_cost(n * k);
  double max_cost = 0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t z = 0; z < k; ++z) {
      unit_cost[p * k + z] = dist_pow(points[p], centers[z], r);
      max_cost = std::max(max_cost, unit_cost[p * k + z]);
    }
  int bits = kMinCostScaleBits;
  if (max_cost > 0) bits = std::max(kMinCostScaleBits, static_cast<int>(std::floor(40.0 - std::log2(max_cost))));
  bits = std::min(bits, 52);
  require(max_cost * std::ldexp(1.0, bits) < std::ldexp(1.0, 52), "distances too large for the integer flow costs");
  fa.cost_bits = bits;

  std::int64_t cap = total;
  if (std::isfinite(capacity)) cap = std::min<std::int64_t>(total, static_cast<std::int64_t>(std::floor(std::ldexp(capacity, kWeightScaleBits) + 1e-6)));

  const int src = 0, sink = static_cast<int>(n + k + 1);
  MinCostFlow g(static_cast<int>(n + k + 2));
  std::vector<int> pe(n * k);
  for (std::size_t p = 0; p < n; ++p) g.add_edge(src, static_cast<int>(1 + p), sw[p], 0);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t z = 0; z < k; ++z)
      pe[p * k + z] = g.add_edge(static_cast<int>(1 + p), static_cast<int>(1 + n + z), sw[p],
                                 std::llround(std::ldexp(unit_cost[p * k + z], bits)));
  for (std::size_t z = 0; z < k; ++z) g.add_edge(static_cast<int>(1 + n + z), sink, cap, 0);
  const auto res = g.solve(src, sink);
  if (res.flow < total) return std::nullopt;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t z = 0; z < k; ++z)
      if (const auto f = g.flow(pe[p * k + z]); f > 0) fa.shares[p].push_back({z, f});
  fa.certified = g.certify();
  fa.augmentations = res.augmentations;
  fa.scaled_objective =
      static_cast<double>(static_cast<long double>(res.cost) * std::ldexp(1.0L, -(bits + kWeightScaleBits)));
  fa.rounding_slack = std::ldexp(static_cast<double>(total), -kWeightScaleBits) * std::ldexp(0.5, -bits);
  fa.recompute();
  return fa;
}

struct IntegralizeReport {
  std::size_t cycles_cancelled = 0;
  std::size_t split_points = 0;       // points with more than one share once the support is a forest
  std::vector<double> cost_trace;     // true cost before and after each cancellation
};

namespace detail {

// Finds a cycle in the bipartite support graph; vertices 0..n-1 are points,
// n..n+k-1 centers. Returns the vertex sequence of the cycle.
inline std::optional<std::vector<std::size_t>> support_cycle(const FractionalAssignment& fa) {
  const std::size_t n = fa.points.size(), k = fa.centers.size(), V = n + k;
  std::vector<std::vector<std::size_t>> adj(V);
  for (std::size_t p = 0; p < n; ++p)
    for (auto [z, amt] : fa.shares[p]) {
      adj[p].push_back(n + z);
      adj[n + z].push_back(p);
    }
  std::vector<int> state(V, 0);
  std::vector<std::size_t> parent(V, V), it(V, 0);
  for (std::size_t root = 0; root < V; ++root) {
    if (state[root] || adj[root].empty()) continue;
    std::vector<std::size_t> stack{root};
    state[root] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      if (it[u] == adj[u].size()) {
        state[u] = 2;
        stack.pop_back();
        continue;
      }
      const std::size_t v = adj[u][it[u]++];
      if (v == parent[u]) continue;
      if (state[v] == 1) {
        std::vector<std::size_t> cyc;
        for (std::size_t x = u; x != v; x = parent[x]) cyc.push_back(x);
        cyc.push_back(v);
        std::reverse(cyc.begin(), cyc.end());
        return cyc;
      }
      if (state[v] == 0) {
        state[v] = 1;
        parent[v] = u;
        stack.push_back(v);
      }
    }
  }
  return std::nullopt;
}

inline std::int64_t& share_ref(FractionalAssignment& fa, std::size_t p, std::size_t z) {
  for (auto& [c, amt] : fa.shares[p])
    if (c == z) return amt;
  throw std::logic_error("missing share in support cycle");
}

}  // namespace detail

// Cancels cycles of the support graph (each step never raises the true cost),
// then sends every remaining split point wholly to its nearest center.
inline std::pair<Assignment, IntegralizeReport> integralize(FractionalAssignment fa) {
  const std::size_t n = fa.points.size();
  IntegralizeReport rep;
  rep.cost_trace.push_back(fa.cost);
  while (auto cyc = detail::support_cycle(fa)) {
    const std::size_t m = cyc->size();
    // edges e_q = (v_q, v_{q+1}); alternate -a / +a around the cycle
    long double even = 0, odd = 0;
    std::int64_t min_even = std::numeric_limits<std::int64_t>::max(), min_odd = min_even;
    for (std::size_t q = 0; q < m; ++q) {
      std::size_t a = (*cyc)[q], b = (*cyc)[(q + 1) % m];
      const std::size_t p = a < n ? a : b, z = (a < n ? b : a) - n;
      const long double c = dist_pow(fa.points[p], fa.centers[z], fa.r);
      const std::int64_t amt = detail::share_ref(fa, p, z);
      if (q % 2 == 0) {
        even += c;
        min_even = std::min(min_even, amt);
      } else {
        odd += c;
        min_odd = std::min(min_odd, amt);
      }
    }
    const bool drain_even = odd <= even;
    const std::int64_t delta = drain_even ? min_even : min_odd;
    for (std::size_t q = 0; q < m; ++q) {
      std::size_t a = (*cyc)[q], b = (*cyc)[(q + 1) % m];
      const std::size_t p = a < n ? a : b, z = (a < n ? b : a) - n;
      const bool drained = (q % 2 == 0) == drain_even;
      detail::share_ref(fa, p, z) += drained ? -delta : delta;
    }
    for (auto& sh : fa.shares)
      sh.erase(std::remove_if(sh.begin(), sh.end(), [](const auto& s) { return s.second == 0; }), sh.end());
    fa.recompute();
    rep.cost_trace.push_back(fa.cost);
    ++rep.cycles_cancelled;
  }
  rep.split_points = fa.split_points();
  std::vector<std::size_t> map(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (fa.shares[p].size() == 1) {
      map[p] = fa.shares[p][0].first;
    } else {
      map[p] = nearest_center(fa.points[p], fa.centers);
    }
  }
  return {make_assignment(fa.points, fa.weights, fa.centers, std::move(map), fa.r), rep};
}

// ---------------------------------------------------------------------------
// Half-spaces: H_(i,j) is a prefix of the ground set sorted by
// key(x) = dist^r(x, z_i) - dist^r(x, z_j), ties broken lexicographically.

namespace detail {

inline int sign_of(__int128 v) { return v < 0 ? -1 : (v > 0 ? 1 : 0); }

// sign(sqrt(a) + sqrt(b) - sqrt(c) - sqrt(e)) for nonnegative integers below 2^28.
inline int compare_sqrt_sums(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t e) {
  using i128 = __int128;
  const i128 D = static_cast<i128>(a) + b - c - e;
  const i128 u = static_cast<i128>(a) * b, v = static_cast<i128>(c) * e;
  // X^2 - Y^2 = D + 2 (sqrt(u) - sqrt(v)); sign(sqrt(u) - sqrt(v)) = sign(u - v)
  const int sd = sign_of(D), sg = sign_of(u - v);
  if (sg == 0) return sd;
  if (sd == 0) return sg;
  if (sd == sg) return sd;
  // compare |D| with 2 |sqrt(u) - sqrt(v)|:  D^2 vs 4 (u + v) - 8 sqrt(u v)
  const i128 E = D * D - 4 * (u + v);
  int cmp;  // sign(D^2 - 4(sqrt u - sqrt v)^2) = sign(E + 8 sqrt(uv))
  if (E >= 0) {
    cmp = (E == 0 && u * v == 0) ? 0 : 1;
  } else {
    cmp = sign_of(64 * u * v - E * E);
  }
  if (cmp > 0) return sd;
  if (cmp < 0) return sg;
  return 0;
}

inline bool fits_even_power(std::int64_t sq, int half) {
  long double v = std::pow(static_cast<long double>(sq), half);
  return v < 1e36L;
}

inline __int128 int_pow(std::int64_t sq, int half) {
  __int128 v = 1;
  for (int i = 0; i < half; ++i) v *= sq;
  return v;
}

}  // namespace detail

// Exact sign of (dist^r(x,zi) - dist^r(x,zj)) - (dist^r(y,zi) - dist^r(y,zj)).
inline int compare_keys(const Point& x, const Point& y, const Point& zi, const Point& zj, double r) {
  const std::int64_t a = squared_distance(x, zi), b = squared_distance(y, zj);
  const std::int64_t c = squared_distance(x, zj), e = squared_distance(y, zi);
  // key(x) - key(y) = (a + b) - (c + e) in r/2-th powers
  if (r == 2.0) return detail::sign_of(static_cast<__int128>(a) + b - c - e);
  const std::int64_t top = std::max(std::max(a, b), std::max(c, e));
  if (r == 1.0 && top < (std::int64_t{1} << 28)) return detail::compare_sqrt_sums(a, b, c, e);
  const double half = r / 2.0;
  if (half == std::floor(half) && half <= 16 && detail::fits_even_power(top, static_cast<int>(half))) {
    const int h = static_cast<int>(half);
    return detail::sign_of(detail::int_pow(a, h) + detail::int_pow(b, h) - detail::int_pow(c, h) - detail::int_pow(e, h));
  }
  const long double lhs = std::pow(static_cast<long double>(a), half) + std::pow(static_cast<long double>(b), half);
  const long double rhs = std::pow(static_cast<long double>(c), half) + std::pow(static_cast<long double>(e), half);
  const long double tol = 1e-15L * std::max(lhs, rhs);
  if (lhs - rhs > tol) return 1;
  if (rhs - lhs > tol) return -1;
  return 0;
}

// Total order on points induced by key_(i,j), lexicographic tiebreak.
inline int compare_key_order(const Point& x, const Point& y, const Point& zi, const Point& zj, double r) {
  const int c = compare_keys(x, y, zi, zj, r);
  if (c != 0) return c;
  if (x < y) return -1;
  if (y < x) return 1;
  return 0;
}

struct HalfSpace {
  enum class Kind : std::uint8_t { Empty, Full, Prefix };
  std::size_t i = 0, j = 0;
  Kind kind = Kind::Empty;
  Point boundary;  // last member in key order when kind == Prefix
};

// Half-spaces for every ordered pair, stored for i < j; H_(j,i) is the complement.
class HalfSpaceSet {
 public:
  HalfSpaceSet() = default;
  HalfSpaceSet(std::vector<Point> centers, double r)
      : centers_(std::move(centers)), r_(r), lower_(centers_.size() * centers_.size()) {
    for (std::size_t i = 0; i < centers_.size(); ++i)
      for (std::size_t j = 0; j < centers_.size(); ++j) lower_[i * centers_.size() + j] = HalfSpace{i, j, HalfSpace::Kind::Empty, {}};
  }

  void set(const HalfSpace& h) {
    require(h.i < h.j && h.j < centers_.size(), "half-spaces are stored for i < j");
    lower_[h.i * centers_.size() + h.j] = h;
  }
  const HalfSpace& stored(std::size_t i, std::size_t j) const { return lower_[i * centers_.size() + j]; }

  // x in H_(i,j)
  bool contains(std::size_t i, std::size_t j, const Point& x) const {
    require(i != j, "half-space needs two distinct centers");
    if (i > j) return !contains(j, i, x);
    const HalfSpace& h = stored(i, j);
    switch (h.kind) {
      case HalfSpace::Kind::Empty:
        return false;
      case HalfSpace::Kind::Full:
        return true;
      case HalfSpace::Kind::Prefix:
        return compare_key_order(x, h.boundary, centers_[i], centers_[j], r_) <= 0;
    }
    return false;
  }

  // 0 for R_0, j + 1 for R_j (x lies in H_(j,j') for every j' != j).
  std::size_t region_of(const Point& x) const {
    const std::size_t k = centers_.size();
    for (std::size_t j = 0; j < k; ++j) {
      bool all = true;
      for (std::size_t jp = 0; jp < k && all; ++jp)
        if (jp != j && !contains(j, jp, x)) all = false;
      if (all) return j + 1;
    }
    return 0;
  }

  std::size_t k() const { return centers_.size(); }
  const std::vector<Point>& centers() const { return centers_; }
  double r() const { return r_; }

 private:
  std::vector<Point> centers_;
  double r_ = 2;
  std::vector<HalfSpace> lower_;
};

// Cutoff for H_(i,j) from the points assigned to z_i and z_j.
inline HalfSpace extract_halfspace(std::size_t i, std::size_t j, std::span<const Point> at_i, std::span<const Point> at_j,
                                   const Point& zi, const Point& zj, double r) {
  HalfSpace h{i, j, HalfSpace::Kind::Empty, {}};
  if (at_i.empty()) return h;
  if (at_j.empty()) {
    h.kind = HalfSpace::Kind::Full;
    return h;
  }
  const Point* best = &at_i[0];
  for (const auto& p : at_i)
    if (compare_key_order(p, *best, zi, zj, r) > 0) best = &p;
  h.kind = HalfSpace::Kind::Prefix;
  h.boundary = *best;
  return h;
}

struct CanonicalResult {
  Assignment assignment;               // over the coreset points, in their order
  std::vector<HalfSpaceSet> halfspaces;  // per level 0..L
  std::size_t switches = 0;
  std::size_t tie_switches = 0;
  std::vector<long long> potential_trace;  // sampled after every tie switch, per level
  bool potential_decreasing = true;
};

namespace detail {

// Lexicographic rank of each point within its level (ties keep input order).
inline std::vector<long long> lex_ranks(std::span<const Point> pts) {
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pts[a] < pts[b]; });
  std::vector<long long> rank(pts.size());
  for (std::size_t t = 0; t < idx.size(); ++t) rank[idx[t]] = static_cast<long long>(t);
  return rank;
}

inline long long switch_potential(const std::vector<long long>& rank, const std::vector<std::size_t>& at, std::size_t k) {
  long long s = 0;
  for (std::size_t p = 0; p < rank.size(); ++p) s += rank[p] * static_cast<long long>(k - 1 - at[p]);
  return s;
}

// Re-optimizes one level with per-center counts fixed, then switches pairs
// until, for every i < j, all points at z_i precede all points at z_j in the
// key_(i,j) order.
inline std::vector<std::size_t> canonicalize_level(std::span<const Point> pts, std::span<const Point> centers,
                                                   const std::vector<std::size_t>& initial, double r,
                                                   CanonicalResult& out) {
  const std::size_t n = pts.size(), k = centers.size();
  std::vector<std::size_t> at = initial;
  if (n == 0) return at;
  std::vector<std::int64_t> count(k, 0);
  for (auto c : initial) ++count[c];
  {
    std::vector<double> cost(n * k);
    double max_cost = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t z = 0; z < k; ++z) max_cost = std::max(max_cost, cost[p * k + z] = dist_pow(pts[p], centers[z], r));
    int bits = kMinCostScaleBits;
    if (max_cost > 0) bits = std::min(52, std::max(kMinCostScaleBits, static_cast<int>(std::floor(40.0 - std::log2(max_cost)))));
    MinCostFlow g(static_cast<int>(n + k + 2));
    const int src = 0, sink = static_cast<int>(n + k + 1);
    std::vector<int> pe(n * k);
    for (std::size_t p = 0; p < n; ++p) g.add_edge(src, static_cast<int>(1 + p), 1, 0);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t z = 0; z < k; ++z)
        pe[p * k + z] = g.add_edge(static_cast<int>(1 + p), static_cast<int>(1 + n + z), 1,
                                   std::llround(std::ldexp(cost[p * k + z], bits)));
    for (std::size_t z = 0; z < k; ++z) g.add_edge(static_cast<int>(1 + n + z), sink, count[z], 0);
    g.solve(src, sink);
    long double before = 0, after = 0;
    std::vector<std::size_t> flow_at(n);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t z = 0; z < k; ++z)
        if (g.flow(pe[p * k + z]) > 0) flow_at[p] = z;
    for (std::size_t p = 0; p < n; ++p) {
      before += cost[p * k + at[p]];
      after += cost[p * k + flow_at[p]];
    }
    if (after <= before) at = flow_at;
  }
  const auto rank = lex_ranks(pts);
  long long pot = switch_potential(rank, at, k);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        for (;;) {
          std::size_t hi = n, lo = n;  // last member of z_i, first member of z_j in key order
          for (std::size_t p = 0; p < n; ++p) {
            if (at[p] == i && (hi == n || compare_key_order(pts[p], pts[hi], centers[i], centers[j], r) > 0)) hi = p;
            if (at[p] == j && (lo == n || compare_key_order(pts[p], pts[lo], centers[i], centers[j], r) < 0)) lo = p;
          }
          if (hi == n || lo == n) break;
          if (compare_key_order(pts[lo], pts[hi], centers[i], centers[j], r) >= 0) break;
          const bool tie = compare_keys(pts[lo], pts[hi], centers[i], centers[j], r) == 0;
          std::swap(at[hi], at[lo]);
          ++out.switches;
          changed = true;
          const long long next = switch_potential(rank, at, k);
          if (tie) {
            ++out.tie_switches;
            if (next >= pot) out.potential_decreasing = false;
            out.potential_trace.push_back(next);
          }
          pot = next;
        }
      }
  }
  return at;
}

}  // namespace detail

// Per-level canonicalization of an integral coreset assignment and the
// half-space sets read off the result.
inline CanonicalResult canonicalize(const std::vector<CoresetPoint>& coreset, std::span<const Point> centers,
                                    const Assignment& pi_prime, int L, double r) {
  require(pi_prime.map.size() == coreset.size(), "assignment does not match the coreset");
  CanonicalResult out;
  const std::size_t k = centers.size();
  std::vector<std::size_t> final_map(coreset.size());
  for (int level = 0; level <= L; ++level) {
    std::vector<std::size_t> idx;
    for (std::size_t p = 0; p < coreset.size(); ++p)
      if (coreset[p].level == level) idx.push_back(p);
    std::vector<Point> pts;
    std::vector<std::size_t> init;
    for (auto p : idx) {
      pts.push_back(coreset[p].point);
      init.push_back(pi_prime.map[p]);
    }
    const auto at = detail::canonicalize_level(pts, centers, init, r, out);
    for (std::size_t t = 0; t < idx.size(); ++t) final_map[idx[t]] = at[t];
    HalfSpaceSet hs(std::vector<Point>(centers.begin(), centers.end()), r);
    std::vector<std::vector<Point>> by(k);
    for (std::size_t t = 0; t < pts.size(); ++t) by[at[t]].push_back(pts[t]);
    if (!pts.empty())
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) hs.set(extract_halfspace(i, j, by[i], by[j], centers[i], centers[j], r));
    out.halfspaces.push_back(std::move(hs));
  }
  std::vector<Point> pts;
  std::vector<double> w;
  for (const auto& c : coreset) {
    pts.push_back(c.point);
    w.push_back(c.weight);
  }
  out.assignment = make_assignment(pts, w, centers, std::move(final_map), r);
  return out;
}

// Transferred assignment of one part: region masses b_j, the mass
// unit T and xi decide between a point's own region and the heaviest one.
inline std::size_t transfer_rule(std::size_t region, const std::vector<double>& b, double xi, double T) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < b.size(); ++j)
    if (b[j] > b[best]) best = j;
  if (region >= 1 && b[region - 1] >= 2.0 * xi * T) return region - 1;
  return best;
}

struct TransferResult {
  Assignment assignment;
  std::size_t covered = 0;  // points routed through an included part
};

// Full-input assignment from the coreset metadata and half-space sets.
inline TransferResult transfer_full(std::span<const Point> Q, const WeightedCoreset& coreset,
                                    const std::vector<HalfSpaceSet>& halfspaces, std::span<const Point> centers,
                                    double r) {
  const CoresetMeta& meta = coreset.meta;
  const std::size_t k = centers.size();
  const int L = meta.params.L();
  std::vector<HalfSpaceSet> hs = halfspaces;
  while (static_cast<int>(hs.size()) < L + 1) hs.emplace_back(std::vector<Point>(centers.begin(), centers.end()), r);

  std::map<PartKey, std::vector<double>> mass;
  for (const auto& cp : coreset.points) {
    auto key = part_of(cp.point, meta.partition, meta.grid);
    if (!key) continue;
    auto& b = mass[*key];
    if (b.empty()) b.assign(k, 0.0);
    const std::size_t reg = hs[static_cast<std::size_t>(key->level)].region_of(cp.point);
    if (reg >= 1) b[reg - 1] += cp.weight;
  }
  TransferResult out;
  std::vector<std::size_t> map(Q.size());
  const std::vector<double> zero(k, 0.0);
  for (std::size_t p = 0; p < Q.size(); ++p) {
    auto key = part_of(Q[p], meta.partition, meta.grid);
    if (key && meta.included(*key)) {
      auto it = mass.find(*key);
      const auto& b = it == mass.end() ? zero : it->second;
      const std::size_t reg = hs[static_cast<std::size_t>(key->level)].region_of(Q[p]);
      map[p] = transfer_rule(reg, b, meta.params.xi(), meta.region_threshold(key->level));
      ++out.covered;
    } else {
      map[p] = nearest_center(Q[p], centers);
    }
  }
  out.assignment = make_assignment(Q, unit_weights(Q.size()), centers, std::move(map), r);
  return out;
}

// Whole construction: relaxed flow, integral rounding, canonical form and the
// transferred full-input assignment.
struct PipelineResult {
  FractionalAssignment fractional;
  Assignment integral;
  IntegralizeReport integral_report;
  CanonicalResult canonical;
  TransferResult full;
};

inline std::optional<PipelineResult> assignment_pipeline(std::span<const Point> Q, const WeightedCoreset& coreset,
                                                         std::span<const Point> centers, double capacity, double r) {
  std::vector<Point> pts;
  std::vector<double> w;
  for (const auto& c : coreset.points) {
    pts.push_back(c.point);
    w.push_back(c.weight);
  }
  auto frac = fractional_assign(pts, w, centers, capacity, r);
  if (!frac) return std::nullopt;
  PipelineResult res{*frac, {}, {}, {}, {}};
  auto [integral, report] = integralize(*frac);
  res.integral = std::move(integral);
  res.integral_report = std::move(report);
  res.canonical = canonicalize(coreset.points, centers, res.integral, coreset.meta.params.L(), r);
  res.full = transfer_full(Q, coreset, res.canonical.halfspaces, centers, r);
  return res;
}

}  // namespace capacore
