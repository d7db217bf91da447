#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "capacore/error.hpp"

namespace capacore {

// Successive shortest augmenting paths with Johnson potentials. Integer
// capacities and nonnegative integer costs; optimal for any flow value.
class MinCostFlow {
 public:
  using i64 = std::int64_t;
  using i128 = __int128;

  explicit MinCostFlow(int n) : n_(n), head_(static_cast<std::size_t>(n), -1), pot_(static_cast<std::size_t>(n), 0) {}

  int add_edge(int from, int to, i64 cap, i64 cost) {
    require(from >= 0 && from < n_ && to >= 0 && to < n_, "edge endpoint out of range");
    require(cap >= 0 && cost >= 0, "capacities and costs must be nonnegative");
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({to, head_[from], cap, cost});
    head_[from] = id;
    edges_.push_back({from, head_[to], 0, -cost});
    head_[to] = id + 1;
    return id;
  }

  struct Result {
    i64 flow = 0;
    i128 cost = 0;
    int augmentations = 0;
  };

  Result solve(int s, int t, i64 limit = std::numeric_limits<i64>::max()) {
    Result res;
    constexpr i64 inf = std::numeric_limits<i64>::max();
    std::vector<i64> dist(static_cast<std::size_t>(n_));
    std::vector<int> via(static_cast<std::size_t>(n_));
    using Item = std::pair<i64, int>;
    while (res.flow < limit) {
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(via.begin(), via.end(), -1);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      dist[s] = 0;
      pq.push({0, s});
      while (!pq.empty()) {
        auto [du, u] = pq.top();
        pq.pop();
        if (du != dist[u]) continue;
        for (int e = head_[u]; e != -1; e = edges_[e].next) {
          const Edge& ed = edges_[e];
          if (ed.cap <= 0) continue;
          const i64 nd = du + ed.cost + pot_[u] - pot_[ed.to];
          if (nd < dist[ed.to]) {
            dist[ed.to] = nd;
            via[ed.to] = e;
            pq.push({nd, ed.to});
          }
        }
      }
      if (dist[t] == inf) break;
      for (int v = 0; v < n_; ++v) pot_[v] += std::min(dist[v], dist[t]);
      i64 push = limit - res.flow;
      for (int v = t; v != s; v = edges_[via[v] ^ 1].to) push = std::min(push, edges_[via[v]].cap);
      for (int v = t; v != s; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].cap -= push;
        edges_[via[v] ^ 1].cap += push;
        res.cost += static_cast<i128>(push) * edges_[via[v]].cost;
      }
      res.flow += push;
      ++res.augmentations;
    }
    return res;
  }

  // Flow currently carried by a forward edge.
  i64 flow(int edge) const { return edges_[edge ^ 1].cap; }

  // Reduced costs of all residual edges are nonnegative under the final
  // potentials, which certifies optimality of the current flow.
  bool certify() const {
    for (int u = 0; u < n_; ++u)
      for (int e = head_[u]; e != -1; e = edges_[e].next)
        if (edges_[e].cap > 0 && edges_[e].cost + pot_[u] - pot_[edges_[e].to] < 0) return false;
    return true;
  }

  // Independent check: Bellman-Ford from a virtual source over the residual graph.
  bool has_negative_cycle() const {
    std::vector<i128> d(static_cast<std::size_t>(n_), 0);
    for (int round = 0; round < n_; ++round) {
      bool changed = false;
      for (int u = 0; u < n_; ++u)
        for (int e = head_[u]; e != -1; e = edges_[e].next)
          if (edges_[e].cap > 0 && d[u] + edges_[e].cost < d[edges_[e].to]) {
            d[edges_[e].to] = d[u] + edges_[e].cost;
            changed = true;
          }
      if (!changed) return false;
    }
    return true;
  }

  int nodes() const { return n_; }

 private:
  struct Edge {
    int to;
    int next;
    i64 cap;
    i64 cost;
  };

  int n_;
  std::vector<int> head_;
  std::vector<Edge> edges_;
  std::vector<i64> pot_;
};

}  // namespace capacore
