#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "capacore/coreset.hpp"
#include "capacore/error.hpp"
#include "capacore/geometry.hpp"
#include "capacore/random.hpp"

namespace capacore {

struct StreamUpdate {
  Point point;
  int sign = 1;
};

namespace detail {

inline std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Skips blank lines and '%' comments.
template <typename F>
void for_each_data_line(std::istream& is, F&& f) {
  std::string line;
  while (std::getline(is, line)) {
    const std::string s = strip(line);
    if (s.empty() || s[0] == '%') continue;
    f(s);
  }
}

}  // namespace detail

// d <= 0 infers the dimension from the first line.
inline std::vector<Point> read_points(std::istream& is, int d = 0) {
  std::vector<Point> out;
  detail::for_each_data_line(is, [&](const std::string& s) {
    std::istringstream ss(s);
    out.push_back(parse_point_tokens(ss, d, s));
    if (d <= 0) d = static_cast<int>(out.back().coords.size());
    require(d > 0, "point line without coordinates: " + s);
  });
  return out;
}

inline std::vector<StreamUpdate> read_stream(std::istream& is, int d = 0) {
  static const std::string kMinus = "\xE2\x88\x92";  // U+2212
  std::vector<StreamUpdate> out;
  detail::for_each_data_line(is, [&](const std::string& s) {
    StreamUpdate u;
    std::string rest;
    if (s[0] == '+') {
      rest = s.substr(1);
    } else if (s[0] == '-') {
      u.sign = -1;
      rest = s.substr(1);
    } else if (s.rfind(kMinus, 0) == 0) {
      u.sign = -1;
      rest = s.substr(kMinus.size());
    } else {
      throw UsageError("stream line must start with '+' or '-': " + s);
    }
    std::istringstream ss(rest);
    u.point = parse_point_tokens(ss, d, s);
    if (d <= 0) d = static_cast<int>(u.point.coords.size());
    out.push_back(std::move(u));
  });
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open " + path);
  return f;
}

inline std::vector<Point> read_points_file(const std::string& path, int d = 0) {
  auto f = open_input(path);
  return read_points(f, d);
}

inline std::vector<StreamUpdate> read_stream_file(const std::string& path, int d = 0) {
  auto f = open_input(path);
  return read_stream(f, d);
}

inline void write_points(std::ostream& os, const std::vector<Point>& pts) {
  for (const auto& p : pts) os << format_point_coords(p) << "\n";
}

inline void write_stream(std::ostream& os, const std::vector<StreamUpdate>& ups) {
  for (const auto& u : ups) os << (u.sign > 0 ? "+ " : "- ") << format_point_coords(u.point) << "\n";
}

// Net multiset after applying a stream, in insertion order of survivors.
inline std::vector<Point> apply_stream(const std::vector<StreamUpdate>& ups) {
  std::vector<Point> live;
  for (const auto& u : ups) {
    if (u.sign > 0) {
      live.push_back(u.point);
    } else {
      auto it = std::find(live.begin(), live.end(), u.point);
      require(it != live.end(), "deletion of a point not present: " + format_point_coords(u.point));
      live.erase(it);
    }
  }
  return live;
}

enum class GenShape { Gaussian, Uniform };

struct GenConfig {
  std::size_t n = 100;
  int clusters = 2;
  GenShape shape = GenShape::Gaussian;
  double spread = 0.05;  // standard deviation as a fraction of Delta
  bool tag = true;
};

struct GenOutput {
  std::vector<Point> points;
  std::vector<Point> means;
};

// Cluster means are uniform on [1, Delta]^d; members are rounded and clamped.
inline GenOutput generate_points(const GenConfig& cfg, std::int64_t delta, int d, std::uint64_t seed) {
  require(cfg.clusters >= 1, "clusters must be >= 1");
  require(delta >= 1 && d >= 1, "bad Delta or d");
  Rng rng(seed);
  GenOutput out;
  for (int c = 0; c < cfg.clusters; ++c) {
    Point m;
    for (int j = 0; j < d; ++j) m.coords.push_back(uniform_int(rng, 1, delta));
    out.means.push_back(std::move(m));
  }
  const double sd = cfg.spread * static_cast<double>(delta);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Point p;
    if (cfg.shape == GenShape::Uniform) {
      for (int j = 0; j < d; ++j) p.coords.push_back(uniform_int(rng, 1, delta));
    } else {
      const auto& m = out.means[uniform_below(rng, static_cast<std::uint64_t>(cfg.clusters))];
      for (int j = 0; j < d; ++j) {
        const double x = std::llround(static_cast<double>(m.coords[j]) + sd * standard_normal(rng));
        p.coords.push_back(std::clamp<std::int64_t>(static_cast<std::int64_t>(x), 1, delta));
      }
    }
    if (cfg.tag) p.tag = i;
    out.points.push_back(std::move(p));
  }
  return out;
}

// Random dynamic stream whose net multiset is a subset of the pool; deletes
// only live points. About delete_frac of the updates are deletions.
inline std::vector<StreamUpdate> random_stream(const std::vector<Point>& pool, std::size_t updates, double delete_frac,
                                               Rng& rng) {
  std::vector<StreamUpdate> out;
  std::vector<Point> live;
  std::size_t next = 0;
  while (out.size() < updates) {
    const bool del = !live.empty() && (next >= pool.size() || uniform01(rng) < delete_frac);
    if (del) {
      const std::size_t i = uniform_below(rng, live.size());
      out.push_back({live[i], -1});
      live[i] = live.back();
      live.pop_back();
    } else if (next < pool.size()) {
      out.push_back({pool[next], +1});
      live.push_back(pool[next++]);
    } else {
      break;
    }
  }
  return out;
}

}  // namespace capacore
