#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "capacore/cellstore.hpp"
#include "capacore/error.hpp"
#include "capacore/estimator.hpp"
#include "capacore/geometry.hpp"
#include "capacore/hashing.hpp"
#include "capacore/params.hpp"
#include "capacore/partition.hpp"

namespace capacore {

struct CoresetPoint {
  Point point;
  double weight = 0;
  int level = 0;

  friend bool operator==(const CoresetPoint&, const CoresetPoint&) = default;
};

struct PartInfo {
  PartKey key;
  double estimate = 0;
  bool included = false;

  friend bool operator==(const PartInfo&, const PartInfo&) = default;
};

struct CoresetMeta {
  Params params;
  double o = 0;
  std::uint64_t seed = 0;
  Grid grid;
  bool exact_counts = false;
  PartitionStructure partition;
  std::vector<PartInfo> parts;
  std::vector<double> attempted_o;

  // 0.5 * gamma * T_i(o), the mass unit of the transferred assignment.
  double region_threshold(int level) const { return 0.5 * params.gamma() * params.T(level, o); }

  bool included(const PartKey& key) const {
    auto it = std::lower_bound(parts.begin(), parts.end(), key, [](const PartInfo& p, const PartKey& k) { return p.key < k; });
    return it != parts.end() && it->key == key && it->included;
  }

  friend bool operator==(const CoresetMeta& a, const CoresetMeta& b) {
    return a.params == b.params && a.o == b.o && a.seed == b.seed && a.grid == b.grid &&
           a.exact_counts == b.exact_counts && a.partition == b.partition && a.parts == b.parts &&
           a.attempted_o == b.attempted_o;
  }
};

struct WeightedCoreset {
  std::vector<CoresetPoint> points;
  CoresetMeta meta;

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double s = 0;
    for (const auto& p : points) s += p.weight;
    return s;
  }

  friend bool operator==(const WeightedCoreset&, const WeightedCoreset&) = default;
};

struct BuildOptions {
  bool exact_counts = false;
};

inline Grid grid_for_seed(const Params& params, std::uint64_t seed) {
  return Grid::random(params.delta(), params.d(), derive_seed(seed, kShiftFamily, 0));
}

// Canonical order of coreset points, independent of how they were gathered.
inline void sort_coreset(std::vector<CoresetPoint>& pts) {
  std::sort(pts.begin(), pts.end(), [](const CoresetPoint& a, const CoresetPoint& b) {
    if (a.level != b.level) return a.level < b.level;
    return a.point < b.point;
  });
}

// Result of the marking phase shared by every construction mode.
struct Marking {
  PartitionStructure partition;
  std::vector<PartInfo> parts;  // sorted by key
};

// Marking on the estimates, the two FAIL gates, and the per-part
// inclusion test tau(Q_{i,j}) >= gamma T_i(o).
inline OrFail<Marking> mark_and_gate(const SampleBank& bank, const Params& params, const LevelSchedule& sched,
                                     const Grid& grid) {
  Marking m;
  m.partition = mark_cells(bank.cell_estimates(), sched.T, grid);
  const double heavy = static_cast<double>(m.partition.total_heavy());
  if (heavy > params.heavy_cell_cap())
    return Fail{"heavy cells " + render_double(heavy) + " exceed cap " + render_double(params.heavy_cell_cap())};
  for (int i = 0; i <= params.L(); ++i) {
    const double u = bank.estimate_level_union(m.partition, grid, i);
    if (u > sched.at(sched.part_sum_cap, i))
      return Fail{"level " + std::to_string(i) + " part mass " + render_double(u) + " exceeds cap " +
                  render_double(sched.at(sched.part_sum_cap, i))};
  }
  for (int i = 0; i <= params.L(); ++i) {
    const auto est = bank.estimate_parts(m.partition, grid, i);
    const double cut = params.gamma() * sched.threshold(i);
    for (std::size_t j = 0; j < est.size(); ++j) m.parts.push_back({PartKey{i, j}, est[j], est[j] >= cut});
  }
  return m;
}

inline CoresetMeta make_meta(const Params& params, double o, std::uint64_t seed, const Grid& grid, bool exact,
                             Marking marking) {
  return CoresetMeta{params, o, seed, grid, exact, std::move(marking.partition), std::move(marking.parts), {}};
}

// Points of the input with their cells at every level and their polynomial
// values for every (role, level); independent of o.
class PreparedInput {
 public:
  PreparedInput(const std::vector<Point>& points, const Params& params, std::uint64_t seed)
      : params_(params), seed_(seed), grid_(grid_for_seed(params, seed)), pool_(params, seed), points_(points) {
    const int L = params.L();
    const PointEncoder enc(params.delta(), params.d());
    cells_.reserve(points.size());
    values_.reserve(points.size());
    for (const auto& p : points) {
      grid_.check_point(p);
      std::vector<CellId> cs;
      for (int i = -1; i <= L; ++i) cs.push_back(grid_.cell_of(p, i));
      cells_.push_back(std::move(cs));
      const u128 code = enc.encode(p);
      std::vector<PolynomialHash::Value> vals;
      for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample})
        for (int i = -1; i <= L; ++i) vals.push_back(pool_.get(role, i)->evaluate(code));
      values_.push_back(std::move(vals));
    }
  }

  const Params& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const Grid& grid() const { return grid_; }
  const PolynomialPool& pool() const { return pool_; }
  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const CellId& cell(std::size_t p, int level) const { return cells_[p][static_cast<std::size_t>(level + 1)]; }
  const PolynomialHash::Value& value(std::size_t p, HashRole role, int level) const {
    const std::size_t per = static_cast<std::size_t>(params_.L() + 2);
    return values_[p][(static_cast<std::size_t>(role) - 1) * per + static_cast<std::size_t>(level + 1)];
  }

 private:
  Params params_;
  std::uint64_t seed_;
  Grid grid_;
  PolynomialPool pool_;
  std::vector<Point> points_;
  std::vector<std::vector<CellId>> cells_;
  std::vector<std::vector<PolynomialHash::Value>> values_;
};

namespace detail {

inline std::vector<BernoulliThreshold> thresholds_for(HashRole role, const SamplingRates& rates, int L) {
  std::vector<BernoulliThreshold> v;
  for (int i = -1; i <= L; ++i) v.emplace_back(rates.rate(role, i));
  return v;
}

inline void bump(CellCounts& m, const CellId& c) { ++m[c]; }

}  // namespace detail

// Construction for a single guess o over an in-memory point multiset.
inline OrFail<WeightedCoreset> build_for_o(const PreparedInput& in, double o, const BuildOptions& opt = {}) {
  const Params& params = in.params();
  const int L = params.L();
  const LevelSchedule sched = params.schedule(o);
  const SamplingRates rates = SamplingRates::from(sched, opt.exact_counts);
  const auto th_cell = detail::thresholds_for(HashRole::Cell, rates, L);
  const auto th_part = detail::thresholds_for(HashRole::Part, rates, L);
  const auto th_samp = detail::thresholds_for(HashRole::Sample, rates, L);

  std::vector<CellCounts> h(static_cast<std::size_t>(L + 2)), hp(static_cast<std::size_t>(L + 2));
  for (std::size_t p = 0; p < in.size(); ++p) {
    for (int i = -1; i <= L; ++i) {
      const auto li = static_cast<std::size_t>(i + 1);
      if (th_cell[li].accepts(in.value(p, HashRole::Cell, i))) detail::bump(h[li], in.cell(p, i));
      if (i >= 0 && th_part[li].accepts(in.value(p, HashRole::Part, i))) detail::bump(hp[li], in.cell(p, i));
    }
  }
  const SampleBank bank = SampleBank::from_counts(rates, L, std::move(h), std::move(hp));
  auto marked = mark_and_gate(bank, params, sched, in.grid());
  if (failed(marked)) return std::get<Fail>(marked);
  Marking m = std::move(std::get<Marking>(marked));

  std::vector<CoresetPoint> out;
  for (std::size_t p = 0; p < in.size(); ++p) {
    if (!m.partition.is_heavy(in.cell(p, -1))) continue;
    int level = 0;
    while (level < L && m.partition.is_heavy(in.cell(p, level))) ++level;
    const PartKey key{level, *m.partition.heavy_index(in.cell(p, level - 1))};
    const auto li = static_cast<std::size_t>(level + 1);
    auto it = std::lower_bound(m.parts.begin(), m.parts.end(), key,
                               [](const PartInfo& a, const PartKey& k) { return a.key < k; });
    if (it == m.parts.end() || !(it->key == key) || !it->included) continue;
    if (!th_samp[li].accepts(in.value(p, HashRole::Sample, level))) continue;
    out.push_back({in.points()[p], 1.0 / rates.phi[li], level});
  }
  sort_coreset(out);
  return WeightedCoreset{std::move(out), make_meta(params, o, in.seed(), in.grid(), opt.exact_counts, std::move(m))};
}

inline OrFail<WeightedCoreset> build_for_o(const std::vector<Point>& points, const Params& params, double o,
                                           std::uint64_t seed, const BuildOptions& opt = {}) {
  return build_for_o(PreparedInput(points, params, seed), o, opt);
}

// Guess grid 1, 2, 4, ... up to n (sqrt(d) Delta)^r.
inline std::vector<double> guess_grid(const Params& params, std::size_t n) {
  std::vector<double> g;
  const double top = params.max_guess(n);
  for (double o = 1; o <= top; o *= 2) g.push_back(o);
  return g;
}

// Smallest guess o on the grid whose build does not FAIL.
inline WeightedCoreset build_auto(const PreparedInput& in, const BuildOptions& opt = {}) {
  require(in.size() > 0, "input point set is empty");
  std::vector<double> tried;
  std::string last;
  for (double o : guess_grid(in.params(), in.size())) {
    tried.push_back(o);
    auto r = build_for_o(in, o, opt);
    if (!failed(r)) {
      WeightedCoreset c = std::move(std::get<WeightedCoreset>(r));
      c.meta.attempted_o = tried;
      return c;
    }
    last = std::get<Fail>(r).reason;
  }
  throw FailError("every guess o FAILed (" + std::to_string(tried.size()) + " tried); last: " + last);
}

inline WeightedCoreset build_auto(const std::vector<Point>& points, const Params& params, std::uint64_t seed,
                                  const BuildOptions& opt = {}) {
  return build_auto(PreparedInput(points, params, seed), opt);
}

// Per-level recovered store contents of one guess: h stores for levels
// -1..L, h' and hat-h stores for levels 0..L (index level + 1; level -1 of
// h' and hat-h stays empty).
struct RecoveredStores {
  std::vector<StoreOutput> h, hp, hhat;
};

// Marking and gating on recovered stores, then the sampling step from the
// hat-h stores. Shared by the streaming and distributed modes.
inline OrFail<WeightedCoreset> assemble_from_stores(const RecoveredStores& rec, const Params& params, double o,
                                                    std::uint64_t seed, const Grid& grid, bool exact_counts) {
  const int L = params.L();
  const LevelSchedule sched = params.schedule(o);
  const SamplingRates rates = SamplingRates::from(sched, exact_counts);
  std::vector<CellCounts> h(static_cast<std::size_t>(L + 2)), hp(static_cast<std::size_t>(L + 2));
  for (int i = -1; i <= L; ++i) {
    const auto li = static_cast<std::size_t>(i + 1);
    h[li] = rec.h[li].counts;
    if (i >= 0) hp[li] = rec.hp[li].counts;
  }
  const SampleBank bank = SampleBank::from_counts(rates, L, std::move(h), std::move(hp));
  auto marked = mark_and_gate(bank, params, sched, grid);
  if (failed(marked)) return std::get<Fail>(marked);
  Marking m = std::move(std::get<Marking>(marked));

  std::vector<CoresetPoint> out;
  for (int i = 0; i <= L; ++i) {
    const auto li = static_cast<std::size_t>(i + 1);
    const StoreOutput& so = rec.hhat[li];
    std::map<CellId, std::vector<const Point*>> by_cell;
    for (const auto& p : so.small_points) by_cell[grid.cell_of(p, i)].push_back(&p);
    for (const auto& [c, n] : so.counts) {
      auto key = m.partition.part_of_cell(c, grid);
      if (!key) continue;
      auto it = std::lower_bound(m.parts.begin(), m.parts.end(), *key,
                                 [](const PartInfo& a, const PartKey& k) { return a.key < k; });
      if (!it->included) continue;
      auto pts = by_cell.find(c);
      const std::size_t got = pts == by_cell.end() ? 0 : pts->second.size();
      if (got != static_cast<std::size_t>(n))
        return Fail{"sampled points of a qualifying cell at level " + std::to_string(i) + " were not recovered"};
      for (const Point* p : pts->second) out.push_back({*p, 1.0 / rates.phi[li], i});
    }
  }
  sort_coreset(out);
  return WeightedCoreset{std::move(out), make_meta(params, o, seed, grid, exact_counts, std::move(m))};
}

// Sum over levels of phi_i times the true mass of the included parts.
inline double expected_coreset_size(const std::vector<Point>& points, const WeightedCoreset& c) {
  const LevelSchedule s = c.meta.params.schedule(c.meta.o);
  double e = 0;
  for (const auto& p : points) {
    auto key = part_of(p, c.meta.partition, c.meta.grid);
    if (key && c.meta.included(*key)) e += s.at(s.phi, key->level);
  }
  return e;
}

// ---------------------------------------------------------------------------
// Coreset file: "% key=value" header, then "w x1 ... xd [#tag]" per point.

inline std::string format_point_coords(const Point& p) {
  std::string s;
  for (std::size_t j = 0; j < p.coords.size(); ++j) {
    if (j) s += ' ';
    s += std::to_string(p.coords[j]);
  }
  if (p.tag) s += " #" + std::to_string(*p.tag);
  return s;
}

// Parses "x1 ... xd [#tag]".
inline Point parse_point_tokens(std::istringstream& is, int d, const std::string& line) {
  Point p;
  std::string tok;
  while (is >> tok) {
    if (tok[0] == '#') {
      try {
        p.tag = std::stoull(tok.substr(1));
      } catch (const std::exception&) {
        throw UsageError("bad tag in line: " + line);
      }
      if (is >> tok) throw UsageError("trailing token after tag: " + line);
      break;
    }
    try {
      std::size_t pos = 0;
      p.coords.push_back(std::stoll(tok, &pos));
      if (pos != tok.size()) throw UsageError("");
    } catch (const std::exception&) {
      throw UsageError("bad coordinate '" + tok + "' in line: " + line);
    }
  }
  if (d > 0 && static_cast<int>(p.coords.size()) != d)
    throw UsageError("expected " + std::to_string(d) + " coordinates in line: " + line);
  return p;
}

inline void write_coreset(std::ostream& os, const WeightedCoreset& c) {
  const CoresetMeta& m = c.meta;
  os << "% capacore-coreset=1\n";
  std::istringstream ps(m.params.serialize());
  std::string line;
  while (std::getline(ps, line)) os << "% " << line << "\n";
  os << "% o=" << render_double(m.o) << "\n";
  os << "% seed=" << m.seed << "\n";
  os << "% exact_counts=" << (m.exact_counts ? 1 : 0) << "\n";
  os << "% shift_fp=";
  for (std::size_t j = 0; j < m.grid.shift_fp().size(); ++j) os << (j ? " " : "") << m.grid.shift_fp()[j];
  os << "\n% attempted_o=";
  for (std::size_t j = 0; j < m.attempted_o.size(); ++j) os << (j ? " " : "") << render_double(m.attempted_o[j]);
  os << "\n";
  for (int i = -1; i < m.partition.L(); ++i)
    for (const auto& [cell, j] : m.partition.heavy(i)) os << "% heavy=" << to_string(cell) << "\n";
  for (int i = 0; i <= m.partition.L(); ++i)
    for (const auto& cell : m.partition.crucial(i)) os << "% crucial=" << to_string(cell) << "\n";
  for (const auto& p : m.parts)
    os << "% part=" << p.key.level << " " << p.key.index << " " << render_double(p.estimate) << " "
       << (p.included ? 1 : 0) << "\n";
  for (const auto& p : c.points) os << render_double(p.weight) << " " << format_point_coords(p.point) << "\n";
}

inline WeightedCoreset read_coreset(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::vector<std::string> heavy, crucial, parts;
  std::vector<std::string> body;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '%') {
      std::string rest = line.substr(1);
      const auto start = rest.find_first_not_of(' ');
      rest = start == std::string::npos ? "" : rest.substr(start);
      const auto eq = rest.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = rest.substr(0, eq), val = rest.substr(eq + 1);
      if (key == "heavy") {
        heavy.push_back(val);
      } else if (key == "crucial") {
        crucial.push_back(val);
      } else if (key == "part") {
        parts.push_back(val);
      } else {
        kv[key] = val;
      }
    } else {
      body.push_back(line);
    }
  }
  if (!kv.count("capacore-coreset")) throw UsageError("not a coreset file");
  const Params params = Params::parse(kv);
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw UsageError("coreset header lacks '" + k + "'");
    return it->second;
  };
  std::vector<std::int64_t> shift;
  {
    std::istringstream ss(get("shift_fp"));
    std::int64_t v;
    while (ss >> v) shift.push_back(v);
  }
  Grid grid(params.delta(), params.d(), shift);
  CoresetMeta m{params, parse_double(get("o"), "o"), std::stoull(get("seed")), grid, get("exact_counts") == "1",
                PartitionStructure(params.L()), {}, {}};
  {
    std::istringstream ss(kv.count("attempted_o") ? kv["attempted_o"] : "");
    std::string t;
    while (ss >> t) m.attempted_o.push_back(parse_double(t, "attempted_o"));
  }
  auto parse_cell = [&](const std::string& s) {
    std::istringstream ss(s);
    CellId c;
    ss >> c.level;
    std::int64_t t;
    while (ss >> t) c.lattice.push_back(t);
    require(static_cast<int>(c.lattice.size()) == params.d(), "bad cell line: " + s);
    return c;
  };
  for (const auto& s : heavy) m.partition.add_heavy(parse_cell(s));
  for (const auto& s : crucial) m.partition.add_crucial(parse_cell(s));
  m.partition.reindex();
  for (const auto& s : parts) {
    std::istringstream ss(s);
    PartInfo p;
    std::string est;
    int inc = 0;
    ss >> p.key.level >> p.key.index >> est >> inc;
    p.estimate = parse_double(est, "part estimate");
    p.included = inc != 0;
    m.parts.push_back(p);
  }
  std::sort(m.parts.begin(), m.parts.end(), [](const PartInfo& a, const PartInfo& b) { return a.key < b.key; });
  WeightedCoreset c{{}, std::move(m)};
  for (const auto& b : body) {
    std::istringstream ss(b);
    std::string w;
    ss >> w;
    CoresetPoint cp;
    cp.weight = parse_double(w, "weight");
    cp.point = parse_point_tokens(ss, params.d(), b);
    auto key = part_of(cp.point, c.meta.partition, c.meta.grid);
    require(key.has_value(), "coreset point outside every part: " + b);
    cp.level = key->level;
    c.points.push_back(std::move(cp));
  }
  sort_coreset(c.points);
  return c;
}

inline std::string coreset_to_string(const WeightedCoreset& c) {
  std::ostringstream os;
  write_coreset(os, c);
  return os.str();
}

inline WeightedCoreset coreset_from_string(const std::string& s) {
  std::istringstream is(s);
  return read_coreset(is);
}

}  // namespace capacore
