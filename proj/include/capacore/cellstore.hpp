#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <variant>
#include <vector>

#include "capacore/error.hpp"
#include "capacore/estimator.hpp"
#include "capacore/geometry.hpp"
#include "capacore/hashing.hpp"
#include "capacore/random.hpp"
#include "capacore/wire.hpp"

namespace capacore {

// Recovered content of a store: the nonempty cells with counts (C and f) and
// the points of cells holding at most beta points (S), sorted.
struct StoreOutput {
  CellCounts counts;
  std::vector<Point> small_points;

  friend bool operator==(const StoreOutput&, const StoreOutput&) = default;
};

enum class Backing : std::uint8_t { Exact = 0, Sketch = 1 };

namespace detail {

inline void write_grid(ByteWriter& w, const Grid& g) {
  w.i64(g.delta());
  w.u32(static_cast<std::uint32_t>(g.dim()));
  for (auto s : g.shift_fp()) w.i64(s);
}

inline Grid read_grid(ByteReader& r) {
  const std::int64_t delta = r.i64();
  const int d = static_cast<int>(r.u32());
  require(d >= 1 && d <= 64, "bad dimension in blob");
  std::vector<std::int64_t> shift(d);
  for (auto& s : shift) s = r.i64();
  return Grid(delta, d, std::move(shift));
}

}  // namespace detail

// Keyed dictionary of signed cell counts and point multiplicities. FAILs
// exactly when more than alpha cells are nonempty.
class ExactCellStore {
 public:
  ExactCellStore(Grid grid, int level, double alpha, double beta)
      : grid_(std::move(grid)), level_(level), alpha_(alpha), beta_(beta) {
    require(level >= -1 && level <= grid_.levels(), "store level out of range");
  }

  void update(const Point& p, int sign) { update(grid_.cell_of(p, level_), p, sign); }

  void update(const CellId& c, const Point& p, int sign) {
    auto [it, fresh] = cells_.try_emplace(c);
    Entry& e = it->second;
    e.count += sign;
    auto [pit, pfresh] = e.points.try_emplace(p, 0);
    pit->second += sign;
    if (pit->second == 0) e.points.erase(pit);
    if (e.count == 0 && e.points.empty()) cells_.erase(it);
  }

  OrFail<StoreOutput> finalize() const { return finalize_with(alpha_, beta_); }

  OrFail<StoreOutput> finalize_with(double alpha, double beta) const {
    StoreOutput out;
    for (const auto& [c, e] : cells_) {
      if (e.count < 0) return Fail{"negative cell count at level " + std::to_string(level_)};
      if (e.count > 0) out.counts.emplace(c, e.count);
    }
    if (static_cast<double>(out.counts.size()) > alpha)
      return Fail{"store at level " + std::to_string(level_) + " holds " + std::to_string(out.counts.size()) +
                  " cells, cap " + render_double(alpha)};
    for (const auto& [c, n] : out.counts) {
      if (static_cast<double>(n) > beta) continue;
      for (const auto& [p, m] : cells_.at(c).points) {
        if (m < 0) return Fail{"negative point multiplicity"};
        for (std::int64_t t = 0; t < m; ++t) out.small_points.push_back(p);
      }
    }
    std::sort(out.small_points.begin(), out.small_points.end());
    return out;
  }

  void merge(const ExactCellStore& other) {
    require(compatible(other), "cannot merge stores with different level, caps or grid");
    for (const auto& [c, e] : other.cells_) {
      Entry& mine = cells_[c];
      mine.count += e.count;
      for (const auto& [p, m] : e.points) {
        auto& v = mine.points[p];
        v += m;
        if (v == 0) mine.points.erase(p);
      }
      if (mine.count == 0 && mine.points.empty()) cells_.erase(c);
    }
  }

  static ExactCellStore merged(ExactCellStore a, const ExactCellStore& b) {
    a.merge(b);
    return a;
  }

  bool compatible(const ExactCellStore& o) const {
    return level_ == o.level_ && alpha_ == o.alpha_ && beta_ == o.beta_ && grid_ == o.grid_;
  }

  Bytes serialize() const {
    ByteWriter w;
    w.raw("CCS1", 4);
    w.u16(1);
    w.u8(static_cast<std::uint8_t>(Backing::Exact));
    w.i32(level_);
    w.f64(alpha_);
    w.f64(beta_);
    detail::write_grid(w, grid_);
    w.u64(cells_.size());
    for (const auto& [c, e] : cells_) {
      for (auto t : c.lattice) w.i64(t);
      w.i64(e.count);
      w.u64(e.points.size());
      for (const auto& [p, m] : e.points) {
        w.point(p);
        w.i64(m);
      }
    }
    return w.take();
  }

  static ExactCellStore deserialize(const Bytes& blob) {
    ByteReader r(blob);
    r.expect("CCS1", 4);
    require(r.u16() == 1, "unsupported store blob version");
    require(r.u8() == static_cast<std::uint8_t>(Backing::Exact), "blob is not an exact store");
    const int level = r.i32();
    const double alpha = r.f64(), beta = r.f64();
    ExactCellStore s(detail::read_grid(r), level, alpha, beta);
    const int d = s.grid_.dim();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      CellId c{level, std::vector<std::int64_t>(d)};
      for (auto& t : c.lattice) t = r.i64();
      Entry& e = s.cells_[c];
      e.count = r.i64();
      const std::uint64_t m = r.u64();
      for (std::uint64_t j = 0; j < m; ++j) {
        Point p = r.point(d);
        e.points[p] = r.i64();
      }
    }
    require(r.done(), "trailing bytes in store blob");
    return s;
  }

  // Approximate resident bytes.
  std::size_t bytes() const {
    std::size_t b = sizeof(*this);
    const std::size_t d = static_cast<std::size_t>(grid_.dim());
    for (const auto& [c, e] : cells_) b += 64 + 8 * d + e.points.size() * (64 + 8 * d + 16);
    return b;
  }

  std::size_t cell_count() const { return cells_.size(); }
  int level() const { return level_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const Grid& grid() const { return grid_; }

 private:
  struct Entry {
    std::int64_t count = 0;
    std::map<Point, std::int64_t> points;
  };

  Grid grid_;
  int level_;
  double alpha_, beta_;
  std::map<CellId, Entry> cells_;
};

struct SketchOptions {
  double fail_prob = 0.01;      // delta of the contract
  double max_cells = 4096;      // alpha is clamped to this many cells
  double point_cap = 64;        // largest beta the point tables are sized for
  std::uint64_t seed = 0;
};

// Linear sketch: each cell lands in one bucket per row; buckets keep
// (count, sum of codes, sum of fingerprints) for 1-sparse recovery, plus a
// three-table invertible point table for the points routed through them.
class SketchCellStore {
 public:
  SketchCellStore(Grid grid, int level, double alpha, double beta, SketchOptions opt)
      : grid_(std::move(grid)), encoder_(grid_.delta(), grid_.dim()), level_(level), alpha_(alpha), beta_(beta), opt_(opt) {
    require(level >= -1 && level <= grid_.levels(), "store level out of range");
    require(opt.fail_prob > 0.0 && opt.fail_prob < 1.0, "sketch failure probability must be in (0, 1)");
    radix_ = 2 * static_cast<std::uint64_t>(grid_.delta()) + 2;
    u128 bound = 1;
    for (int j = 0; j < grid_.dim(); ++j) {
      bound *= radix_;
      require(bound < field::kP61, "cell codes do not fit the sketch field");
    }
    code_bound_ = static_cast<std::uint64_t>(bound);
    rows_ = std::max(3, static_cast<int>(std::ceil(std::log2(1.0 / opt.fail_prob))) + 1);
    const double cells = std::min(alpha, opt.max_cells);
    buckets_ = std::max<std::size_t>(8, 4 * static_cast<std::size_t>(std::ceil(std::max(cells, 1.0))));
    const double pts = std::min(beta, opt.point_cap);
    width_ = pts >= 1.0 ? std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(1.5 * pts)) + 1) : 0;
    make_hashes();
    const std::size_t nb = static_cast<std::size_t>(rows_) * buckets_;
    cnt_.assign(nb, 0);
    ids_.assign(nb, 0);
    chk_.assign(nb, 0);
  }

  void update(const Point& p, int sign) { update(grid_.cell_of(p, level_), p, sign); }

  void update(const CellId& c, const Point& p, int sign) {
    const std::uint64_t id = cell_code(c);
    const std::uint64_t fp = cell_fp(id);
    const u128 pc = encoder_.encode(p);
    require(pc < field::kP61, "point code does not fit the sketch field");
    const auto q = static_cast<std::uint64_t>(pc);
    const std::uint64_t qfp = point_fp(q);
    for (int r = 0; r < rows_; ++r) {
      const std::size_t idx = static_cast<std::size_t>(r) * buckets_ + bucket(r, id);
      cnt_[idx] += sign;
      ids_[idx] = signed_add(ids_[idx], id, sign);
      chk_[idx] = signed_add(chk_[idx], fp, sign);
      for (int s = 0; s < 3 && width_ > 0; ++s) {
        const std::size_t pidx = (idx * 3 + s) * width_ + slot(r, s, q);
        add_point_entry(pidx, {sign, signed_add(0, q, sign), signed_add(0, qfp, sign)});
      }
    }
  }

  OrFail<StoreOutput> finalize() const { return finalize_with(alpha_, beta_); }

  OrFail<StoreOutput> finalize_with(double alpha, double beta) const {
    auto cells = peel_cells();
    if (!cells) return Fail{"cell sketch at level " + std::to_string(level_) + " did not decode"};
    StoreOutput out;
    for (const auto& [id, n] : *cells) {
      if (n <= 0) return Fail{"cell sketch decoded a nonpositive count"};
      out.counts.emplace(decode_cell(id), n);
    }
    if (static_cast<double>(out.counts.size()) > alpha)
      return Fail{"store at level " + std::to_string(level_) + " holds " + std::to_string(out.counts.size()) +
                  " cells, cap " + render_double(alpha)};
    for (const auto& [id, n] : *cells) {
      if (static_cast<double>(n) > beta) continue;
      if (!recover_points(id, n, out.small_points))
        return Fail{"point table of a small cell at level " + std::to_string(level_) + " did not decode"};
    }
    std::sort(out.small_points.begin(), out.small_points.end());
    return out;
  }

  void merge(const SketchCellStore& o) {
    require(compatible(o), "cannot merge sketches with different shape or seeds");
    for (std::size_t i = 0; i < cnt_.size(); ++i) {
      cnt_[i] += o.cnt_[i];
      ids_[i] = field::add61(ids_[i], o.ids_[i]);
      chk_[i] = field::add61(chk_[i], o.chk_[i]);
    }
    for (const auto& [i, e] : o.points_) add_point_entry(i, e);
  }

  static SketchCellStore merged(SketchCellStore a, const SketchCellStore& b) {
    a.merge(b);
    return a;
  }

  bool compatible(const SketchCellStore& o) const {
    return level_ == o.level_ && alpha_ == o.alpha_ && beta_ == o.beta_ && grid_ == o.grid_ && rows_ == o.rows_ &&
           buckets_ == o.buckets_ && width_ == o.width_ && opt_.seed == o.opt_.seed;
  }

  Bytes serialize() const {
    ByteWriter w;
    w.raw("CCS1", 4);
    w.u16(1);
    w.u8(static_cast<std::uint8_t>(Backing::Sketch));
    w.i32(level_);
    w.f64(alpha_);
    w.f64(beta_);
    detail::write_grid(w, grid_);
    w.f64(opt_.fail_prob);
    w.f64(opt_.max_cells);
    w.f64(opt_.point_cap);
    w.u64(opt_.seed);
    for (std::size_t i = 0; i < cnt_.size(); ++i) {
      w.i64(cnt_[i]);
      w.u64(ids_[i]);
      w.u64(chk_[i]);
    }
    w.u64(points_.size());
    for (const auto& [i, e] : points_) {
      w.u64(i);
      w.i64(e.cnt);
      w.u64(e.ids);
      w.u64(e.chk);
    }
    return w.take();
  }

  static SketchCellStore deserialize(const Bytes& blob) {
    ByteReader r(blob);
    r.expect("CCS1", 4);
    require(r.u16() == 1, "unsupported store blob version");
    require(r.u8() == static_cast<std::uint8_t>(Backing::Sketch), "blob is not a sketch store");
    const int level = r.i32();
    const double alpha = r.f64(), beta = r.f64();
    Grid grid = detail::read_grid(r);
    SketchOptions opt;
    opt.fail_prob = r.f64();
    opt.max_cells = r.f64();
    opt.point_cap = r.f64();
    opt.seed = r.u64();
    SketchCellStore s(std::move(grid), level, alpha, beta, opt);
    for (std::size_t i = 0; i < s.cnt_.size(); ++i) {
      s.cnt_[i] = r.i64();
      s.ids_[i] = r.u64();
      s.chk_[i] = r.u64();
    }
    const std::uint64_t np = r.u64();
    const std::size_t limit = s.cnt_.size() * 3 * s.width_;
    for (std::uint64_t t = 0; t < np; ++t) {
      const std::uint64_t i = r.u64();
      require(i < limit, "point entry index out of range");
      PointEntry e;
      e.cnt = r.i64();
      e.ids = r.u64();
      e.chk = r.u64();
      s.add_point_entry(i, e);
    }
    require(r.done(), "trailing bytes in store blob");
    return s;
  }

  // Dense cell rows plus the nonzero entries of the point tables.
  std::size_t bytes() const { return sizeof(*this) + 24 * cnt_.size() + 32 * points_.size(); }

  int rows() const { return rows_; }
  std::size_t buckets() const { return buckets_; }
  std::size_t width() const { return width_; }
  int level() const { return level_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const Grid& grid() const { return grid_; }

 private:
  struct PointEntry {
    std::int64_t cnt = 0;
    std::uint64_t ids = 0, chk = 0;
  };

  void add_point_entry(std::size_t i, const PointEntry& d) {
    PointEntry& e = points_[i];
    e.cnt += d.cnt;
    e.ids = field::add61(e.ids, d.ids);
    e.chk = field::add61(e.chk, d.chk);
    if (e.cnt == 0 && e.ids == 0 && e.chk == 0) points_.erase(i);
  }

  static std::uint64_t signed_add(std::uint64_t acc, std::uint64_t v, std::int64_t sign) {
    if (sign == 0) return acc;
    const std::uint64_t m = field::mul61(v, field::from_signed61(sign < 0 ? -sign : sign));
    return sign > 0 ? field::add61(acc, m) : field::sub61(acc, m);
  }

  void make_hashes() {
    auto poly = [&](std::uint64_t family, std::int64_t idx) {
      return std::make_shared<const PolynomialHash>(derive_seed(opt_.seed, family, idx), 4);
    };
    for (int r = 0; r < rows_; ++r) row_hash_.push_back(poly(0xB0C4, r));
    for (int r = 0; r < rows_; ++r)
      for (int s = 0; s < 3; ++s) slot_hash_.push_back(poly(0x5107, 3 * r + s));
    cell_fp_ = poly(0xF1C3, level_);
    point_fp_ = poly(0xF1A7, level_);
  }

  std::uint64_t cell_code(const CellId& c) const {
    u128 code = 0;
    const std::int64_t off = grid_.delta() + 1;
    for (int j = grid_.dim() - 1; j >= 0; --j) code = code * radix_ + static_cast<u128>(c.lattice[j] + off);
    return static_cast<std::uint64_t>(code);
  }

  CellId decode_cell(std::uint64_t code) const {
    CellId c{level_, std::vector<std::int64_t>(grid_.dim())};
    const std::int64_t off = grid_.delta() + 1;
    for (int j = 0; j < grid_.dim(); ++j) {
      c.lattice[j] = static_cast<std::int64_t>(code % radix_) - off;
      code /= radix_;
    }
    return c;
  }

  std::optional<Point> decode_point(std::uint64_t code) const {
    Point p;
    p.coords.resize(grid_.dim());
    const auto delta = static_cast<std::uint64_t>(grid_.delta());
    for (int j = 0; j < grid_.dim(); ++j) {
      p.coords[j] = static_cast<std::int64_t>(code % delta) + 1;
      code /= delta;
    }
    if (code > 0) p.tag = code - 1;
    return p;
  }

  static std::uint64_t low(const PolynomialHash& h, std::uint64_t x) {
    return static_cast<std::uint64_t>(h.evaluate(x).v);
  }
  std::size_t bucket(int r, std::uint64_t id) const { return low(*row_hash_[r], id) % buckets_; }
  std::size_t slot(int r, int s, std::uint64_t q) const { return low(*slot_hash_[static_cast<std::size_t>(3 * r + s)], q) % width_; }
  std::uint64_t cell_fp(std::uint64_t id) const { return low(*cell_fp_, id); }
  std::uint64_t point_fp(std::uint64_t q) const { return low(*point_fp_, q); }

  // 1-sparse test: (count, ids, chk) describe n copies of a single code.
  template <typename Fp>
  static std::optional<std::uint64_t> pure(std::int64_t n, std::uint64_t ids, std::uint64_t chk, Fp fp,
                                           std::uint64_t bound) {
    if (n <= 0) return std::nullopt;
    const std::uint64_t nf = field::from_signed61(n);
    const std::uint64_t id = field::mul61(ids, field::inv61(nf));
    if (id >= bound) return std::nullopt;
    if (field::mul61(fp(id), nf) != chk) return std::nullopt;
    return id;
  }

  std::optional<std::map<std::uint64_t, std::int64_t>> peel_cells() const {
    auto cnt = cnt_;
    auto ids = ids_;
    auto chk = chk_;
    std::map<std::uint64_t, std::int64_t> found;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < cnt.size(); ++i) queue.push_back(i);
    auto fp = [&](std::uint64_t id) { return cell_fp(id); };
    while (!queue.empty()) {
      const std::size_t idx = queue.front();
      queue.pop_front();
      const int r = static_cast<int>(idx / buckets_);
      auto id = pure(cnt[idx], ids[idx], chk[idx], fp, code_bound_);
      if (!id || bucket(r, *id) != idx % buckets_) continue;
      const std::int64_t n = cnt[idx];
      found[*id] += n;
      const std::uint64_t f = cell_fp(*id);
      for (int rr = 0; rr < rows_; ++rr) {
        const std::size_t j = static_cast<std::size_t>(rr) * buckets_ + bucket(rr, *id);
        cnt[j] -= n;
        ids[j] = signed_add(ids[j], *id, -n);
        chk[j] = signed_add(chk[j], f, -n);
        queue.push_back(j);
      }
    }
    for (std::size_t i = 0; i < cnt.size(); ++i)
      if (cnt[i] != 0 || ids[i] != 0 || chk[i] != 0) return std::nullopt;
    return found;
  }

  bool recover_points(std::uint64_t id, std::int64_t n, std::vector<Point>& out) const {
    if (width_ == 0) return false;
    const std::uint64_t nf = field::from_signed61(n);
    const std::uint64_t ids_want = field::mul61(id, nf), chk_want = field::mul61(cell_fp(id), nf);
    const CellId cell = decode_cell(id);
    for (int r = 0; r < rows_; ++r) {
      const std::size_t idx = static_cast<std::size_t>(r) * buckets_ + bucket(r, id);
      if (cnt_[idx] != n || ids_[idx] != ids_want || chk_[idx] != chk_want) continue;
      std::vector<Point> pts;
      if (peel_points(idx, n, cell, pts)) {
        out.insert(out.end(), pts.begin(), pts.end());
        return true;
      }
    }
    return false;
  }

  bool peel_points(std::size_t idx, std::int64_t n, const CellId& cell, std::vector<Point>& out) const {
    const std::size_t base = idx * 3 * width_, len = 3 * width_;
    const int row = static_cast<int>(idx / buckets_);
    std::vector<std::int64_t> cnt(len, 0);
    std::vector<std::uint64_t> ids(len, 0), chk(len, 0);
    for (auto it = points_.lower_bound(base); it != points_.end() && it->first < base + len; ++it) {
      cnt[it->first - base] = it->second.cnt;
      ids[it->first - base] = it->second.ids;
      chk[it->first - base] = it->second.chk;
    }
    auto fp = [&](std::uint64_t q) { return point_fp(q); };
    std::int64_t total = 0;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < len; ++i) queue.push_back(i);
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      auto q = pure(cnt[i], ids[i], chk[i], fp, field::kP61);
      if (!q || slot(row, static_cast<int>(i / width_), *q) != i % width_) continue;
      auto p = decode_point(*q);
      if (!p || encoder_.encode(*p) != *q || !grid_.contains(cell, *p)) return false;
      const std::int64_t m = cnt[i];
      for (std::int64_t t = 0; t < m; ++t) out.push_back(*p);
      total += m;
      const std::uint64_t f = point_fp(*q);
      for (int s = 0; s < 3; ++s) {
        const std::size_t j = static_cast<std::size_t>(s) * width_ + slot(row, s, *q);
        cnt[j] -= m;
        ids[j] = signed_add(ids[j], *q, -m);
        chk[j] = signed_add(chk[j], f, -m);
        queue.push_back(j);
      }
    }
    for (std::size_t i = 0; i < len; ++i)
      if (cnt[i] != 0 || ids[i] != 0 || chk[i] != 0) return false;
    return total == n;
  }

  Grid grid_;
  PointEncoder encoder_;
  int level_;
  double alpha_, beta_;
  SketchOptions opt_;
  std::uint64_t radix_ = 0, code_bound_ = 0;
  int rows_ = 0;
  std::size_t buckets_ = 0, width_ = 0;
  std::vector<std::shared_ptr<const PolynomialHash>> row_hash_, slot_hash_;
  std::shared_ptr<const PolynomialHash> cell_fp_, point_fp_;
  std::vector<std::int64_t> cnt_;
  std::vector<std::uint64_t> ids_, chk_;
  // Point tables kept sparse: only nonzero entries, keyed by flat index.
  std::map<std::size_t, PointEntry> points_;
};

// A store with either backing behind one interface.
class CellStore {
 public:
  CellStore(ExactCellStore s) : impl_(std::move(s)) {}
  CellStore(SketchCellStore s) : impl_(std::move(s)) {}

  static CellStore make(Backing b, const Grid& grid, int level, double alpha, double beta, const SketchOptions& opt = {}) {
    if (b == Backing::Exact) return CellStore(ExactCellStore(grid, level, alpha, beta));
    return CellStore(SketchCellStore(grid, level, alpha, beta, opt));
  }

  void update(const Point& p, int sign) {
    std::visit([&](auto& s) { s.update(p, sign); }, impl_);
  }
  void update(const CellId& c, const Point& p, int sign) {
    std::visit([&](auto& s) { s.update(c, p, sign); }, impl_);
  }
  OrFail<StoreOutput> finalize() const {
    return std::visit([](const auto& s) { return s.finalize(); }, impl_);
  }
  OrFail<StoreOutput> finalize_with(double alpha, double beta) const {
    return std::visit([&](const auto& s) { return s.finalize_with(alpha, beta); }, impl_);
  }
  void merge(const CellStore& o) {
    require(impl_.index() == o.impl_.index(), "cannot merge stores with different backings");
    std::visit(
        [&](auto& s) {
          using S = std::decay_t<decltype(s)>;
          s.merge(std::get<S>(o.impl_));
        },
        impl_);
  }
  Bytes serialize() const {
    return std::visit([](const auto& s) { return s.serialize(); }, impl_);
  }
  static CellStore deserialize(const Bytes& blob) {
    require(blob.size() > 6, "truncated blob");
    if (blob[6] == static_cast<std::uint8_t>(Backing::Exact)) return CellStore(ExactCellStore::deserialize(blob));
    return CellStore(SketchCellStore::deserialize(blob));
  }
  std::size_t bytes() const {
    return std::visit([](const auto& s) { return s.bytes(); }, impl_);
  }
  Backing backing() const { return impl_.index() == 0 ? Backing::Exact : Backing::Sketch; }
  int level() const {
    return std::visit([](const auto& s) { return s.level(); }, impl_);
  }

 private:
  std::variant<ExactCellStore, SketchCellStore> impl_;
};

}  // namespace capacore
