#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "capacore/cellstore.hpp"
#include "capacore/coreset.hpp"
#include "capacore/error.hpp"
#include "capacore/params.hpp"
#include "capacore/streaming.hpp"
#include "capacore/wire.hpp"

namespace capacore {

// Duplex byte-blob transport between one machine and the coordinator.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(Bytes blob) = 0;
  virtual Bytes recv() = 0;
};

class BlobQueue {
 public:
  void push(Bytes b) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      q_.push_back(std::move(b));
    }
    cv_.notify_one();
  }
  Bytes pop() {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return !q_.empty(); });
    Bytes b = std::move(q_.front());
    q_.pop_front();
    return b;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> q_;
};

// In-process link; each endpoint counts the bytes it sends.
class InProcessLink {
 public:
  class End : public Channel {
   public:
    End(BlobQueue& out, BlobQueue& in) : out_(out), in_(in) {}
    void send(Bytes blob) override {
      sent_ += blob.size();
      out_.push(std::move(blob));
    }
    Bytes recv() override { return in_.pop(); }
    std::uint64_t sent() const { return sent_; }

   private:
    BlobQueue& out_;
    BlobQueue& in_;
    std::uint64_t sent_ = 0;
  };

  InProcessLink() : coordinator_(to_machine_, to_coordinator_), machine_(to_coordinator_, to_machine_) {}
  End& coordinator() { return coordinator_; }
  End& machine() { return machine_; }

 private:
  BlobQueue to_machine_, to_coordinator_;
  End coordinator_, machine_;
};

struct ProtocolOptions {
  bool exact_counts = false;
};

struct ProtocolResult {
  OrFail<WeightedCoreset> coreset = Fail{"not run"};
  std::uint64_t comm_bytes = 0;        // every blob in either direction
  std::uint64_t broadcast_bytes = 0;   // coordinator to machines
  std::vector<std::uint64_t> machine_bytes;  // per machine, machine to coordinator
  std::vector<double> machine_caps;          // analytic cap per machine message
};

namespace detail {

// Local answer of one machine for one store of one guess: FAIL if more than
// alpha local cells, else (C, f, points of cells with at most beta points).
inline void write_local(ByteWriter& w, const ExactCellStore& s, double alpha, double beta) {
  auto out = s.finalize_with(alpha, beta);
  if (failed(out)) {
    w.u8(1);
    return;
  }
  const StoreOutput& so = std::get<StoreOutput>(out);
  w.u8(0);
  w.u64(so.counts.size());
  for (const auto& [c, n] : so.counts) {
    for (auto t : c.lattice) w.i64(t);
    w.i64(n);
  }
  w.u64(so.small_points.size());
  for (const auto& p : so.small_points) w.point(p);
}

struct LocalPiece {
  bool fail = false;
  CellCounts counts;
  std::vector<Point> points;
};

inline LocalPiece read_local(ByteReader& r, int level, int d) {
  LocalPiece lp;
  if (r.u8()) {
    lp.fail = true;
    return lp;
  }
  const std::uint64_t nc = r.u64();
  for (std::uint64_t i = 0; i < nc; ++i) {
    CellId c{level, std::vector<std::int64_t>(static_cast<std::size_t>(d))};
    for (auto& t : c.lattice) t = r.i64();
    lp.counts[c] = r.i64();
  }
  const std::uint64_t np = r.u64();
  for (std::uint64_t i = 0; i < np; ++i) lp.points.push_back(r.point(d));
  return lp;
}

// Upper bound on the bytes of one local answer under caps (alpha, beta).
inline double local_cap_bytes(double alpha, double beta, int d) {
  const double cell = 8.0 * d + 8.0, point = 8.0 * d + 9.0;
  return 17.0 + alpha * cell + alpha * std::min(beta, 1e300 / std::max(alpha, 1.0)) * point;
}

inline Bytes broadcast_blob(const Params& params, std::uint64_t seed, const Grid& grid, bool exact) {
  ByteWriter w;
  w.raw("CCB1", 4);
  w.str(params.serialize());
  w.u64(seed);
  w.u8(exact ? 1 : 0);
  for (auto s : grid.shift_fp()) w.i64(s);
  return w.take();
}

inline Bytes guesses_blob(const std::vector<double>& guesses) {
  ByteWriter w;
  w.raw("CCG1", 4);
  w.u32(static_cast<std::uint32_t>(guesses.size()));
  for (double o : guesses) w.f64(o);
  return w.take();
}

// Machine side: two rounds (local count, then per-guess store answers).
inline void run_machine(Channel& ch, const std::vector<Point>& shard) {
  Bytes b = ch.recv();
  ByteReader r(b);
  r.expect("CCB1", 4);
  const Params params = Params::parse(r.str());
  const std::uint64_t seed = r.u64();
  const bool exact = r.u8() != 0;
  std::vector<std::int64_t> shift(static_cast<std::size_t>(params.d()));
  for (auto& s : shift) s = r.i64();
  const Grid grid(params.delta(), params.d(), shift);
  {
    ByteWriter w;
    w.raw("CCN1", 4);
    w.u64(shard.size());
    ch.send(w.take());
  }
  Bytes gb = ch.recv();
  ByteReader gr(gb);
  gr.expect("CCG1", 4);
  std::vector<double> guesses(gr.u32());
  for (auto& o : guesses) o = gr.f64();

  const StoreLayout layout(params, exact, guesses);
  const PolynomialPool pool(params, seed);
  const PointEncoder enc(params.delta(), params.d());
  std::vector<ExactCellStore> stores;
  for (const auto& sl : layout.slots()) stores.emplace_back(grid, sl.level, sl.alpha, sl.beta);
  for (const auto& p : shard) {
    grid.check_point(p);
    const u128 code = enc.encode(p);
    for (std::size_t s = 0; s < stores.size(); ++s) {
      const auto& sl = layout.slots()[s];
      if (sl.threshold.accepts(pool.get(sl.role, sl.level)->evaluate(code))) stores[s].update(p, +1);
    }
  }
  ByteWriter w;
  w.raw("CCM1", 4);
  const int L = params.L();
  for (std::size_t g = 0; g < guesses.size(); ++g) {
    const LevelSchedule s = params.schedule(guesses[g]);
    for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample})
      for (int i = role == HashRole::Cell ? -1 : 0; i <= L; ++i) {
        const auto [alpha, beta] = StoreLayout::caps(s, role, i);
        write_local(w, stores[layout.slot_of(g, role, i)], alpha, beta);
      }
  }
  ch.send(w.take());
}

}  // namespace detail

// Coordinator plus s machines over in-process links. The output equals the
// offline build on the union of the shards with the same seed.
inline ProtocolResult run_protocol(const std::vector<std::vector<Point>>& shards, const Params& params,
                                   std::uint64_t seed, const ProtocolOptions& opt = {}) {
  require(!shards.empty(), "need at least one machine");
  const std::size_t s = shards.size();
  const Grid grid = grid_for_seed(params, seed);
  std::vector<std::unique_ptr<InProcessLink>> links;
  for (std::size_t j = 0; j < s; ++j) links.push_back(std::make_unique<InProcessLink>());
  std::vector<std::exception_ptr> errors(s);
  std::vector<std::thread> machines;
  for (std::size_t j = 0; j < s; ++j)
    machines.emplace_back([&, j] {
      try {
        detail::run_machine(links[j]->machine(), shards[j]);
      } catch (...) {
        errors[j] = std::current_exception();
        links[j]->machine().send(Bytes{});
      }
    });

  ProtocolResult res;
  auto join_and_rethrow = [&] {
    for (auto& t : machines) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  };
  try {
    const Bytes hello = detail::broadcast_blob(params, seed, grid, opt.exact_counts);
    for (auto& l : links) l->coordinator().send(hello);
    std::uint64_t n = 0;
    for (auto& l : links) {
      Bytes b = l->coordinator().recv();
      if (b.empty()) throw std::runtime_error("machine aborted");
      ByteReader r(b);
      r.expect("CCN1", 4);
      n += r.u64();
    }
    std::vector<double> guesses;
    if (n > 0) guesses = guess_grid(params, n);
    else guesses = {1.0};
    const Bytes gblob = detail::guesses_blob(guesses);
    for (auto& l : links) l->coordinator().send(gblob);

    const int L = params.L(), d = params.d();
    const std::size_t per_guess = static_cast<std::size_t>(3 * (L + 1) + 1);
    // merged[g][store] = (fail, counts, points)
    std::vector<std::vector<detail::LocalPiece>> merged(guesses.size(), std::vector<detail::LocalPiece>(per_guess));
    for (std::size_t j = 0; j < s; ++j) {
      Bytes b = links[j]->coordinator().recv();
      if (b.empty()) throw std::runtime_error("machine aborted");
      ByteReader r(b);
      r.expect("CCM1", 4);
      for (std::size_t g = 0; g < guesses.size(); ++g) {
        std::size_t idx = 0;
        for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample})
          for (int i = role == HashRole::Cell ? -1 : 0; i <= L; ++i, ++idx) {
            detail::LocalPiece lp = detail::read_local(r, i, d);
            auto& m = merged[g][idx];
            if (lp.fail) m.fail = true;
            for (const auto& [c, cnt] : lp.counts) m.counts[c] += cnt;
            m.points.insert(m.points.end(), lp.points.begin(), lp.points.end());
          }
      }
      require(r.done(), "trailing bytes in machine message");
    }
    join_and_rethrow();
    machines.clear();

    for (std::size_t j = 0; j < s; ++j) {
      res.machine_bytes.push_back(links[j]->machine().sent());
      double cap = 17.0 + 8.0 + 4.0 + 4.0;
      for (double o : guesses) {
        const LevelSchedule sch = params.schedule(o);
        for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample})
          for (int i = role == HashRole::Cell ? -1 : 0; i <= L; ++i) {
            const auto [alpha, beta] = StoreLayout::caps(sch, role, i);
            cap += detail::local_cap_bytes(alpha, beta, d);
          }
      }
      res.machine_caps.push_back(cap);
      res.broadcast_bytes += links[j]->coordinator().sent();
      res.comm_bytes += links[j]->coordinator().sent() + links[j]->machine().sent();
    }

    auto assemble = [&](std::size_t g) -> OrFail<WeightedCoreset> {
      const LevelSchedule sch = params.schedule(guesses[g]);
      RecoveredStores rec;
      rec.h.resize(static_cast<std::size_t>(L + 2));
      rec.hp.resize(static_cast<std::size_t>(L + 2));
      rec.hhat.resize(static_cast<std::size_t>(L + 2));
      std::size_t idx = 0;
      for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample}) {
        auto& dst = role == HashRole::Cell ? rec.h : (role == HashRole::Part ? rec.hp : rec.hhat);
        for (int i = role == HashRole::Cell ? -1 : 0; i <= L; ++i, ++idx) {
          const auto& m = merged[g][idx];
          if (m.fail) return Fail{"a machine reported FAIL for a store at level " + std::to_string(i)};
          const double beta = StoreLayout::caps(sch, role, i).second;
          StoreOutput so;
          for (const auto& [c, cnt] : m.counts)
            if (cnt > 0) so.counts.emplace(c, cnt);
          for (const auto& p : m.points) {
            auto it = so.counts.find(grid.cell_of(p, i));
            if (it != so.counts.end() && static_cast<double>(it->second) <= beta) so.small_points.push_back(p);
          }
          std::sort(so.small_points.begin(), so.small_points.end());
          dst[static_cast<std::size_t>(i + 1)] = std::move(so);
        }
      }
      return assemble_from_stores(rec, params, guesses[g], seed, grid, opt.exact_counts);
    };

    std::vector<double> tried;
    std::string last = "no guesses";
    for (std::size_t g = 0; g < guesses.size(); ++g) {
      tried.push_back(guesses[g]);
      auto r = assemble(g);
      if (!failed(r)) {
        WeightedCoreset c = std::get<WeightedCoreset>(std::move(r));
        c.meta.attempted_o = n > 0 ? tried : std::vector<double>{};
        res.coreset = std::move(c);
        return res;
      }
      last = std::get<Fail>(r).reason;
    }
    res.coreset = Fail{"every guess o FAILed; last: " + last};
    return res;
  } catch (...) {
    // An empty blob makes any machine still waiting abort.
    for (auto& l : links) l->coordinator().send(Bytes{});
    for (auto& t : machines)
      if (t.joinable()) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    throw;
  }
}

}  // namespace capacore
