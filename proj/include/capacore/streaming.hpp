#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "capacore/cellstore.hpp"
#include "capacore/coreset.hpp"
#include "capacore/error.hpp"
#include "capacore/estimator.hpp"
#include "capacore/params.hpp"

namespace capacore {

struct EngineOptions {
  bool exact_counts = false;
  Backing backing = Backing::Exact;
  SketchOptions sketch;
  std::size_t max_points = 0;  // sizes the guess grid; 0 means Delta^d
};

// Store layout shared by the streaming engine and the distributed machines:
// one store per (role, level, rate). Guesses whose hashes coincide read the
// same store with their own caps.
class StoreLayout {
 public:
  struct Slot {
    HashRole role;
    int level;
    BernoulliThreshold threshold;
    double alpha = 0, beta = 0;  // largest caps among the guesses using it
  };

  StoreLayout(const Params& params, bool exact_counts, std::vector<double> guesses)
      : L_(params.L()), guesses_(std::move(guesses)) {
    std::map<std::tuple<int, int, double>, std::size_t> index;
    for (double o : guesses_) {
      const LevelSchedule s = params.schedule(o);
      const SamplingRates rates = SamplingRates::from(s, exact_counts);
      Instance inst;
      for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample}) {
        auto& v = inst[role];
        for (int i = -1; i <= L_; ++i) {
          if (i == -1 && role != HashRole::Cell) {
            v.push_back(kNone);
            continue;
          }
          const double rate = rates.rate(role, i);
          const auto [alpha, beta] = caps(s, role, i);
          const auto key = std::make_tuple(static_cast<int>(role), i, rate);
          auto it = index.find(key);
          if (it == index.end()) {
            it = index.emplace(key, slots_.size()).first;
            slots_.push_back({role, i, BernoulliThreshold(rate), alpha, beta});
          }
          Slot& slot = slots_[it->second];
          slot.alpha = std::max(slot.alpha, alpha);
          slot.beta = std::max(slot.beta, beta);
          v.push_back(it->second);
        }
      }
      instances_.push_back(std::move(inst));
    }
  }

  static std::pair<double, double> caps(const LevelSchedule& s, HashRole role, int level) {
    switch (role) {
      case HashRole::Cell:
        return {s.at(s.alpha, level), 1.0};
      case HashRole::Part:
        return {s.at(s.alpha_prime, level), 1.0};
      case HashRole::Sample:
        return {s.at(s.alpha_hat, level), s.at(s.beta_hat, level)};
    }
    return {0, 0};
  }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  const std::vector<Slot>& slots() const { return slots_; }
  const std::vector<double>& guesses() const { return guesses_; }
  std::size_t slot_of(std::size_t guess, HashRole role, int level) const {
    return instances_[guess].at(role)[static_cast<std::size_t>(level + 1)];
  }
  int L() const { return L_; }

 private:
  using Instance = std::map<HashRole, std::vector<std::size_t>>;
  int L_;
  std::vector<double> guesses_;
  std::vector<Slot> slots_;
  std::vector<Instance> instances_;
};

// Finalizes every store of one guess with that guess's caps and assembles.
template <typename Finalize>
OrFail<WeightedCoreset> assemble_guess(const StoreLayout& layout, std::size_t g, const Params& params,
                                       std::uint64_t seed, const Grid& grid, bool exact_counts, Finalize&& fin) {
  const double o = layout.guesses()[g];
  const LevelSchedule s = params.schedule(o);
  const int L = params.L();
  RecoveredStores rec;
  rec.h.resize(static_cast<std::size_t>(L + 2));
  rec.hp.resize(static_cast<std::size_t>(L + 2));
  rec.hhat.resize(static_cast<std::size_t>(L + 2));
  for (auto role : {HashRole::Cell, HashRole::Part, HashRole::Sample}) {
    auto& dst = role == HashRole::Cell ? rec.h : (role == HashRole::Part ? rec.hp : rec.hhat);
    for (int i = role == HashRole::Cell ? -1 : 0; i <= L; ++i) {
      const auto [alpha, beta] = StoreLayout::caps(s, role, i);
      OrFail<StoreOutput> out = fin(layout.slot_of(g, role, i), alpha, beta);
      if (failed(out)) return std::get<Fail>(out);
      dst[static_cast<std::size_t>(i + 1)] = std::move(std::get<StoreOutput>(out));
    }
  }
  return assemble_from_stores(rec, params, o, seed, grid, exact_counts);
}

// One-pass dynamic-stream construction over every guess o of the grid.
class StreamEngine {
 public:
  StreamEngine(const Params& params, std::uint64_t seed, EngineOptions opt = {})
      : params_(params),
        seed_(seed),
        opt_(opt),
        grid_(grid_for_seed(params, seed)),
        pool_(params, seed),
        encoder_(params.delta(), params.d()),
        layout_(params, opt.exact_counts, guess_grid(params, opt.max_points ? opt.max_points : default_points(params))) {
    for (std::size_t i = 0; i < layout_.slots().size(); ++i) {
      const auto& sl = layout_.slots()[i];
      SketchOptions so = opt.sketch;
      so.seed = derive_seed(seed, 0x5C37, static_cast<std::int64_t>(i));
      stores_.push_back(CellStore::make(opt.backing, grid_, sl.level, sl.alpha, sl.beta, so));
    }
  }

  void process(const Point& p, int sign) {
    require(sign == 1 || sign == -1, "update sign must be +1 or -1");
    grid_.check_point(p);
    const int L = params_.L();
    std::vector<CellId> cells;
    for (int i = -1; i <= L; ++i) cells.push_back(grid_.cell_of(p, i));
    const u128 code = encoder_.encode(p);
    std::map<std::pair<HashRole, int>, PolynomialHash::Value> values;
    for (std::size_t s = 0; s < stores_.size(); ++s) {
      const auto& sl = layout_.slots()[s];
      bool take = sl.threshold.always();
      if (!take && !sl.threshold.never()) {
        auto key = std::make_pair(sl.role, sl.level);
        auto it = values.find(key);
        if (it == values.end()) it = values.emplace(key, pool_.get(sl.role, sl.level)->evaluate(code)).first;
        take = sl.threshold.accepts(it->second);
      }
      if (take) stores_[s].update(cells[static_cast<std::size_t>(sl.level + 1)], p, sign);
    }
    net_ += sign;
    ++updates_;
  }

  const std::vector<double>& guesses() const { return layout_.guesses(); }

  OrFail<WeightedCoreset> finalize_guess(std::size_t g) const {
    return assemble_guess(layout_, g, params_, seed_, grid_, opt_.exact_counts,
                          [&](std::size_t slot, double a, double b) { return stores_[slot].finalize_with(a, b); });
  }

  OrFail<WeightedCoreset> finalize(double o) const {
    for (std::size_t g = 0; g < guesses().size(); ++g)
      if (guesses()[g] == o) return finalize_guess(g);
    throw UsageError("guess " + render_double(o) + " is not on the engine's grid");
  }

  // Smallest non-FAIL guess among o <= n (sqrt(d) Delta)^r, n the net count.
  WeightedCoreset select_o() const {
    if (net_ <= 0) {
      auto r = finalize_guess(0);
      if (failed(r)) throw FailError("empty stream FAILed: " + std::get<Fail>(r).reason);
      return std::get<WeightedCoreset>(std::move(r));
    }
    const double top = params_.max_guess(static_cast<std::size_t>(net_));
    std::vector<double> tried;
    std::string last;
    for (std::size_t g = 0; g < guesses().size() && guesses()[g] <= top; ++g) {
      tried.push_back(guesses()[g]);
      auto r = finalize_guess(g);
      if (!failed(r)) {
        WeightedCoreset c = std::get<WeightedCoreset>(std::move(r));
        c.meta.attempted_o = tried;
        return c;
      }
      last = std::get<Fail>(r).reason;
    }
    throw FailError("every guess o FAILed (" + std::to_string(tried.size()) + " tried); last: " + last);
  }

  std::int64_t net_count() const { return net_; }
  std::uint64_t updates() const { return updates_; }
  std::size_t store_count() const { return stores_.size(); }
  std::size_t bytes() const {
    std::size_t b = 0;
    for (const auto& s : stores_) b += s.bytes();
    return b;
  }
  const Grid& grid() const { return grid_; }
  const StoreLayout& layout() const { return layout_; }

  static std::size_t default_points(const Params& params) {
    double v = 1;
    for (int j = 0; j < params.d(); ++j) v *= static_cast<double>(params.delta());
    return static_cast<std::size_t>(std::min(v, 1e15));
  }

 private:
  Params params_;
  std::uint64_t seed_;
  EngineOptions opt_;
  Grid grid_;
  PolynomialPool pool_;
  PointEncoder encoder_;
  StoreLayout layout_;
  std::vector<CellStore> stores_;
  std::int64_t net_ = 0;
  std::uint64_t updates_ = 0;
};

}  // namespace capacore
