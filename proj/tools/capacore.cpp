#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "capacore/capacore.hpp"

using namespace capacore;

namespace {

struct ParamFlags {
  int k = 2;
  double r = 2.0;
  double eps = 0.25;
  double eta = 0.25;
  std::int64_t delta = 0;  // 0: infer from the input
  int d = 0;               // 0: infer from the input
  std::string params = "theory";
};

struct Config {
  std::string input, output, coreset, centers, full_input;
  std::string mode = "offline";
  std::string backing = "exact";
  std::size_t machines = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool exact_counts = false;
  double o = 0;
  unsigned threads = 0;
  // gen
  std::size_t n = 100;
  int clusters = 2;
  std::string shape = "gaussian";
  double spread = 0.05;
  bool stream = false;
  double delete_frac = 0.3;
  // eval
  std::size_t center_samples = 50;
  std::string t_grid = "full";
  bool with_opt = false;
  // assign
  double capacity = 0;
  ParamFlags p;
};

std::uint64_t resolve_seed(const Config& c) {
  if (c.seed_given) return c.seed;
  if (const char* env = std::getenv("CAPACORE_SEED")) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(env, &pos);
      if (pos == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("CAPACORE_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

std::int64_t resolve_delta(std::int64_t delta, const std::vector<Point>& pts) {
  if (delta <= 0) {
    std::int64_t m = 2;
    for (const auto& p : pts)
      for (auto x : p.coords) m = std::max(m, x);
    delta = m;
  }
  if (!is_power_of_two(delta)) {
    const auto up = next_power_of_two(delta);
    std::cerr << "warning: Delta=" << delta << " is not a power of two; using " << up << "\n";
    delta = up;
  }
  return delta;
}

Params make_params(const ParamFlags& f, std::int64_t delta, int d) {
  ParamsInput in;
  in.k = f.k;
  in.r = f.r;
  in.eps = f.eps;
  in.eta = f.eta;
  in.delta = delta;
  in.d = d;
  std::tie(in.mode, in.scale) = parse_params_mode(f.params);
  return Params::derive(in);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path);
  return f;
}

template <typename F>
void with_output(const std::string& path, F&& f) {
  if (path.empty() || path == "-") {
    f(std::cout);
  } else {
    auto out = open_output(path);
    f(out);
  }
}

void write_config_header(std::ostream& os, const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) {
  os << "% command=" << cmd << "\n";
  for (const auto& [k, v] : kv) os << "% " << k << "=" << v << "\n";
}

int cmd_gen(const Config& c) {
  require(c.p.d >= 1, "gen needs --d");
  const std::int64_t delta = resolve_delta(c.p.delta > 0 ? c.p.delta : 8, {});
  GenConfig g;
  g.n = c.n;
  g.clusters = c.clusters;
  g.spread = c.spread;
  if (c.shape == "gaussian") g.shape = GenShape::Gaussian;
  else if (c.shape == "uniform") g.shape = GenShape::Uniform;
  else throw UsageError("--shape must be gaussian or uniform");
  const std::uint64_t seed = resolve_seed(c);
  const GenOutput out = generate_points(g, delta, c.p.d, seed);
  with_output(c.output, [&](std::ostream& os) {
    write_config_header(os, c.stream ? "gen-stream" : "gen",
                        {{"n", std::to_string(c.n)},
                         {"clusters", std::to_string(c.clusters)},
                         {"shape", c.shape},
                         {"spread", render_double(c.spread)},
                         {"Delta", std::to_string(delta)},
                         {"d", std::to_string(c.p.d)},
                         {"seed", std::to_string(seed)}});
    for (const auto& m : out.means) os << "% mean=" << format_point_coords(m) << "\n";
    if (c.stream) {
      Rng rng(derive_seed(seed, 0x57EA, 0));
      const std::size_t updates = static_cast<std::size_t>(static_cast<double>(c.n) / (1.0 - c.delete_frac));
      os << "% delete_frac=" << render_double(c.delete_frac) << "\n";
      write_stream(os, random_stream(out.points, updates, c.delete_frac, rng));
    } else {
      write_points(os, out.points);
    }
  });
  return 0;
}

int cmd_build(const Config& c) {
  const std::uint64_t seed = resolve_seed(c);
  std::vector<Point> points;
  std::vector<StreamUpdate> updates;
  if (c.mode == "stream") {
    updates = read_stream_file(c.input, c.p.d);
    for (const auto& u : updates) points.push_back(u.point);
  } else if (c.mode == "offline" || c.mode == "dist") {
    points = read_points_file(c.input, c.p.d);
  } else {
    throw UsageError("--mode must be offline, stream or dist");
  }
  const int d = c.p.d > 0 ? c.p.d : (points.empty() ? 0 : static_cast<int>(points.front().dim()));
  require(d >= 1, "cannot infer d from an empty input; pass --d");
  const Params params = make_params(c.p, resolve_delta(c.p.delta, points), d);

  std::optional<WeightedCoreset> result;
  if (c.mode == "offline") {
    require(c.backing == "exact", "--backing applies to stream mode only");
    const PreparedInput prepared(points, params, seed);
    if (c.o > 0) {
      auto r = build_for_o(prepared, c.o, {c.exact_counts});
      if (failed(r)) throw FailError("o=" + render_double(c.o) + " FAILed: " + std::get<Fail>(r).reason);
      result = std::get<WeightedCoreset>(std::move(r));
    } else {
      result = build_auto(prepared, {c.exact_counts});
    }
  } else if (c.mode == "stream") {
    EngineOptions eo;
    eo.exact_counts = c.exact_counts;
    if (c.backing == "sketch") eo.backing = Backing::Sketch;
    else if (c.backing != "exact") throw UsageError("--backing must be exact or sketch");
    eo.max_points = std::max<std::size_t>(updates.size(), 1);
    StreamEngine engine(params, seed, eo);
    for (const auto& u : updates) engine.process(u.point, u.sign);
    if (c.o > 0) {
      auto r = engine.finalize(c.o);
      if (failed(r)) throw FailError("o=" + render_double(c.o) + " FAILed: " + std::get<Fail>(r).reason);
      result = std::get<WeightedCoreset>(std::move(r));
    } else {
      result = engine.select_o();
    }
    std::cerr << "stream updates=" << engine.updates() << " stores=" << engine.store_count()
              << " store_bytes=" << engine.bytes() << "\n";
  } else {
    require(c.machines >= 1, "--machines must be >= 1");
    std::vector<std::vector<Point>> shards(c.machines);
    for (std::size_t i = 0; i < points.size(); ++i) shards[i % c.machines].push_back(points[i]);
    const ProtocolResult pr = run_protocol(shards, params, seed, {c.exact_counts});
    (c.output.empty() || c.output == "-" ? std::cerr : std::cout) << "comm_bytes=" << pr.comm_bytes << "\n";
    if (failed(pr.coreset)) throw FailError(std::get<Fail>(pr.coreset).reason);
    result = std::get<WeightedCoreset>(pr.coreset);
  }
  with_output(c.output, [&](std::ostream& os) { write_coreset(os, *result); });
  std::cerr << "o=" << render_double(result->meta.o) << " size=" << result->size()
            << " total_weight=" << render_double(result->total_weight()) << "\n";
  return 0;
}

std::vector<double> parse_t_grid(const std::string& text, std::size_t n, std::size_t k) {
  if (text == "full") return feasible_t_grid(n, k);
  std::vector<double> g;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) g.push_back(parse_double(tok, "--t-grid"));
  require(!g.empty(), "--t-grid is empty");
  return g;
}

int cmd_eval(const Config& c) {
  const WeightedCoreset cs = [&] {
    auto f = open_input(c.coreset);
    return read_coreset(f);
  }();
  const Params& params = cs.meta.params;
  const std::vector<Point> Q = read_points_file(c.input, params.d());
  std::vector<Point> pts;
  std::vector<double> w;
  for (const auto& p : cs.points) {
    pts.push_back(p.point);
    w.push_back(p.weight);
  }
  Rng rng(derive_seed(resolve_seed(c), 0xE7A1, 0));
  const auto centers = sample_center_sets(c.center_samples, params.k(), params.delta(), params.d(), rng);
  const auto t_grid = parse_t_grid(c.t_grid, Q.size(), static_cast<std::size_t>(params.k()));

  const unsigned workers = std::max(1u, std::min<unsigned>(c.threads ? c.threads : std::thread::hardware_concurrency(),
                                                            static_cast<unsigned>(std::max<std::size_t>(centers.size(), 1))));
  std::vector<SandwichReport> parts(workers);
  std::vector<std::thread> pool;
  for (unsigned wi = 0; wi < workers; ++wi)
    pool.emplace_back([&, wi] {
      std::vector<std::vector<Point>> mine;
      for (std::size_t z = wi; z < centers.size(); z += workers) mine.push_back(centers[z]);
      parts[wi] = sandwich_audit(Q, pts, w, mine, t_grid, params.eps(), params.eta(), params.r());
      for (auto& row : parts[wi].rows) row.z_id = wi + row.z_id * workers;
    });
  for (auto& t : pool) t.join();
  SandwichReport rep;
  for (auto& p : parts) {
    rep.rows.insert(rep.rows.end(), p.rows.begin(), p.rows.end());
    rep.pairs += p.pairs;
    rep.violated_symmetric += p.violated_symmetric;
    rep.violated_two_tier += p.violated_two_tier;
    rep.worst_ratio_symmetric = std::max(rep.worst_ratio_symmetric, p.worst_ratio_symmetric);
    rep.worst_ratio_two_tier = std::max(rep.worst_ratio_two_tier, p.worst_ratio_two_tier);
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const SandwichRow& a, const SandwichRow& b) { return a.z_id < b.z_id; });
  with_output(c.output, [&](std::ostream& os) { write_audit_csv(os, rep); });
  std::cerr << "pairs=" << rep.pairs << " violated_symmetric=" << rep.violated_symmetric
            << " violated_two_tier=" << rep.violated_two_tier
            << " worst_symmetric=" << render_double(rep.worst_ratio_symmetric)
            << " worst_two_tier=" << render_double(rep.worst_ratio_two_tier) << "\n";
  if (c.with_opt) {
    const OptResult opt = brute_opt(Q, params.k(), params.r(), params.delta(), params.d());
    std::cerr << "opt=" << render_double(opt.value) << " o=" << render_double(cs.meta.o) << "\n";
  }
  return 0;
}

int cmd_assign(const Config& c) {
  const WeightedCoreset cs = [&] {
    auto f = open_input(c.coreset);
    return read_coreset(f);
  }();
  const Params& params = cs.meta.params;
  const std::vector<Point> centers = read_points_file(c.centers, params.d());
  require(!centers.empty(), "centers file is empty");
  require(c.capacity > 0, "--capacity must be positive");
  std::vector<Point> Q;
  if (!c.full_input.empty()) Q = read_points_file(c.full_input, params.d());
  auto res = assignment_pipeline(Q, cs, centers, c.capacity, params.r());
  if (!res) throw FailError("coreset weight does not fit k * capacity");

  with_output(c.output, [&](std::ostream& os) {
    write_config_header(os, "assign",
                        {{"coreset", c.coreset},
                         {"centers", c.centers},
                         {"capacity", render_double(c.capacity)},
                         {"full_input", c.full_input}});
    auto emit = [&](const std::vector<Point>& pts, const Assignment& a, const std::string& label) {
      os << "% section=" << label << "\n";
      for (std::size_t i = 0; i < pts.size(); ++i) os << format_point_coords(pts[i]) << " -> " << a.map[i] << "\n";
      os << "% cost=" << render_double(a.cost) << "\n% sizes=";
      for (std::size_t z = 0; z < a.sizes.size(); ++z) os << (z ? " " : "") << render_double(a.sizes[z]);
      os << "\n";
    };
    std::vector<Point> cpts;
    for (const auto& p : cs.points) cpts.push_back(p.point);
    emit(cpts, res->canonical.assignment, "coreset");
    os << "% fractional_cost=" << render_double(res->fractional.cost)
       << "\n% split_points=" << res->integral_report.split_points << "\n";
    if (!Q.empty()) emit(Q, res->full.assignment, "full");
  });
  return 0;
}

void add_param_flags(CLI::App* sub, Config& c) {
  sub->add_option("--k", c.p.k, "number of centers")->check(CLI::PositiveNumber);
  sub->add_option("--r", c.p.r, "distance exponent r >= 1");
  sub->add_option("--eps", c.p.eps, "cost accuracy in (0, 0.5]");
  sub->add_option("--eta", c.p.eta, "capacity slack in (0, 0.5]");
  sub->add_option("--delta", c.p.delta, "grid side Delta (rounded up to a power of two)");
  sub->add_option("--d", c.p.d, "dimension");
  sub->add_option("--params", c.p.params, "theory | practical:c");
  sub->add_flag("--exact-counts", c.exact_counts, "use exact cell counts instead of sampled estimates");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capacitated clustering coresets"};
  app.require_subcommand(1);
  Config c;
  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& v) {
          c.seed = v;
          c.seed_given = true;
        },
        "master seed (falls back to CAPACORE_SEED)");
    sub->add_option("--threads", c.threads, "worker cap");
  };

  auto* gen = app.add_subcommand("gen", "synthesize a point set or a dynamic stream");
  seed_opt(gen);
  gen->add_option("--n", c.n, "number of points");
  gen->add_option("--clusters", c.clusters, "number of clusters");
  gen->add_option("--shape", c.shape, "gaussian | uniform");
  gen->add_option("--spread", c.spread, "cluster standard deviation as a fraction of Delta");
  gen->add_option("--delta", c.p.delta, "grid side Delta");
  gen->add_option("--d", c.p.d, "dimension")->required();
  gen->add_flag("--stream", c.stream, "emit a dynamic stream with deletions");
  gen->add_option("--delete-frac", c.delete_frac, "fraction of deletions in --stream output");
  gen->add_option("--out,-o", c.output, "output file (default stdout)");

  auto* build = app.add_subcommand("build", "build a coreset");
  seed_opt(build);
  add_param_flags(build, c);
  build->add_option("--input,-i", c.input, "point file, or stream file with --mode stream")->required();
  build->add_option("--out,-o", c.output, "coreset file (default stdout)");
  build->add_option("--mode", c.mode, "offline | stream | dist");
  build->add_option("--machines", c.machines, "machines for --mode dist");
  build->add_option("--backing", c.backing, "exact | sketch cell stores for --mode stream");
  build->add_option("--guess", c.o, "fixed guess o instead of the smallest non-FAIL one");

  auto* eval = app.add_subcommand("eval", "sandwich audit of a coreset against its input");
  seed_opt(eval);
  eval->add_option("--input,-i", c.input, "original point file")->required();
  eval->add_option("--coreset", c.coreset, "coreset file")->required();
  eval->add_option("--center-samples", c.center_samples, "random center sets");
  eval->add_option("--t-grid", c.t_grid, "full | comma-separated capacities");
  eval->add_option("--out,-o", c.output, "audit CSV (default stdout)");
  eval->add_flag("--with-opt", c.with_opt, "also report the exhaustive uncapacitated optimum");

  auto* assign = app.add_subcommand("assign", "capacitated assignment through the coreset");
  seed_opt(assign);
  assign->add_option("--coreset", c.coreset, "coreset file")->required();
  assign->add_option("--centers", c.centers, "centers in the point format")->required();
  assign->add_option("--capacity", c.capacity, "capacity t'")->required();
  assign->add_option("--full-input", c.full_input, "original points to assign by transfer");
  assign->add_option("--out,-o", c.output, "assignment file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*gen) return cmd_gen(c);
    if (*build) return cmd_build(c);
    if (*eval) return cmd_eval(c);
    if (*assign) return cmd_assign(c);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const FailError& e) {
    std::cerr << "FAIL: " << e.what() << "\n";
    return 3;
  } catch (const OracleCapError& e) {
    std::cerr << "oracle cap exceeded: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
