#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "capacore/error.hpp"
#include "capacore/geometry.hpp"

namespace capacore {

enum class ParamMode { Theory, Practical };

// Independence degree actually materialized for the polynomial hashes.
inline constexpr int kMaxHashIndependence = 256;

inline std::string render_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw UsageError("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw UsageError("bad numeric value for " + key + ": '" + s + "'");
  }
}

struct ParamsInput {
  int k = 2;
  double r = 2.0;
  double eps = 0.25;
  double eta = 0.25;
  std::int64_t delta = 8;
  int d = 2;
  ParamMode mode = ParamMode::Theory;
  double scale = 1.0;  // practical-mode multiplier c on every sampling probability
};

// Per-guess quantities for a fixed o. Level-indexed vectors use index
// level + 1, so index 0 is level -1.
struct LevelSchedule {
  double o = 0;
  int L = 0;
  std::vector<double> T;          // T_i(o), levels -1..L
  std::vector<double> psi;        // cell-count sampling rate, levels -1..L
  std::vector<double> psi_prime;  // part-size sampling rate, levels -1..L (level -1 unused)
  std::vector<double> phi;        // coreset sampling rate, levels -1..L (level -1 unused)
  std::vector<double> alpha, alpha_prime, alpha_hat, beta_hat;
  std::vector<double> part_sum_cap;

  double at(const std::vector<double>& v, int level) const { return v[static_cast<std::size_t>(level + 1)]; }
  double threshold(int level) const { return at(T, level); }
};

class Params {
 public:
  static Params derive(const ParamsInput& in) {
    require(in.k >= 1, "k must be >= 1");
    require(in.r >= 1.0 && std::isfinite(in.r), "r must be a finite real >= 1");
    require(in.eps > 0.0 && in.eps <= 0.5, "eps must be in (0, 0.5]");
    require(in.eta > 0.0 && in.eta <= 0.5, "eta must be in (0, 0.5]");
    require(in.d >= 1, "d must be >= 1");
    require(is_power_of_two(in.delta), "Delta must be a power of two");
    require(in.mode == ParamMode::Theory || (in.scale > 0.0 && std::isfinite(in.scale)),
            "practical scale must be a positive real");
    Params p;
    p.in_ = in;
    if (in.mode == ParamMode::Theory) p.in_.scale = 1.0;
    p.L_ = log2_exact(in.delta);
    require(p.L_ >= 1 && p.L_ <= kMaxLog2Delta, "Delta must be in [2, 2^24]");
    const double k = in.k, r = in.r, d = in.d, L = p.L_;
    p.d_pow_ = std::pow(d, 1.5 * r);
    const double c0 = 1.0 / std::pow(2.0, 2.0 * (r + 10.0));
    p.gamma_ = c0 * std::min(in.eta / (k * L), in.eps / ((k + p.d_pow_) * L));
    p.xi_ = c0 * std::min(in.eps, in.eta) / (k * (k + p.d_pow_) * L * L);
    p.log_kdl_ = std::max(1.0, std::ceil(std::log2(k * d * L)));
    p.lambda_ = 1e6 * r * k * k * k * d * L * p.log_kdl_;
    p.lambda_prime_ = 100.0 * d * L;
    p.heavy_cell_cap_ = 20000.0 * (k + p.d_pow_) * L;
    return p;
  }

  const ParamsInput& input() const { return in_; }
  int k() const { return in_.k; }
  double r() const { return in_.r; }
  double eps() const { return in_.eps; }
  double eta() const { return in_.eta; }
  std::int64_t delta() const { return in_.delta; }
  int d() const { return in_.d; }
  int L() const { return L_; }
  ParamMode mode() const { return in_.mode; }
  double scale() const { return in_.scale; }
  double d_pow() const { return d_pow_; }  // d^{1.5 r}
  double gamma() const { return gamma_; }
  double xi() const { return xi_; }
  double lambda() const { return lambda_; }
  double lambda_prime() const { return lambda_prime_; }
  double heavy_cell_cap() const { return heavy_cell_cap_; }

  // Materialized independence for the coreset hashes (lambda) and the
  // estimation hashes (lambda'), rounded to even and capped.
  int hash_independence() const { return clamp_independence(lambda_); }
  int estimate_independence() const { return clamp_independence(lambda_prime_); }

  // sqrt(d) * g_i, raised to r.
  double cell_diameter_pow(int level) const {
    return std::pow(std::sqrt(static_cast<double>(in_.d)) * std::ldexp(static_cast<double>(in_.delta), -level), in_.r);
  }

  // T_i(o) = 0.01 o / (sqrt(d) g_i)^r, built from T_{-1} so that
  // T_i / T_{i-1} = 2^r exactly whenever 2^r is representable.
  double T(int level, double o) const {
    const double base = 0.01 * o / cell_diameter_pow(-1);
    return base * std::pow(2.0, in_.r * (level + 1));
  }

  double phi(int level, double o) const {
    const double raw = std::pow(2.0, 2.0 * (in_.r + 10.0)) * lambda_ / (xi_ * xi_ * xi_ * gamma_ * T(level, o));
    return std::min(1.0, in_.scale * raw);
  }
  double psi(int level, double o) const { return std::min(1.0, in_.scale * 1e6 * lambda_prime_ / T(level, o)); }
  double psi_prime(int level, double o) const {
    return std::min(1.0, in_.scale * 1e6 * lambda_prime_ / (gamma_ * T(level, o)));
  }
  double part_sum_cap(int level, double o) const {
    return 10000.0 * (in_.k * static_cast<double>(L_) + d_pow_) * T(level, o);
  }

  LevelSchedule schedule(double o) const {
    require(o > 0.0, "guess o must be positive");
    LevelSchedule s;
    s.o = o;
    s.L = L_;
    const double kk = in_.k, LL = static_cast<double>(L_) * L_;
    for (int i = -1; i <= L_; ++i) {
      const double t = T(i, o);
      s.T.push_back(t);
      s.psi.push_back(psi(i, o));
      s.psi_prime.push_back(psi_prime(i, o));
      s.phi.push_back(phi(i, o));
      s.alpha.push_back(1e6 * (kk + d_pow_ * s.psi.back() * t) * LL);
      s.alpha_prime.push_back(1e6 * (kk + d_pow_ * s.psi_prime.back() * t) * LL);
      s.alpha_hat.push_back(1e6 * (kk + d_pow_ * s.phi.back() * t) * LL);
      s.beta_hat.push_back(4e6 * (kk + d_pow_) * LL * s.phi.back() * t);
      s.part_sum_cap.push_back(part_sum_cap(i, o));
    }
    return s;
  }

  // Upper end of the guess grid: n * (sqrt(d) Delta)^r.
  double max_guess(std::size_t n) const {
    return static_cast<double>(std::max<std::size_t>(n, 1)) * cell_diameter_pow(0);
  }

  // Closed-form coreset size bound (theory constants); long double because
  // 2^{10(r+10)} leaves the 64-bit range for every r >= 1.
  long double coreset_size_bound() const {
    const long double k = in_.k, r = in_.r, d = in_.d, L = L_;
    const long double kd = k + static_cast<long double>(d_pow_);
    const long double m = std::min(in_.eps, in_.eta);
    return 8e12L * std::pow(2.0L, 10.0L * (r + 10.0L)) * r * std::pow(k, 6.0L) * d * std::pow(kd, 5.0L) *
           std::pow(L, 10.0L) * std::log2(k * d * L) / std::pow(m, 4.0L);
  }

  // Flat key=value block; decimal rendering round-trips every double.
  std::string serialize() const {
    std::ostringstream os;
    os << "k=" << in_.k << "\n";
    os << "r=" << render_double(in_.r) << "\n";
    os << "eps=" << render_double(in_.eps) << "\n";
    os << "eta=" << render_double(in_.eta) << "\n";
    os << "Delta=" << in_.delta << "\n";
    os << "d=" << in_.d << "\n";
    os << "mode=" << (in_.mode == ParamMode::Theory ? "theory" : "practical") << "\n";
    os << "scale=" << render_double(in_.scale) << "\n";
    return os.str();
  }

  static Params parse(const std::map<std::string, std::string>& kv) {
    auto get = [&](const std::string& key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end()) throw UsageError("missing parameter '" + key + "'");
      return it->second;
    };
    ParamsInput in;
    in.k = static_cast<int>(parse_double(get("k"), "k"));
    in.r = parse_double(get("r"), "r");
    in.eps = parse_double(get("eps"), "eps");
    in.eta = parse_double(get("eta"), "eta");
    in.delta = static_cast<std::int64_t>(parse_double(get("Delta"), "Delta"));
    in.d = static_cast<int>(parse_double(get("d"), "d"));
    const std::string& mode = get("mode");
    if (mode == "theory") {
      in.mode = ParamMode::Theory;
    } else if (mode == "practical") {
      in.mode = ParamMode::Practical;
    } else {
      throw UsageError("unknown params mode '" + mode + "'");
    }
    in.scale = parse_double(get("scale"), "scale");
    return derive(in);
  }

  static Params parse(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return parse(kv);
  }

  friend bool operator==(const Params& a, const Params& b) { return a.serialize() == b.serialize(); }

 private:
  static int clamp_independence(double lambda) {
    double v = std::ceil(lambda);
    if (v > kMaxHashIndependence) v = kMaxHashIndependence;
    int n = std::max(4, static_cast<int>(v));
    if (n % 2) ++n;
    return std::min(n, kMaxHashIndependence);
  }

  ParamsInput in_;
  int L_ = 0;
  double d_pow_ = 0, gamma_ = 0, xi_ = 0, log_kdl_ = 0, lambda_ = 0, lambda_prime_ = 0, heavy_cell_cap_ = 0;
};

// Parses "theory" or "practical:<c>".
inline std::pair<ParamMode, double> parse_params_mode(const std::string& s) {
  if (s == "theory") return {ParamMode::Theory, 1.0};
  const std::string prefix = "practical:";
  if (s.rfind(prefix, 0) == 0) {
    const double c = parse_double(s.substr(prefix.size()), "practical scale");
    require(c > 0.0, "practical scale must be positive");
    return {ParamMode::Practical, c};
  }
  throw UsageError("params mode must be 'theory' or 'practical:<c>'");
}

}  // namespace capacore
