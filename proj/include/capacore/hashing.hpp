#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "capacore/error.hpp"
#include "capacore/geometry.hpp"
#include "capacore/random.hpp"

namespace capacore {

using u128 = unsigned __int128;

// Arithmetic over the Mersenne primes 2^61 - 1 and 2^127 - 1.
namespace field {

inline constexpr std::uint64_t kP61 = (std::uint64_t{1} << 61) - 1;
inline constexpr u128 kP127 = (u128{1} << 127) - 1;

inline std::uint64_t add61(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  return s >= kP61 ? s - kP61 : s;
}

inline std::uint64_t mul61(std::uint64_t a, std::uint64_t b) {
  const u128 p = static_cast<u128>(a) * b;
  std::uint64_t s = static_cast<std::uint64_t>(p & kP61) + static_cast<std::uint64_t>(p >> 61);
  return s >= kP61 ? s - kP61 : s;
}

inline std::uint64_t sub61(std::uint64_t a, std::uint64_t b) { return a >= b ? a - b : a + kP61 - b; }

inline std::uint64_t pow61(std::uint64_t a, std::uint64_t e) {
  std::uint64_t r = 1;
  while (e) {
    if (e & 1) r = mul61(r, a);
    a = mul61(a, a);
    e >>= 1;
  }
  return r;
}

inline std::uint64_t inv61(std::uint64_t a) { return pow61(a, kP61 - 2); }

// Reduces a signed integer into the field.
inline std::uint64_t from_signed61(std::int64_t v) {
  const std::int64_t m = static_cast<std::int64_t>(v % static_cast<std::int64_t>(kP61));
  return static_cast<std::uint64_t>(m < 0 ? m + static_cast<std::int64_t>(kP61) : m);
}

inline u128 fold127(u128 s) {
  s = (s & kP127) + (s >> 127);
  return s >= kP127 ? s - kP127 : s;
}

inline u128 add127(u128 a, u128 b) { return fold127(a + b); }

inline u128 mul127(u128 a, u128 b) {
  const std::uint64_t a0 = static_cast<std::uint64_t>(a), a1 = static_cast<std::uint64_t>(a >> 64);
  const std::uint64_t b0 = static_cast<std::uint64_t>(b), b1 = static_cast<std::uint64_t>(b >> 64);
  const u128 p00 = static_cast<u128>(a0) * b0, p01 = static_cast<u128>(a0) * b1;
  const u128 p10 = static_cast<u128>(a1) * b0, p11 = static_cast<u128>(a1) * b1;
  const u128 mid = p01 + p10;
  const u128 carry_mid = mid < p01 ? 1 : 0;
  const u128 lo = p00 + (mid << 64);
  const u128 carry_lo = lo < p00 ? 1 : 0;
  const u128 hi = p11 + (mid >> 64) + (carry_mid << 64) + carry_lo;
  // value = hi * 2^128 + lo, and 2^128 == 2 (mod 2^127 - 1)
  const u128 lo_r = (lo & kP127) + (lo >> 127);
  return fold127(fold127(2 * hi + lo_r));
}

// floor(prob * (2^bits - 1)) for prob in (0, 1), computed exactly.
inline u128 mersenne_threshold(double prob, int bits) {
  const double scaled = std::ldexp(prob, bits);
  const double whole = std::floor(scaled);
  const double frac = scaled - whole;
  const u128 a = static_cast<u128>(whole);
  return frac >= prob ? a : a - 1;
}

}  // namespace field

// Injective mixed-radix packing of (coords - 1) in base Delta, plus the tag
// as the most significant digit (tag + 1, or 0 when untagged).
class PointEncoder {
 public:
  PointEncoder(std::int64_t delta, int d) : delta_(delta), d_(d) {
    u128 v = 1;
    for (int j = 0; j < d; ++j) {
      v *= static_cast<u128>(delta);
      require(v < (u128{1} << 100), "Delta^d too large to encode");
    }
    volume_ = v;
  }

  u128 encode(const Point& p) const {
    u128 code = 0;
    for (int j = d_ - 1; j >= 0; --j) code = code * static_cast<u128>(delta_) + static_cast<u128>(p.coords[j] - 1);
    if (p.tag) {
      const u128 digit = static_cast<u128>(*p.tag) + 1;
      require(digit < (u128{1} << 126) / volume_, "tag too large to encode");
      code += digit * volume_;
    }
    return code;
  }

  std::int64_t delta() const { return delta_; }
  int dim() const { return d_; }

 private:
  std::int64_t delta_;
  int d_;
  u128 volume_ = 1;
};

// Uniformly random polynomial of degree lambda - 1 over each of the two
// fields. Codes below 2^61 - 1 evaluate in the small field, the rest in the
// large one; the two coefficient vectors are drawn independently.
class PolynomialHash {
 public:
  PolynomialHash(std::uint64_t seed, int lambda) : seed_(seed), lambda_(lambda) {
    require(lambda >= 1, "independence must be >= 1");
    Rng rng(seed);
    c61_.resize(lambda);
    for (auto& c : c61_) c = uniform_below(rng, field::kP61);
    c127_.resize(lambda);
    for (auto& c : c127_) {
      for (;;) {
        const u128 v = ((static_cast<u128>(rng()) << 64) | rng()) & field::kP127;
        if (v < field::kP127) {
          c = v;
          break;
        }
      }
    }
  }

  struct Value {
    bool large;
    u128 v;
  };

  Value evaluate(u128 code) const {
    if (code < field::kP61) {
      const auto x = static_cast<std::uint64_t>(code);
      std::uint64_t acc = 0;
      for (auto c : c61_) acc = field::add61(field::mul61(acc, x), c);
      return {false, acc};
    }
    const u128 x = code;
    u128 acc = 0;
    for (auto c : c127_) acc = field::add127(field::mul127(acc, x), c);
    return {true, acc};
  }

  std::uint64_t seed() const { return seed_; }
  int lambda() const { return lambda_; }

 private:
  std::uint64_t seed_;
  int lambda_;
  std::vector<std::uint64_t> c61_;
  std::vector<u128> c127_;
};

// Bernoulli(prob) acceptance rule over polynomial values: accept iff the
// field value is below floor(prob * modulus). The marginal is off by at most
// 1/modulus.
class BernoulliThreshold {
 public:
  explicit BernoulliThreshold(double prob) : prob_(prob) {
    require(prob >= 0.0 && prob <= 1.0, "probability must be in [0, 1]");
    if (prob > 0.0 && prob < 1.0) {
      t61_ = static_cast<std::uint64_t>(field::mersenne_threshold(prob, 61));
      t127_ = field::mersenne_threshold(prob, 127);
    }
  }

  bool always() const { return prob_ >= 1.0; }
  bool never() const { return prob_ <= 0.0; }
  double prob() const { return prob_; }

  bool accepts(const PolynomialHash::Value& v) const {
    if (always()) return true;
    if (never()) return false;
    return v.large ? v.v < t127_ : v.v < t61_;
  }

  // max over both fields of |floor(prob * p) / p - prob|.
  long double quantization_error() const {
    if (always() || never()) return 0.0L;
    const long double p61 = static_cast<long double>(field::kP61);
    const long double e61 = std::fabs(static_cast<long double>(t61_) / p61 - prob_);
    const long double p127 = std::ldexp(1.0L, 127);
    const long double e127 = std::fabs(static_cast<long double>(t127_) / p127 - prob_) + std::ldexp(1.0L, -120);
    return std::max(e61, e127);
  }

 private:
  double prob_;
  std::uint64_t t61_ = 0;
  u128 t127_ = 0;
};

// lambda-wise independent indicator h : [Delta]^d -> {0,1} with Pr[h(p)=1] = prob.
class KWiseHash {
 public:
  KWiseHash(std::uint64_t seed, int lambda, double prob, PointEncoder encoder)
      : KWiseHash(std::make_shared<const PolynomialHash>(seed, checked_lambda(lambda)), prob, encoder) {}

  KWiseHash(std::shared_ptr<const PolynomialHash> poly, double prob, PointEncoder encoder)
      : poly_(std::move(poly)), threshold_(prob), encoder_(encoder) {}

  bool eval(const Point& p) const {
    if (threshold_.always()) return true;
    if (threshold_.never()) return false;
    return threshold_.accepts(poly_->evaluate(encoder_.encode(p)));
  }

  double prob() const { return threshold_.prob(); }
  int lambda() const { return poly_->lambda(); }
  std::uint64_t seed() const { return poly_->seed(); }
  const BernoulliThreshold& threshold() const { return threshold_; }
  const PolynomialHash& polynomial() const { return *poly_; }

 private:
  static int checked_lambda(int lambda) {
    require(lambda >= 4 && lambda % 2 == 0, "independence must be an even integer >= 4");
    return lambda;
  }

  std::shared_ptr<const PolynomialHash> poly_;
  BernoulliThreshold threshold_;
  PointEncoder encoder_;
};

inline KWiseHash kwise_new(std::uint64_t seed, int lambda, double prob, const PointEncoder& encoder) {
  return KWiseHash(seed, lambda, prob, encoder);
}

}  // namespace capacore
