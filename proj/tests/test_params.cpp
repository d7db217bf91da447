#include <gtest/gtest.h>

#include <cmath>

#include "capacore/params.hpp"

using namespace capacore;

namespace {

ParamsInput base() {
  ParamsInput in;
  in.k = 2;
  in.r = 2;
  in.eps = 0.4;
  in.eta = 0.4;
  in.delta = 8;
  in.d = 2;
  return in;
}

}  // namespace

TEST(Params, LambdaFrozenExample) {
  const Params p = Params::derive(base());
  // 10^6 * r * k^3 * d * L * ceil(log2(k d L)) with k=2, r=2, d=2, L=3.
  EXPECT_EQ(p.lambda(), 1e6 * 2 * 8 * 2 * 3 * 4);
  EXPECT_EQ(p.lambda(), 384000000.0);
  EXPECT_EQ(p.lambda_prime(), 100.0 * 2 * 3);
}

TEST(Params, GammaXiFormulas) {
  for (double r : {1.0, 2.0, 3.5}) {
    ParamsInput in = base();
    in.r = r;
    in.k = 3;
    in.eps = 0.3;
    in.eta = 0.2;
    in.delta = 16;
    const Params p = Params::derive(in);
    const double c = std::pow(2.0, -2 * (r + 10)), L = 4, k = 3, dp = std::pow(2.0, 1.5 * r);
    EXPECT_DOUBLE_EQ(p.gamma(), c * std::min(0.2 / (k * L), 0.3 / ((k + dp) * L)));
    EXPECT_DOUBLE_EQ(p.xi(), c * 0.2 / (k * (k + dp) * L * L));
    EXPECT_DOUBLE_EQ(p.heavy_cell_cap(), 20000 * (k + dp) * L);
  }
}

TEST(Params, ThresholdRatioIsTwoToR) {
  for (double r : {1.0, 2.0, 3.0}) {
    ParamsInput in = base();
    in.r = r;
    in.delta = 32;
    const Params p = Params::derive(in);
    for (double o : {1.0, 17.0, 4096.0})
      for (int i = 0; i <= p.L(); ++i) EXPECT_DOUBLE_EQ(p.T(i, o) / p.T(i - 1, o), std::pow(2.0, r));
  }
}

TEST(Params, ThresholdDirectFormula) {
  const Params p = Params::derive(base());
  for (int i = -1; i <= 3; ++i) {
    const double g = 8.0 / std::pow(2.0, i);
    EXPECT_NEAR(p.T(i, 100.0), 0.01 * 100.0 / std::pow(std::sqrt(2.0) * g, 2.0), 1e-12);
  }
}

TEST(Params, ScheduleFormulas) {
  ParamsInput in = base();
  in.mode = ParamMode::Practical;
  in.scale = 1e-50;
  const Params p = Params::derive(in);
  const double o = 64;
  const LevelSchedule s = p.schedule(o);
  const double L = 3, k = 2, dp = std::pow(2.0, 3.0);
  for (int i = -1; i <= 3; ++i) {
    const double T = p.T(i, o);
    const double phi = std::min(1.0, 1e-50 * std::pow(2.0, 24.0) * p.lambda() / (std::pow(p.xi(), 3) * p.gamma() * T));
    EXPECT_DOUBLE_EQ(s.at(s.phi, i), phi);
    EXPECT_DOUBLE_EQ(s.at(s.psi, i), std::min(1.0, 1e-50 * 1e6 * p.lambda_prime() / T));
    EXPECT_DOUBLE_EQ(s.at(s.psi_prime, i), std::min(1.0, 1e-50 * 1e6 * p.lambda_prime() / (p.gamma() * T)));
    EXPECT_DOUBLE_EQ(s.at(s.alpha, i), 1e6 * (k + dp * s.at(s.psi, i) * T) * L * L);
    EXPECT_DOUBLE_EQ(s.at(s.beta_hat, i), 4e6 * (k + dp) * L * L * s.at(s.phi, i) * T);
    EXPECT_DOUBLE_EQ(s.at(s.part_sum_cap, i), 10000 * (k * L + dp) * T);
  }
}

TEST(Params, PracticalScalesTheoryRates) {
  const Params theory = Params::derive(base());
  ParamsInput in = base();
  in.mode = ParamMode::Practical;
  in.scale = 1e-6;
  const Params prac = Params::derive(in);
  for (double o : {1e20, 1e30, 1e40})
    for (int i = 0; i <= 3; ++i) {
      // recompute the unclamped theory value
      const double raw = std::pow(2.0, 24.0) * theory.lambda() / (std::pow(theory.xi(), 3) * theory.gamma() * theory.T(i, o));
      EXPECT_DOUBLE_EQ(prac.phi(i, o), std::min(1.0, 1e-6 * raw));
      EXPECT_DOUBLE_EQ(theory.phi(i, o), std::min(1.0, raw));
    }
}

TEST(Params, RatesPositiveBoundedAndMonotone) {
  ParamsInput in = base();
  in.mode = ParamMode::Practical;
  for (double c : {1e-60, 1e-55, 1e-50, 1.0}) {
    in.scale = c;
    const Params p = Params::derive(in);
    double prev_phi = 2, prev_psi = 2;
    for (double o = 1; o < 1e12; o *= 4) {
      const double phi = p.phi(2, o), psi = p.psi(2, o);
      EXPECT_GT(phi, 0);
      EXPECT_LE(phi, 1);
      EXPECT_GT(psi, 0);
      EXPECT_LE(psi, 1);
      EXPECT_LE(phi, prev_phi);
      EXPECT_LE(psi, prev_psi);
      prev_phi = phi;
      prev_psi = psi;
    }
  }
  // monotone in c
  in.scale = 1e-58;
  const double lo = Params::derive(in).phi(3, 8);
  in.scale = 1e-56;
  EXPECT_LE(lo, Params::derive(in).phi(3, 8));
}

TEST(Params, Validation) {
  auto bad = [](auto mutate) {
    ParamsInput in = base();
    mutate(in);
    return Params::derive(in);
  };
  EXPECT_THROW(bad([](ParamsInput& in) { in.delta = 12; }), UsageError);
  EXPECT_THROW(bad([](ParamsInput& in) { in.eps = 0; }), UsageError);
  EXPECT_THROW(bad([](ParamsInput& in) { in.eta = 0.6; }), UsageError);
  EXPECT_THROW(bad([](ParamsInput& in) { in.k = 0; }), UsageError);
  EXPECT_THROW(bad([](ParamsInput& in) { in.r = 0.5; }), UsageError);
  EXPECT_THROW(bad([](ParamsInput& in) {
                 in.mode = ParamMode::Practical;
                 in.scale = 0;
               }),
               UsageError);
  EXPECT_NO_THROW(bad([](ParamsInput& in) { in.eps = 0.5; }));
}

TEST(Params, SerializeRoundTrip) {
  ParamsInput in = base();
  in.r = 1.7;
  in.eps = 0.1 + 0.2;
  in.mode = ParamMode::Practical;
  in.scale = 3.3e-57;
  const Params p = Params::derive(in);
  const Params q = Params::parse(p.serialize());
  EXPECT_EQ(p, q);
  EXPECT_EQ(q.eps(), in.eps);
  EXPECT_EQ(q.scale(), in.scale);
  EXPECT_EQ(q.gamma(), p.gamma());
}

TEST(Params, ModeParsing) {
  EXPECT_EQ(parse_params_mode("theory").first, ParamMode::Theory);
  const auto pr = parse_params_mode("practical:1e-57");
  EXPECT_EQ(pr.first, ParamMode::Practical);
  EXPECT_EQ(pr.second, 1e-57);
  EXPECT_THROW(parse_params_mode("practical:x"), UsageError);
  EXPECT_THROW(parse_params_mode("fast"), UsageError);
}

TEST(Params, SizeBoundFormulaAndMonotone) {
  const Params p = Params::derive(base());
  const long double k = 2, r = 2, d = 2, L = 3, kd = 2 + 8;
  const long double expect = 8e12L * std::pow(2.0L, 120.0L) * r * std::pow(k, 6.0L) * d * std::pow(kd, 5.0L) *
                             std::pow(L, 10.0L) * std::log2(12.0L) / std::pow(0.4L, 4.0L);
  EXPECT_NEAR(static_cast<double>(p.coreset_size_bound() / expect), 1.0, 1e-12);
  ParamsInput in = base();
  in.eps = 0.2;
  EXPECT_GE(Params::derive(in).coreset_size_bound(), p.coreset_size_bound());
}

TEST(Params, IndependenceIsCappedEven) {
  const Params p = Params::derive(base());
  EXPECT_EQ(p.hash_independence(), kMaxHashIndependence);
  EXPECT_EQ(p.estimate_independence() % 2, 0);
  EXPECT_GE(p.estimate_independence(), 4);
}
