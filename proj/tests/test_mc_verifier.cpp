/*
   Copyright 2026 The forwardperf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "forwardperf/mc_verifier.hpp"

namespace fwdperf {
namespace {

PiecewiseConstant flat(double c, double T = 1.0) { return PiecewiseConstant::constant(c, T); }

TEST(Harness, ConstantSamples) {
  const std::vector<double> ones(200, 1.0);
  const auto ok = test_mean(ones, 1.0, Sided::two_sided, 0.997);
  EXPECT_TRUE(ok.passed());
  EXPECT_EQ(ok.z_score, 0.0);
  const auto bad = test_mean(ones, 0.0, Sided::two_sided, 0.997);
  EXPECT_FALSE(bad.passed());
  EXPECT_NE(bad.detail.find("zero variance"), std::string::npos);
  EXPECT_TRUE(test_mean(ones, 0.0, Sided::at_least, 0.997).passed());
  EXPECT_FALSE(test_mean(ones, 0.0, Sided::at_most, 0.997).passed());
}

TEST(Harness, PreconditionsAndCriticalValues) {
  const std::vector<double> few(99, 1.0), v(100, 1.0), zero(100, 0.0);
  std::vector<double> neg(100, 1.0);
  neg[3] = -1.0;
  EXPECT_THROW(test_mean(few, 1.0, Sided::two_sided, 0.997), std::invalid_argument);
  EXPECT_THROW(test_weighted_mean(v, zero, 1.0, Sided::two_sided, 0.997), std::invalid_argument);
  EXPECT_THROW(test_weighted_mean(v, neg, 1.0, Sided::two_sided, 0.997), std::invalid_argument);
  EXPECT_NEAR(critical_value(0.997, Sided::two_sided), 2.9677379253417717, 1e-12);
  EXPECT_NEAR(critical_value(0.997, Sided::at_least), 2.7477813854449926, 1e-12);
  EXPECT_THROW(critical_value(1.0, Sided::two_sided), std::invalid_argument);
}

TEST(Harness, WeightedEstimateAndOneSidedRule) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> x(1000), w(1000);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = nd(rng);
    w[i] = u(rng);
    s += x[i] * w[i];
  }
  const auto r = test_weighted_mean(x, w, 0.0, Sided::at_most, 0.997);
  EXPECT_NEAR(r.estimate, s / 1000, 1e-12);
  EXPECT_NEAR(r.z_score, r.estimate / r.std_error, 1e-12);
  EXPECT_FALSE(r.passed());
  EXPECT_TRUE(test_weighted_mean(x, w, 0.0, Sided::at_least, 0.997).passed());
  EXPECT_TRUE(test_weighted_mean(x, w, r.estimate, Sided::two_sided, 0.997).passed());
}

TEST(Harness, CalibrationOnGaussianSamples) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  const int trials = 3000;
  int rejected = 0;
  std::vector<double> x(200);
  for (int t = 0; t < trials; ++t) {
    for (auto& v : x) v = nd(rng);
    rejected += !test_mean(x, 0.0, Sided::two_sided, 0.997).passed();
  }
  // expected 9 rejections; 25 is more than five binomial standard deviations above
  EXPECT_LE(rejected, 25);
}

TEST(Harness, AntitheticPairsAreAveraged) {
  const auto b = simulate_paths(CoefficientSpec::constant(0, 0, 0, 0, 1), 2, 6, 1);
  const std::vector<double> v{1, 3, 5, 7, 9, 11};
  EXPECT_EQ(independent_samples(b, v), (std::vector<double>{2, 6, 10}));
}

class RegularMarket : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = CoefficientSpec::constant(0.5, 0.0, 0.0, 0.0, 1.0);
    bundle_ = simulate_paths(spec_, 16, 20000, 2026);
    field_ = build_forward_exponential(spec_, 1.0, 0.0, bundle_);
  }
  static CoefficientSpec spec_;
  static PathBundle bundle_;
  static FieldPaths field_;
};
CoefficientSpec RegularMarket::spec_;
PathBundle RegularMarket::bundle_;
FieldPaths RegularMarket::field_;

TEST_F(RegularMarket, DualExpectationIsFlatAtTheZeroMeasure) {
  const auto sub = check_dual_submartingale(bundle_, field_, 1.0, {{"0", flat(0)}}, {0.25, 0.5, 1.0}, 0.997);
  ASSERT_EQ(sub.size(), 3u);
  for (const auto& r : sub) EXPECT_TRUE(r.passed()) << r.id;
  const auto mart = check_dual_martingale_at_optimum(bundle_, field_, 1.0, {0.25, 0.5, 1.0}, 0.997);
  for (const auto& r : mart) {
    EXPECT_TRUE(r.passed()) << r.id;
    EXPECT_EQ(r.target, -1.0);
  }
}

TEST_F(RegularMarket, DualExpectationIncreasesAwayFromTheOptimum) {
  const auto sub = check_dual_submartingale(bundle_, field_, 1.0, {{"0.8", flat(0.8)}}, {0.5, 1.0}, 0.997);
  for (const auto& r : sub) {
    EXPECT_TRUE(r.passed()) << r.id;
    EXPECT_GT(r.estimate, 0.0);
  }
}

TEST_F(RegularMarket, BaselineUsesTheInitialConjugate) {
  const auto f2 = build_forward_exponential(spec_, 1.0, 2.0, bundle_);
  const auto mart = check_dual_martingale_at_optimum(bundle_, f2, 1.0, {1.0}, 0.997);
  EXPECT_EQ(mart.front().target, -3.0);
  EXPECT_TRUE(mart.front().passed());
}

TEST_F(RegularMarket, InverseGammaIsConstant) {
  const auto r = check_inverse_gamma_martingale_mc(bundle_, field_, {{"0", flat(0)}, {"0.4", flat(0.4)}}, 0.997);
  for (const auto& x : r) EXPECT_TRUE(x.passed()) << x.id;
}

TEST(MonteCarlo, MartingaleAtOptimumWithNoise) {
  const auto spec = CoefficientSpec::constant(0.5, 0.0, 0.3, 0.1, 1.0);
  const auto b = simulate_paths(spec, 16, 20000, 11);
  const auto f = build_forward_exponential(spec, 1.0, 0.0, b);
  for (double y : {1.0, 2.0}) {
    const auto r = check_dual_martingale_at_optimum(b, f, y, {0.25, 0.5, 1.0}, 0.997);
    ASSERT_EQ(r.size(), 3u);
    for (const auto& x : r) EXPECT_TRUE(x.passed()) << x.id << " z=" << x.z_score;
    if (y == 2.0) {
      EXPECT_NEAR(r.front().target, 2 * std::log(2.0) - 2, 1e-15);
    }
    // the same statistic with nu = phi in the submartingale test also passes
    const auto s = check_dual_submartingale(b, f, y, {{"phi", spec.phi_fn()}}, {0.25, 0.5, 1.0}, 0.997);
    for (const auto& x : s) EXPECT_TRUE(x.passed()) << x.id;
  }
}

TEST(MonteCarlo, RefusalsFollowTheRegularityClass) {
  const auto lognormal = CoefficientSpec::constant(0.5, 0.2, 0.0, 0.0, 1.0);
  const auto b = simulate_paths(lognormal, 4, 200, 1);
  const auto f = build_forward_exponential(lognormal, 1.0, 0.0, b);
  const auto sub = check_dual_submartingale(b, f, 1.0, {{"0", flat(0)}}, {1.0}, 0.997);
  ASSERT_EQ(sub.size(), 1u);
  EXPECT_EQ(sub[0].verdict, Verdict::refused);
  EXPECT_EQ(check_dual_martingale_at_optimum(b, f, 1.0, {1.0}, 0.997)[0].verdict, Verdict::refused);

  const auto mixed = CoefficientSpec::constant(0.5, 0.2, 0.3, 0.0, 1.0);
  const auto bm = simulate_paths(mixed, 4, 200, 1);
  const auto fm = build_forward_exponential(mixed, 1.0, 0.0, bm);
  EXPECT_EQ(check_dual_martingale_at_optimum(bm, fm, 1.0, {1.0}, 0.997)[0].verdict, Verdict::refused);
  EXPECT_NE(check_dual_submartingale(bm, fm, 1.0, {{"0", flat(0)}}, {1.0}, 0.997)[0].verdict, Verdict::refused);
}

TEST(MonteCarlo, InverseGammaMartingaleWithStochasticGamma) {
  const auto spec = CoefficientSpec::constant(0.5, 0.2, 0.0, 0.0, 1.0);
  const auto b = simulate_paths(spec, 16, 20000, 12);
  const auto f = build_forward_exponential(spec, 1.0, 0.0, b);
  const auto r = check_inverse_gamma_martingale_mc(b, f, {{"0", flat(0)}, {"0.4", flat(0.4)}}, 0.997);
  for (const auto& x : r) {
    EXPECT_TRUE(x.passed()) << x.id << " z=" << x.z_score;
    EXPECT_EQ(x.target, 1.0);
  }
}

TEST(MonteCarlo, PredictedDrift) {
  EXPECT_EQ(predicted_forward_drift(flat(0.3), flat(0.3), 1.0), 0.0);
  EXPECT_NEAR(predicted_forward_drift(flat(0.7), flat(0.3), 1.0), -0.08, 1e-15);
  EXPECT_NEAR(predicted_forward_drift(flat(0.0), flat(0.3), 1.0), -0.045, 1e-15);
  const PiecewiseConstant half{{0.0, 0.5, 1.0}, {0.7, 0.3}};
  EXPECT_NEAR(predicted_forward_drift(half, flat(0.3), 1.0), -0.04, 1e-15);
  // additive over intervals
  const PiecewiseConstant other{{0.0, 0.5, 1.0}, {0.3, 0.7}};
  EXPECT_NEAR(predicted_forward_drift(half, flat(0.3), 1.0) + predicted_forward_drift(other, flat(0.3), 1.0),
              predicted_forward_drift(flat(0.7), flat(0.3), 1.0), 1e-15);
}

TEST(MonteCarlo, ForwardDriftMatchesPrediction) {
  const auto spec = CoefficientSpec::constant(0.5, 0.0, 0.3, 0.1, 1.0);
  const auto b = simulate_paths(spec, 16, 20000, 13);
  const auto f = build_forward_exponential(spec, 1.0, 0.0, b);
  const auto r = check_forward_drift_mc(
      b, f, {{"0", flat(0)}, {"phi", flat(0.3)}, {"0.7", flat(0.7)}, {"step", {{0.0, 0.5, 1.0}, {0.7, 0.3}}}}, 0.997);
  ASSERT_EQ(r.size(), 4u);
  for (const auto& x : r) EXPECT_TRUE(x.passed()) << x.id << " z=" << x.z_score;
  EXPECT_NEAR(r[0].target, -0.045, 1e-15);
  EXPECT_NEAR(r[2].target, -0.08, 1e-15);
  EXPECT_NEAR(r[3].target, -0.04, 1e-15);
}

TEST(MonteCarlo, ForwardDriftWithStochasticGamma) {
  const auto spec = CoefficientSpec::constant(0.5, 0.2, 0.3, 0.1, 1.0);
  const auto b = simulate_paths(spec, 16, 20000, 14);
  const auto f = build_forward_exponential(spec, 1.0, 0.0, b);
  const auto r = check_forward_drift_mc(b, f, {{"0", flat(0)}, {"0.7", flat(0.7)}}, 0.997);
  for (const auto& x : r) EXPECT_TRUE(x.passed()) << x.id << " z=" << x.z_score;
}

TEST(MonteCarlo, ForwardDriftRefusedWhenInverseGammaFails) {
  const auto spec = CoefficientSpec::constant(0.5, 0.0, 0.3, 0.0, 1.0);
  const auto b = simulate_paths(spec, 4, 2000, 15);
  auto f = build_forward_exponential(spec, 1.0, 0.0, b);
  for (std::size_t p = 0; p < b.n_paths; ++p) f.inv_gamma[p * 5 + 4] *= 1.5;
  const auto r = check_forward_drift_mc(b, f, {{"0", flat(0)}}, 0.997);
  EXPECT_EQ(r[0].verdict, Verdict::refused);
}

TEST(MonteCarlo, VerdictsAreDeterministic) {
  const auto spec = CoefficientSpec::constant(0.5, 0.0, 0.3, 0.1, 1.0);
  auto run = [&](unsigned threads) {
    const auto b = simulate_paths(spec, 8, 4000, 77, true, threads);
    const auto f = build_forward_exponential(spec, 1.0, 0.0, b, threads);
    VerificationReport rep("mc");
    add_results(rep, check_dual_martingale_at_optimum(b, f, 1.0, {0.5, 1.0}, 0.997));
    add_results(rep, check_forward_drift_mc(b, f, {{"0", flat(0)}}, 0.997));
    return to_json(rep).dump();
  };
  EXPECT_EQ(run(1), run(4));
}

}  // namespace
}  // namespace fwdperf
