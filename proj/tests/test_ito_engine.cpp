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
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "forwardperf/ito_engine.hpp"
#include "forwardperf/philox.hpp"

namespace fwdperf {
namespace {

constexpr double kZ = 3.0;  // sample means must sit within 3 standard errors

struct Moments {
  double mean, se, var;
};

Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double var = ss / (n - 1);
  return {m, std::sqrt(var / n), var};
}

// Antithetic pairs are not independent; average them first.
std::vector<double> pair_means(const std::vector<double>& x) {
  std::vector<double> out(x.size() / 2);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.5 * (x[2 * k] + x[2 * k + 1]);
  return out;
}

std::vector<double> terminal(const PathBundle& b, auto f) {
  std::vector<double> out(b.n_paths);
  for (std::size_t p = 0; p < b.n_paths; ++p) out[p] = f(p);
  return out;
}

TEST(Philox, KnownAnswers) {
  using rng::Counter;
  using rng::Key;
  EXPECT_EQ(rng::philox4x32_10(Counter{0, 0, 0, 0}, Key{0, 0}),
            (Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(rng::philox4x32_10(Counter{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, Key{0xffffffff, 0xffffffff}),
            (Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(rng::philox4x32_10(Counter{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, Key{0xa4093822, 0x299f31d0}),
            (Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, UniformsStayInsideTheOpenInterval) {
  EXPECT_GT(rng::to_open_unit(0, 0), 0.0);
  EXPECT_LT(rng::to_open_unit(0xffffffff, 0xffffffff), 1.0);
}

TEST(Philox, NormalPairsHaveUnitMoments) {
  std::vector<double> a, b, ab;
  for (std::uint32_t i = 0; i < 50000; ++i) {
    const auto [x, y] = rng::normal_pair(7, i, 3);
    a.push_back(x);
    b.push_back(y);
    ab.push_back(x * y);
  }
  for (const auto& v : {a, b}) {
    const auto m = moments(v);
    EXPECT_LT(std::abs(m.mean), kZ * m.se);
    EXPECT_NEAR(m.var, 1.0, kZ * std::sqrt(2.0 / 50000));
  }
  const auto c = moments(ab);
  EXPECT_LT(std::abs(c.mean), kZ * c.se);
}

TEST(Simulation, DriftlessPriceKeepsItsMean) {
  const auto spec = CoefficientSpec::constant(0.0, 0.0, 0.0, 0.0, 1.0, 2.0);
  const auto b = simulate_paths(spec, 16, 20000, 1);
  const auto m = moments(pair_means(terminal(b, [&](std::size_t p) { return b.s(p, 16); })));
  EXPECT_LT(std::abs(m.mean - 2.0), kZ * m.se + 1e-12);
}

TEST(Simulation, MeanAndVarianceOfTerminalPrice) {
  const auto spec = CoefficientSpec::constant(0.5, 0.0, 0.0, 0.0, 1.0);
  const auto b = simulate_paths(spec, 16, 40000, 2, false);
  const auto s = terminal(b, [&](std::size_t p) { return b.s(p, 16); });
  const auto m = moments(s);
  EXPECT_LT(std::abs(m.mean - 0.5), kZ * m.se);
  std::vector<double> sq(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) sq[i] = (s[i] - 0.5) * (s[i] - 0.5);
  const auto mv = moments(sq);
  EXPECT_LT(std::abs(mv.mean - 1.0), kZ * mv.se);
}

TEST(Simulation, BrownianDriversAreUncorrelated) {
  const auto spec = CoefficientSpec::constant(0.0, 0.0, 0.0, 0.0, 1.0);
  const auto b = simulate_paths(spec, 4, 20000, 3, false);
  std::vector<double> cross(b.dB.size()), vb(b.dB.size());
  for (std::size_t i = 0; i < b.dB.size(); ++i) {
    cross[i] = b.dB[i] * b.dW[i] / b.dt;
    vb[i] = b.dB[i] * b.dB[i] / b.dt;
  }
  const auto c = moments(cross);
  EXPECT_LT(std::abs(c.mean), kZ * c.se);
  const auto v = moments(vb);
  EXPECT_LT(std::abs(v.mean - 1.0), kZ * v.se);
}

TEST(Simulation, AntitheticPairsMirrorEachOther) {
  const auto spec = CoefficientSpec::constant(0.3, 0.0, 0.0, 0.0, 1.0);
  const auto b = simulate_paths(spec, 8, 10, 4);
  for (std::size_t k = 0; k < 5; ++k)
    for (int i = 0; i < 8; ++i) {
      EXPECT_EQ(b.db(2 * k, i), -b.db(2 * k + 1, i));
      EXPECT_EQ(b.dw(2 * k, i), -b.dw(2 * k + 1, i));
    }
  EXPECT_THROW(simulate_paths(spec, 8, 11, 4), std::invalid_argument);
  EXPECT_NO_THROW(simulate_paths(spec, 8, 11, 4, false));
}

TEST(Simulation, ReproducibleAcrossThreadCounts) {
  CoefficientSpec spec{{0.0, 0.5, 1.0}, {0.5, -0.2}, {0.2, 0.0}, {0.3, 0.1}, {0.1, 0.0}, 1.0, 0.0};
  const auto a = simulate_paths(spec, 8, 1000, 99, true, 1);
  const auto b = simulate_paths(spec, 8, 1000, 99, true, 4);
  EXPECT_EQ(a.dB, b.dB);
  EXPECT_EQ(a.dW, b.dW);
  EXPECT_EQ(a.S, b.S);
  const auto fa = build_forward_exponential(spec, 1.5, 0.2, a, 1);
  const auto fb = build_forward_exponential(spec, 1.5, 0.2, b, 3);
  EXPECT_EQ(fa.inv_gamma, fb.inv_gamma);
  EXPECT_EQ(fa.a_path, fb.a_path);
  const auto c = simulate_paths(spec, 8, 1000, 100, true, 1);
  EXPECT_NE(a.dB, c.dB);
}

TEST(Simulation, AlignmentErrors) {
  CoefficientSpec spec{{0.0, 0.3, 1.0}, {0.5, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, 1.0, 0.0};
  EXPECT_THROW(simulate_paths(spec, 4, 10, 1), AlignmentError);
  EXPECT_NO_THROW(simulate_paths(spec, 10, 10, 1));
  const auto b = simulate_paths(CoefficientSpec::constant(0, 0, 0, 0, 1.0), 4, 10, 1);
  EXPECT_EQ(b.index_of(0.75), 3);
  EXPECT_THROW(b.index_of(0.3), AlignmentError);
  EXPECT_THROW(density_path(b, {{0.0, 0.3, 1.0}, {1.0, 0.0}}, PiecewiseConstant::constant(0, 1)), AlignmentError);
}

TEST(Density, ZeroPriceOfRiskGivesUnitDensity) {
  const auto spec = CoefficientSpec::constant(0.5, 0, 0, 0, 1.0);
  const auto b = simulate_paths(spec, 8, 100, 5);
  const auto z = density_path(b, PiecewiseConstant::constant(0, 1), PiecewiseConstant::constant(0, 1));
  for (double v : z.z) EXPECT_EQ(v, 1.0);
}

TEST(Density, GirsanovMartingales) {
  const auto spec = CoefficientSpec::constant(0.5, 0, 0, 0, 1.0, 1.0);
  const auto b = simulate_paths(spec, 16, 40000, 6);
  const auto z = density_path(b, spec.theta_fn(), PiecewiseConstant::constant(0.4, 1));
  const auto mz = moments(pair_means(terminal(b, [&](std::size_t p) { return z.at(p, 16); })));
  EXPECT_LT(std::abs(mz.mean - 1.0), kZ * mz.se);
  const auto ms = moments(pair_means(terminal(b, [&](std::size_t p) { return z.at(p, 16) * b.s(p, 16); })));
  EXPECT_LT(std::abs(ms.mean - 1.0), kZ * ms.se);
  for (double v : z.z) EXPECT_GT(v, 0.0);
}

TEST(Density, ClosedFormOnOnePath) {
  const auto spec = CoefficientSpec::constant(0.5, 0, 0, 0, 1.0);
  const auto b = simulate_paths(spec, 4, 2, 7);
  const auto z = density_path(b, PiecewiseConstant::constant(0.5, 1), PiecewiseConstant::constant(0.2, 1));
  double sb = 0, sw = 0;
  for (int i = 0; i < 4; ++i) {
    sb += b.db(0, i);
    sw += b.dw(0, i);
  }
  EXPECT_NEAR(z.at(0, 4), std::exp(-0.5 * sb - 0.2 * sw - 0.5 * (0.25 + 0.04)), 1e-14);
}

TEST(Field, ClassicalForwardExponential) {
  const auto spec = CoefficientSpec::constant(0.7, 0, 0, 0, 2.0);
  const auto b = simulate_paths(spec, 8, 50, 8);
  const auto f = build_forward_exponential(spec, 1.5, 0.3, b);
  for (std::size_t p = 0; p < b.n_paths; ++p)
    for (int i = 0; i <= 8; ++i) {
      EXPECT_NEAR(f.inv_g(p, i), 1 / 1.5, 1e-15);
      EXPECT_NEAR(f.a(p, i), 0.3 + 0.5 * 0.49 * b.grid[static_cast<std::size_t>(i)], 1e-13);
    }
}

TEST(Field, FlatPathFormula) {
  const auto spec = CoefficientSpec::constant(0.5, 0.2, 0, 0, 1.0);
  auto b = simulate_paths(spec, 16, 2, 9);
  std::fill(b.dB.begin(), b.dB.end(), 0.0);
  const auto f = build_forward_exponential(spec, 2.0, 0.0, b);
  EXPECT_NEAR(f.inv_g(0, 16), 0.5 * std::exp(0.2 * 0.5 - 0.5 * 0.04), 1e-14);
}

TEST(Field, InitialValuesAndPositivity) {
  CoefficientSpec spec{{0.0, 0.5, 1.0}, {0.5, -0.2}, {0.4, 0.9}, {0.3, 0.1}, {0.1, -0.3}, 1.0, 0.0};
  const auto b = simulate_paths(spec, 8, 2000, 10);
  const auto f = build_forward_exponential(spec, 0.8, -0.4, b);
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    EXPECT_EQ(f.inv_g(p, 0), 1 / 0.8);
    EXPECT_EQ(f.a(p, 0), -0.4);
  }
  EXPECT_GT(*std::min_element(f.inv_gamma.begin(), f.inv_gamma.end()), 0.0);
  EXPECT_THROW(build_forward_exponential(spec, 0.0, 0.0, b), std::domain_error);
  EXPECT_THROW(build_forward_exponential(spec, -1.0, 0.0, b), std::domain_error);
}

TEST(Regularity, Classes) {
  const auto regular = validate_regularity(CoefficientSpec::constant(0.5, 0.0, 0.3, 0.1, 1.0), 1, 0);
  EXPECT_TRUE(regular.passed());
  EXPECT_NEAR(regular.at("regularity.novikov").value, 0.25, 1e-15);

  const auto lognormal = validate_regularity(CoefficientSpec::constant(0.5, 0.2, 0.0, 0.0, 1.0), 1, 0);
  EXPECT_EQ(lognormal.at("regularity.exponential_moments").verdict, Verdict::fail);
  EXPECT_NE(lognormal.at("regularity.exponential_moments").detail.find("FAIL-ANALYTIC"), std::string::npos);
  EXPECT_EQ(lognormal.at("regularity.bounded").verdict, Verdict::pass);

  const auto mixed = validate_regularity(CoefficientSpec::constant(0.5, 0.2, 0.3, 0.0, 1.0), 1, 0);
  EXPECT_EQ(mixed.at("regularity.exponential_moments").verdict, Verdict::undetermined);
}

TEST(PiecewiseConstant, IntegrateAndCombine) {
  const PiecewiseConstant a{{0.0, 0.5, 1.0}, {0.4, 0.0}};
  EXPECT_NEAR(a.integrate([](double v) { return v * v; }, 1.0), 0.08, 1e-15);
  EXPECT_NEAR(a.integrate([](double v) { return v; }, 0.25), 0.1, 1e-15);
  const auto d = combine(a, PiecewiseConstant{{0.0, 0.25, 1.0}, {1.0, 2.0}}, std::plus<>{});
  EXPECT_EQ(d.breakpoints, (std::vector<double>{0.0, 0.25, 0.5, 1.0}));
  ASSERT_EQ(d.values.size(), 3u);
  EXPECT_NEAR(d.values[0], 1.4, 1e-15);
  EXPECT_NEAR(d.values[1], 2.4, 1e-15);
  EXPECT_NEAR(d.values[2], 2.0, 1e-15);
  EXPECT_THROW((PiecewiseConstant{{0.1, 1.0}, {1.0}}.validate()), std::invalid_argument);
  EXPECT_THROW((PiecewiseConstant{{0.0, 1.0}, {NAN}}.validate()), std::invalid_argument);
}

TEST(Export, CsvLayout) {
  const auto spec = CoefficientSpec::constant(0.5, 0, 0.3, 0, 1.0);
  const auto b = simulate_paths(spec, 2, 4, 11);
  const auto f = build_forward_exponential(spec, 1, 0, b);
  std::map<std::string, DensityPaths> zs{{"zero", density_path(b, spec.theta_fn(), PiecewiseConstant::constant(0, 1))}};
  std::ostringstream os;
  export_paths_csv(os, b, f, zs, 3);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "path,t,S,Z_zero,inv_gamma,A");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3 * 3);
}

}  // namespace
}  // namespace fwdperf
