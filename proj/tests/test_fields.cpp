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
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "forwardperf/fields.hpp"

namespace fwdperf {
namespace {

constexpr double e = std::numbers::e;

TEST(Entropy, KnownValues) {
  EXPECT_DOUBLE_EQ(h_entropy(1.0), -1.0);
  EXPECT_EQ(h_entropy(0.0), 0.0);
  EXPECT_NEAR(h_entropy(e), 0.0, 1e-15);
  EXPECT_NEAR(h_entropy(2.0), -0.6137056388801094, 1e-15);
  EXPECT_THROW(h_entropy(-1e-300), std::domain_error);
}

TEST(Entropy, ConvexAndContinuousAtZero) {
  for (double y : log_space(1e-6, 1e3, 40)) {
    const double d = 1e-3 * y;
    EXPECT_LE(h_entropy(y), 0.5 * (h_entropy(y - d) + h_entropy(y + d)) + 1e-15);
  }
  EXPECT_NEAR(h_entropy(1e-12), 0.0, 1e-10);
}

TEST(Exponential, Evaluation) {
  EXPECT_DOUBLE_EQ(eval_exponential(1.0, 0.0, 0.0), -1.0);
  EXPECT_NEAR(eval_exponential(1.0, 0.0, std::log(2.0)), -0.5, 1e-15);
  EXPECT_NEAR(eval_exponential(2.0, 1.0, 0.0), -e, 1e-15);
  const auto p = ExponentialFieldParams::constant(3, 2.0, 1.0);
  EXPECT_NEAR(eval_exponential(p, 2, 0.0), -e, 1e-15);
  EXPECT_THROW(p.gamma_at(3), std::out_of_range);
}

TEST(Exponential, SliceIsIncreasingConcaveAndInada) {
  const auto s = exponential_slice(1.5, 0.3);
  const auto xs = lin_space(-5.0, 5.0, 101);
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
    EXPECT_GT(s.eval(xs[i + 1]), s.eval(xs[i]));
    EXPECT_GT(s.eval(xs[i]), 0.5 * (s.eval(xs[i - 1]) + s.eval(xs[i + 1])));
    EXPECT_GT(s.deriv(xs[i]), 0.0);
    EXPECT_LT(s.deriv(xs[i + 1]), s.deriv(xs[i]));
  }
  // probe x = -+2^k: marginal utility runs to infinity and to zero
  EXPECT_GT(s.deriv(-64.0), 1e40);
  EXPECT_LT(s.deriv(64.0), 1e-40);
}

TEST(Exponential, ClosedFormConjugate) {
  EXPECT_DOUBLE_EQ(conjugate_exponential(1.0, 0.0, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(conjugate_exponential(1.0, 2.0, 1.0), -3.0);
  EXPECT_EQ(conjugate_exponential(1.0, 0.0, 0.0), 0.0);
  EXPECT_NEAR(conjugate_exponential(1.0, 0.0, 2.0), 2.0 * std::log(2.0) - 2.0, 1e-15);
}

TEST(Exponential, DualMinimizerSatisfiesFenchel) {
  const double g = 0.7, a = -0.4;
  const auto u = exponential_slice(g, a);
  const auto v = exponential_dual(g, a);
  for (double x : lin_space(-3.0, 3.0, 13)) {
    const double y = u.deriv(x);
    EXPECT_NEAR(v.eval(y), u.eval(x) - x * y, 1e-12 * std::max(1.0, std::abs(u.eval(x))));
    EXPECT_NEAR(v.minimizer(y), x, 1e-12);
  }
}

TEST(NumericConjugate, FocExamples) {
  const auto s1 = exponential_slice(1.0, 0.0);
  auto r = conjugate_numeric(s1, 1.0);
  EXPECT_NEAR(r.value, -1.0, 1e-12);
  EXPECT_NEAR(r.x_star, 0.0, 1e-12);
  r = conjugate_numeric(s1, e);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_NEAR(r.x_star, -1.0, 1e-12);
  r = conjugate_numeric(exponential_slice(2.0, 0.0), 2.0);
  EXPECT_NEAR(r.value, -1.0, 1e-12);
  EXPECT_NEAR(r.x_star, 0.0, 1e-12);
}

TEST(NumericConjugate, AgreesWithClosedFormOnGrid) {
  for (double g : {0.5, 1.0, 2.0})
    for (double a : {-1.0, 0.0, 1.0})
      for (double y : log_space(1e-3, 1e3, 20))
        EXPECT_NEAR(conjugate_numeric(exponential_slice(g, a), y).value, conjugate_exponential(g, a, y), 1e-8)
            << "gamma " << g << " a " << a << " y " << y;
}

TEST(NumericConjugate, InadaViolationIsReported) {
  // marginal utility bounded below by 1: no bracket for y < 1
  UtilitySlice s{[](double x) { return x - std::exp(-x); }, [](double x) { return 1.0 + std::exp(-x); }};
  EXPECT_THROW(conjugate_numeric(s, 0.5), InadaViolation);
  EXPECT_NO_THROW(conjugate_numeric(s, 2.0));
}

TEST(NumericDual, AdjoinedValueAtZero) {
  const auto d = numeric_dual(exponential_slice(1.0, 0.0));
  EXPECT_NEAR(d.eval(0.0), 0.0, 1e-12);
  UtilitySlice unbounded{[](double x) { return x - std::exp(-x); }, [](double x) { return 1.0 + std::exp(-x); }};
  EXPECT_TRUE(std::isinf(numeric_dual(unbounded).eval(0.0)));
  EXPECT_THROW(d.eval(-1.0), std::domain_error);
}

TEST(NumericDual, ConvexInY) {
  const auto d = numeric_dual(exponential_slice(1.3, 0.2));
  const auto ys = log_space(1e-2, 1e2, 30);
  for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
    const double mid = 0.5 * (ys[i - 1] + ys[i + 1]);
    EXPECT_LE(d.eval(mid), 0.5 * (d.eval(ys[i - 1]) + d.eval(ys[i + 1])) + 1e-12);
  }
  // V(y) >= U(0) for y >= 0
  for (double y : ys) EXPECT_GE(d.eval(y), eval_exponential(1.3, 0.2, 0.0) - 1e-12);
}

TEST(Bidual, RecoversUtility) {
  const auto grid = log_space(1e-3, 1e3, 200);
  EXPECT_NEAR(bidual(exponential_dual(1.0, 0.0), 0.0, grid), -1.0, 1e-9);
  EXPECT_NEAR(bidual(exponential_dual(1.0, 0.0), std::log(2.0), grid), -0.5, 1e-9);
  EXPECT_NEAR(bidual(exponential_dual(2.0, 1.0), 0.0, grid), -e, 1e-9);
  EXPECT_NEAR(bidual(numeric_dual(exponential_slice(2.0, 1.0)), 0.0, grid), -e, 1e-8);
  EXPECT_THROW(bidual(exponential_dual(1.0, 0.0), 0.0, std::vector<double>{}), std::invalid_argument);
}

TEST(Grids, Endpoints) {
  const auto l = log_space(1e-3, 1e3, 20);
  ASSERT_EQ(l.size(), 20u);
  EXPECT_DOUBLE_EQ(l.front(), 1e-3);
  EXPECT_NEAR(l.back(), 1e3, 1e-9);
  const auto g = lin_space(-1.0, 1.0, 5);
  EXPECT_DOUBLE_EQ(g[2], 0.0);
}

}  // namespace
}  // namespace fwdperf
