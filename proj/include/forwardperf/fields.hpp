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

#pragma once

// Utility slices, their convex conjugates, and the exponential family
// U(x) = -exp(-gamma x + A).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace fwdperf {

/// Raised when a utility slice does not let the first-order condition be
/// bracketed inside the configured search width.
class InadaViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// h(y) = y log y - y, extended by continuity with h(0) = 0.
inline double h_entropy(double y) {
  if (!(y >= 0.0)) throw std::domain_error("h_entropy: argument must be >= 0");
  if (y == 0.0) return 0.0;
  return y * std::log(y) - y;
}

/// A concave, increasing utility x -> U(x) together with its derivative.
struct UtilitySlice {
  std::function<double(double)> eval;
  std::function<double(double)> deriv;
};

/// Convex conjugate V(y) = sup_x (U(x) - x y) together with the maximizing
/// wealth x*(y). `eval(0)` is the adjoined value sup_x U(x), which may be
/// +infinity for slices unbounded above.
struct DualSlice {
  std::function<double(double)> eval;
  std::function<double(double)> minimizer;
};

/// Coefficients of an exponential field on an event tree, one value per node.
/// Node 0 is the root, so gamma0()/a0() are the initial values.
struct ExponentialFieldParams {
  std::vector<double> gamma;
  std::vector<double> a_shift;

  ExponentialFieldParams() = default;
  ExponentialFieldParams(std::vector<double> g, std::vector<double> a)
      : gamma(std::move(g)), a_shift(std::move(a)) {
    if (gamma.size() != a_shift.size())
      throw std::invalid_argument("ExponentialFieldParams: gamma and a_shift sizes differ");
  }

  static ExponentialFieldParams constant(std::size_t n_nodes, double g, double a) {
    return {std::vector<double>(n_nodes, g), std::vector<double>(n_nodes, a)};
  }

  std::size_t size() const { return gamma.size(); }
  double gamma0() const { return gamma.at(0); }
  double a0() const { return a_shift.at(0); }

  double gamma_at(std::size_t node) const {
    if (node >= gamma.size())
      throw std::out_of_range("exponential field: no value at node " + std::to_string(node));
    return gamma[node];
  }
  double a_at(std::size_t node) const {
    if (node >= a_shift.size())
      throw std::out_of_range("exponential field: no value at node " + std::to_string(node));
    return a_shift[node];
  }
};

inline double eval_exponential(double gamma, double a, double x) {
  return -std::exp(-gamma * x + a);
}

inline double eval_exponential(const ExponentialFieldParams& p, std::size_t node, double x) {
  return eval_exponential(p.gamma_at(node), p.a_at(node), x);
}

/// V(y) = h(y / gamma) - (y / gamma) A, the closed-form conjugate of
/// -exp(-gamma x + A).
inline double conjugate_exponential(double gamma, double a, double y) {
  if (!(gamma > 0.0)) throw std::domain_error("conjugate_exponential: gamma must be > 0");
  if (!(y >= 0.0)) throw std::domain_error("conjugate_exponential: y must be >= 0");
  if (y == 0.0) return 0.0;
  const double r = y / gamma;
  return h_entropy(r) - r * a;
}

inline UtilitySlice exponential_slice(double gamma, double a) {
  if (!(gamma > 0.0)) throw std::domain_error("exponential_slice: gamma must be > 0");
  return {[gamma, a](double x) { return -std::exp(-gamma * x + a); },
          [gamma, a](double x) { return gamma * std::exp(-gamma * x + a); }};
}

inline DualSlice exponential_dual(double gamma, double a) {
  if (!(gamma > 0.0)) throw std::domain_error("exponential_dual: gamma must be > 0");
  return {[gamma, a](double y) { return conjugate_exponential(gamma, a, y); },
          [gamma, a](double y) {
            if (!(y > 0.0)) throw std::domain_error("dual minimizer needs y > 0");
            return (a - std::log(y / gamma)) / gamma;
          }};
}

struct ConjugateOptions {
  double foc_tol = 1e-10;      // on |U'(x*) - y|, relative to max(1, y)
  double max_width = 1e6;      // bracket-expansion cap
  int max_iterations = 400;
};

struct ConjugateResult {
  double value;
  double x_star;
};

/// Numerical Fenchel-Legendre conjugate of a utility slice at y > 0.
///
/// The bracket starts at [-1, 1] and doubles on whichever side does not yet
/// straddle U'(x) = y. Root finding is TOMS 748 on U'(x) - y, which is
/// decreasing in x.
inline ConjugateResult conjugate_numeric(const UtilitySlice& slice, double y,
                                         const ConjugateOptions& opt = {}) {
  if (!(y > 0.0)) throw std::domain_error("conjugate_numeric: y must be > 0");
  constexpr double big = std::numeric_limits<double>::max() / 4;
  auto foc = [&](double x) {
    const double d = slice.deriv(x) - y;
    if (std::isnan(d)) throw std::domain_error("conjugate_numeric: derivative is NaN");
    return std::clamp(d, -big, big);
  };

  double lo = -1.0, hi = 1.0;
  double f_lo = foc(lo), f_hi = foc(hi);
  while (f_lo < 0.0 || f_hi > 0.0) {
    if (f_lo < 0.0) {
      lo *= 2.0;
      f_lo = foc(lo);
    }
    if (f_hi > 0.0) {
      hi *= 2.0;
      f_hi = foc(hi);
    }
    if (hi - lo > opt.max_width)
      throw InadaViolation("conjugate_numeric: marginal utility does not reach y = " +
                           std::to_string(y) + " inside width " +
                           std::to_string(opt.max_width));
  }

  double x_star;
  if (f_lo == 0.0) {
    x_star = lo;
  } else if (f_hi == 0.0) {
    x_star = hi;
  } else {
    std::uintmax_t iters = static_cast<std::uintmax_t>(opt.max_iterations);
    const double scale = std::max(1.0, y) * opt.foc_tol;
    auto done = [&](double a, double b) {
      return std::abs(b - a) <= 4 * std::numeric_limits<double>::epsilon() *
                                    std::max({1.0, std::abs(a), std::abs(b)});
    };
    auto [a, b] = boost::math::tools::toms748_solve(foc, lo, hi, f_lo, f_hi, done, iters);
    const double fa = std::abs(foc(a)), fb = std::abs(foc(b));
    x_star = fa <= fb ? a : b;
    if (std::min(fa, fb) > scale) {
      // Bracket collapsed to adjacent doubles: accept if no representable
      // point does better.
      if (!done(a, b))
        throw std::runtime_error("conjugate_numeric: first-order condition not met");
    }
  }
  return {slice.eval(x_star) - x_star * y, x_star};
}

/// sup_x U(x), probed along x = 2^k. Returns nullopt when the probe does
/// not settle, i.e. the slice looks unbounded above.
inline std::optional<double> slice_supremum(const UtilitySlice& slice, double tol = 1e-12,
                                            int max_doublings = 60) {
  double x = 1.0;
  double prev = slice.eval(x);
  for (int k = 0; k < max_doublings; ++k) {
    x *= 2.0;
    const double cur = slice.eval(x);
    if (!std::isfinite(cur)) return std::nullopt;
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  return std::nullopt;
}

/// Conjugate of an arbitrary slice built on demand from conjugate_numeric.
inline DualSlice numeric_dual(UtilitySlice slice, ConjugateOptions opt = {}) {
  auto shared = std::make_shared<UtilitySlice>(std::move(slice));
  return {[shared, opt](double y) {
            if (y < 0.0) throw std::domain_error("dual slice: y must be >= 0");
            if (y == 0.0) {
              auto s = slice_supremum(*shared);
              return s ? *s : std::numeric_limits<double>::infinity();
            }
            return conjugate_numeric(*shared, y, opt).value;
          },
          [shared, opt](double y) { return conjugate_numeric(*shared, y, opt).x_star; }};
}

/// Recovers U(x) = inf_y (V(y) + x y) from a dual slice.
///
/// The grid locates the best cell; Brent's method refines between the two
/// neighbours of the best grid point.
inline double bidual(const DualSlice& dual, double x, std::span<const double> y_grid) {
  if (y_grid.empty()) throw std::invalid_argument("bidual: empty y grid");
  for (double y : y_grid)
    if (!(y > 0.0)) throw std::invalid_argument("bidual: grid entries must be > 0");
  std::vector<double> ys(y_grid.begin(), y_grid.end());
  std::sort(ys.begin(), ys.end());
  auto obj = [&](double y) { return dual.eval(y) + x * y; };

  std::size_t best = 0;
  double best_val = obj(ys[0]);
  for (std::size_t i = 1; i < ys.size(); ++i) {
    const double v = obj(ys[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (ys.size() == 1) return best_val;
  const double lo = ys[best == 0 ? 0 : best - 1];
  const double hi = ys[std::min(best + 1, ys.size() - 1)];
  std::uintmax_t iters = 200;
  auto [y_min, v_min] = boost::math::tools::brent_find_minima(
      obj, lo, hi, std::numeric_limits<double>::digits / 2, iters);
  (void)y_min;
  return std::min(v_min, best_val);
}

/// n log-spaced points on [lo, hi].
inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw std::invalid_argument("log_space: bad range");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

inline std::vector<double> lin_space(double lo, double hi, std::size_t n) {
  if (n == 0) throw std::invalid_argument("lin_space: n must be > 0");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

}  // namespace fwdperf
