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

// Small numerical kernels shared by the tree and Monte Carlo verifiers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

namespace fwdperf::numerics {

/// Pairwise (tree) summation. The association order depends only on the
/// length of the input, so results do not change with how the terms were
/// produced.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

/// Root of a nonincreasing function g. Brackets by doubling [-1, 1] until
/// g(lo) >= 0 >= g(hi), then runs TOMS 748 to machine precision.
/// Throws std::runtime_error if the bracket grows beyond `max_width`.
inline double decreasing_root(const std::function<double(double)>& g, double max_width = 1e8) {
  constexpr double big = std::numeric_limits<double>::max() / 4;
  auto f = [&](double x) {
    const double v = g(x);
    if (std::isnan(v)) throw std::domain_error("decreasing_root: NaN");
    return std::clamp(v, -big, big);
  };
  double lo = -1.0, hi = 1.0;
  double f_lo = f(lo), f_hi = f(hi);
  while (f_lo < 0.0 || f_hi > 0.0) {
    if (f_lo < 0.0) {
      hi = lo;
      f_hi = f_lo;
      lo *= 2.0;
      f_lo = f(lo);
    } else {
      lo = hi;
      f_lo = f_hi;
      hi *= 2.0;
      f_hi = f(hi);
    }
    if (hi - lo > max_width || std::abs(lo) > max_width || std::abs(hi) > max_width)
      throw std::runtime_error("decreasing_root: no sign change within width " +
                               std::to_string(max_width));
  }
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  std::uintmax_t iters = 300;
  auto done = [](double a, double b) {
    return std::abs(b - a) <=
           4 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(a), std::abs(b)});
  };
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, done, iters);
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

/// Orthonormal basis of the null space of a (rows x cols) matrix.
inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, double rel_tol = 1e-12) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * std::max(1.0, smax)) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

/// sum_j phi_j(x_j) with per-coordinate first and second derivatives.
struct SeparableObjective {
  std::function<double(std::size_t, double)> value;
  std::function<double(std::size_t, double)> d1;
  std::function<double(std::size_t, double)> d2;

  double total(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) s += value(static_cast<std::size_t>(j), x(j));
    return s;
  }
};

struct BarrierOptions {
  double gap_tol = 1e-10;  // m / t at termination
  int max_newton = 200;    // total Newton steps across all centerings
  double t0 = 1.0;
  double mu = 20.0;
  bool polish = true;  // barrier-free Newton steps at the end if they stay interior
};

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double duality_gap = 0.0;
  double kkt_residual = 0.0;
  int newton_iterations = 0;
  bool converged = false;
};

/// Minimizes a separable convex function over {x : A x = b, x >= 0} by the
/// log-barrier method with feasible-start Newton steps in null-space
/// coordinates. `x0` must satisfy A x0 = b and x0 > 0.
inline BarrierResult barrier_minimize(const SeparableObjective& f, const Eigen::MatrixXd& a,
                                      const Eigen::VectorXd& x0, const BarrierOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(x0(j) > 0.0)) throw std::invalid_argument("barrier_minimize: start must be interior");
  const Eigen::MatrixXd basis = null_space(a);
  const Eigen::Index k = basis.cols();
  const double m = static_cast<double>(n);

  BarrierResult res;
  res.x = x0;
  auto grad = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(n);
    for (Eigen::Index j = 0; j < n; ++j) g(j) = f.d1(static_cast<std::size_t>(j), x(j));
    return g;
  };
  auto hess_diag = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd h(n);
    for (Eigen::Index j = 0; j < n; ++j) h(j) = f.d2(static_cast<std::size_t>(j), x(j));
    return h;
  };
  auto kkt = [&](const Eigen::VectorXd& x, double inv_t) {
    Eigen::VectorXd r = grad(x);
    if (inv_t > 0)
      for (Eigen::Index j = 0; j < n; ++j) r(j) -= inv_t / x(j);
    if (k == 0) return 0.0;
    return (basis * (basis.transpose() * r)).cwiseAbs().maxCoeff();
  };

  if (k == 0) {
    res.objective = f.total(res.x);
    res.converged = true;
    return res;
  }

  // Scaled barrier objective f(x) - (1/t) sum log x: same minimizer as
  // t f - sum log x, but O(1) in magnitude.
  auto phi = [&](const Eigen::VectorXd& x, double inv_t) {
    double s = f.total(x);
    if (inv_t > 0)
      for (Eigen::Index j = 0; j < n; ++j) s -= inv_t * std::log(x(j));
    return s;
  };

  // Returns false when no further progress is possible.
  auto newton_step = [&](double inv_t, double& decrement) {
    Eigen::VectorXd g = grad(res.x);
    Eigen::VectorXd h = hess_diag(res.x);
    if (inv_t > 0)
      for (Eigen::Index j = 0; j < n; ++j) {
        g(j) -= inv_t / res.x(j);
        h(j) += inv_t / (res.x(j) * res.x(j));
      }
    const Eigen::VectorXd gz = basis.transpose() * g;
    const Eigen::MatrixXd hz = basis.transpose() * h.asDiagonal() * basis;
    const Eigen::VectorXd dz = hz.ldlt().solve(-gz);
    decrement = -gz.dot(dz);
    const Eigen::VectorXd dx = basis * dz;
    double alpha = 1.0;
    while (alpha > 1e-20) {
      bool interior = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (!(res.x(j) + alpha * dx(j) > 0.0)) {
          interior = false;
          break;
        }
      if (interior) break;
      alpha *= 0.5;
    }
    const double base = phi(res.x, inv_t);
    while (alpha > 1e-20) {
      const Eigen::VectorXd trial = res.x + alpha * dx;
      bool interior = true;
      for (Eigen::Index j = 0; j < n; ++j) interior &= trial(j) > 0.0;
      if (interior && phi(trial, inv_t) <= base - 0.25 * alpha * decrement) {
        res.x = trial;
        ++res.newton_iterations;
        return true;
      }
      alpha *= 0.5;
    }
    ++res.newton_iterations;
    return false;
  };

  double t = opt.t0;
  while (true) {
    const double inv_t = 1.0 / t;
    for (int inner = 0; inner < 50; ++inner) {
      if (res.newton_iterations >= opt.max_newton) break;
      double dec = 0.0;
      const bool moved = newton_step(inv_t, dec);
      if (!moved || dec / 2 <= 1e-15) break;
    }
    if (m / t <= opt.gap_tol || res.newton_iterations >= opt.max_newton) break;
    t *= opt.mu;
  }
  res.duality_gap = m / t;
  res.converged = res.duality_gap <= opt.gap_tol && res.newton_iterations < opt.max_newton;
  double inv_t_final = 1.0 / t;

  if (opt.polish) {
    const Eigen::VectorXd keep = res.x;
    const int keep_it = res.newton_iterations;
    bool ok = true;
    for (int i = 0; i < 8 && ok; ++i) {
      double dec = 0.0;
      ok = newton_step(0.0, dec);
      if (dec / 2 <= 1e-18) break;
    }
    const double before = kkt(keep, inv_t_final);
    const double after = kkt(res.x, 0.0);
    if (after <= before && f.total(res.x) <= f.total(keep) + 1e-15) {
      inv_t_final = 0.0;
      res.duality_gap = 0.0;
    } else {
      res.x = keep;
      res.newton_iterations = keep_it;
    }
  }
  res.objective = f.total(res.x);
  res.kkt_residual = kkt(res.x, inv_t_final);
  return res;
}

}  // namespace fwdperf::numerics
