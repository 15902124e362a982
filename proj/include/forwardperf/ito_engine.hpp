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

// Exact simulation of the one-asset, two-Brownian market dS = theta dt + dB
// with an independent W, density processes, and exponential forward
// performance fields built from (delta, phi, rho).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forwardperf/parallel.hpp"
#include "forwardperf/philox.hpp"
#include "forwardperf/report.hpp"

namespace fwdperf {

class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Deterministic function of time, constant on [b_i, b_{i+1}).
struct PiecewiseConstant {
  std::vector<double> breakpoints;  // b_0 = 0 < ... < b_m
  std::vector<double> values;       // m values

  static PiecewiseConstant constant(double c, double horizon) { return {{0.0, horizon}, {c}}; }

  void validate(const std::string& name = "coefficient") const {
    if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size())
      throw std::invalid_argument(name + ": need m+1 breakpoints for m values");
    if (breakpoints.front() != 0.0) throw std::invalid_argument(name + ": breakpoints must start at 0");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
      if (!(breakpoints[i] > breakpoints[i - 1]))
        throw std::invalid_argument(name + ": breakpoints must be increasing");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument(name + ": non-finite value");
  }

  double horizon() const { return breakpoints.back(); }

  double at(double t) const {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    std::size_t i = it == breakpoints.begin() ? 0 : static_cast<std::size_t>(it - breakpoints.begin()) - 1;
    return values[std::min(i, values.size() - 1)];
  }

  double sup_abs() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
  }

  bool is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  }

  /// Integral over [0, t] of f(value).
  template <class F>
  double integrate(F f, double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double lo = breakpoints[i], hi = std::min(breakpoints[i + 1], t);
      if (hi > lo) s += f(values[i]) * (hi - lo);
    }
    return s;
  }

  /// Values on each step of a uniform grid with `n_steps` steps over
  /// [0, horizon]; every breakpoint must be a grid point.
  std::vector<double> on_grid(double horizon, int n_steps, const std::string& name = "coefficient") const {
    const double dt = horizon / n_steps;
    if (std::abs(breakpoints.back() - horizon) > 1e-12 * horizon)
      throw AlignmentError(name + ": last breakpoint differs from the horizon");
    for (double b : breakpoints) {
      const double k = b / dt;
      if (std::abs(k - std::round(k)) > 1e-9)
        throw AlignmentError(name + ": breakpoint " + std::to_string(b) +
                             " is not on the simulation grid (dt = " + std::to_string(dt) + ")");
    }
    std::vector<double> out(static_cast<std::size_t>(n_steps));
    for (int i = 0; i < n_steps; ++i) out[static_cast<std::size_t>(i)] = at((i + 0.5) * dt);
    return out;
  }
};

/// Pointwise combination a(t) op b(t) on the merged breakpoints.
template <class Op>
PiecewiseConstant combine(const PiecewiseConstant& a, const PiecewiseConstant& b, Op op) {
  std::vector<double> bp = a.breakpoints;
  bp.insert(bp.end(), b.breakpoints.begin(), b.breakpoints.end());
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  const double T = std::min(a.horizon(), b.horizon());
  while (bp.back() > T) bp.pop_back();
  PiecewiseConstant out;
  out.breakpoints = bp;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double mid = 0.5 * (bp[i] + bp[i + 1]);
    out.values.push_back(op(a.at(mid), b.at(mid)));
  }
  return out;
}

struct CoefficientSpec {
  std::vector<double> breakpoints;
  std::vector<double> theta, delta, phi, rho;
  double horizon = 1.0;
  double s0 = 0.0;

  static CoefficientSpec constant(double theta, double delta, double phi, double rho, double horizon,
                                  double s0 = 0.0) {
    return {{0.0, horizon}, {theta}, {delta}, {phi}, {rho}, horizon, s0};
  }

  PiecewiseConstant coefficient(const std::vector<double>& v) const { return {breakpoints, v}; }
  PiecewiseConstant theta_fn() const { return coefficient(theta); }
  PiecewiseConstant delta_fn() const { return coefficient(delta); }
  PiecewiseConstant phi_fn() const { return coefficient(phi); }
  PiecewiseConstant rho_fn() const { return coefficient(rho); }

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be > 0");
    if (!std::isfinite(s0)) throw std::invalid_argument("s0 must be finite");
    if (breakpoints.empty() || std::abs(breakpoints.back() - horizon) > 1e-12 * horizon)
      throw std::invalid_argument("breakpoints must end at the horizon");
    theta_fn().validate("theta");
    delta_fn().validate("delta");
    phi_fn().validate("phi");
    rho_fn().validate("rho");
  }
};

/// Simulated paths. Arrays are row-major by path: increments have n_steps
/// entries per path, prices n_steps + 1.
struct PathBundle {
  CoefficientSpec spec;
  std::vector<double> grid;
  double dt = 0.0;
  int n_steps = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  bool antithetic = true;
  std::vector<double> dB, dW, S;

  double db(std::size_t p, int i) const { return dB[p * static_cast<std::size_t>(n_steps) + static_cast<std::size_t>(i)]; }
  double dw(std::size_t p, int i) const { return dW[p * static_cast<std::size_t>(n_steps) + static_cast<std::size_t>(i)]; }
  double s(std::size_t p, int i) const { return S[p * static_cast<std::size_t>(n_steps + 1) + static_cast<std::size_t>(i)]; }

  /// Grid index of time t; throws if t is not a grid point.
  int index_of(double t) const {
    const double k = t / dt;
    const long r = std::lround(k);
    if (std::abs(k - static_cast<double>(r)) > 1e-9 || r < 0 || r > n_steps)
      throw AlignmentError("time " + std::to_string(t) + " is not a grid point");
    return static_cast<int>(r);
  }
};

/// Exact Gaussian increments; path p of pair k = p/2 uses counter stream k,
/// odd paths carry the negated increments when `antithetic` is set.
inline PathBundle simulate_paths(const CoefficientSpec& spec, int n_steps, std::size_t n_paths,
                                 std::uint64_t seed, bool antithetic = true, unsigned threads = 0) {
  spec.validate();
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (antithetic && n_paths % 2 != 0) throw std::invalid_argument("antithetic sampling needs an even n_paths");
  PathBundle b;
  b.spec = spec;
  b.n_steps = n_steps;
  b.n_paths = n_paths;
  b.seed = seed;
  b.antithetic = antithetic;
  b.dt = spec.horizon / n_steps;
  for (int i = 0; i <= n_steps; ++i) b.grid.push_back(i * b.dt);
  const auto theta = spec.theta_fn().on_grid(spec.horizon, n_steps, "theta");
  for (const auto& c : {spec.delta_fn(), spec.phi_fn(), spec.rho_fn()}) c.on_grid(spec.horizon, n_steps);
  const std::size_t ns = static_cast<std::size_t>(n_steps);
  b.dB.resize(n_paths * ns);
  b.dW.resize(n_paths * ns);
  b.S.resize(n_paths * (ns + 1));
  const double sq = std::sqrt(b.dt);
  parallel_for(
      n_paths,
      [&](std::size_t p) {
        const std::uint64_t stream = antithetic ? p / 2 : p;
        const double sign = antithetic && (p % 2 == 1) ? -1.0 : 1.0;
        double s = spec.s0;
        b.S[p * (ns + 1)] = s;
        for (std::size_t i = 0; i < ns; ++i) {
          const auto [z1, z2] = rng::normal_pair(seed, stream, static_cast<std::uint32_t>(i));
          const double db = sign * sq * z1, dw = sign * sq * z2;
          b.dB[p * ns + i] = db;
          b.dW[p * ns + i] = dw;
          s += theta[i] * b.dt + db;
          b.S[p * (ns + 1) + i + 1] = s;
        }
      },
      threads);
  return b;
}

/// Z_t = exp(-sum nu1 dB - sum nu2 dW - 1/2 sum (nu1^2 + nu2^2) dt), one row
/// of n_steps + 1 values per path.
struct DensityPaths {
  std::size_t n_paths = 0;
  int n_steps = 0;
  std::vector<double> z;
  double at(std::size_t p, int i) const { return z[p * static_cast<std::size_t>(n_steps + 1) + static_cast<std::size_t>(i)]; }
};

inline DensityPaths density_path(const PathBundle& b, const PiecewiseConstant& nu1,
                                 const PiecewiseConstant& nu2, unsigned threads = 0) {
  nu1.validate("nu1");
  nu2.validate("nu2");
  const auto v1 = nu1.on_grid(b.spec.horizon, b.n_steps, "nu1");
  const auto v2 = nu2.on_grid(b.spec.horizon, b.n_steps, "nu2");
  DensityPaths d;
  d.n_paths = b.n_paths;
  d.n_steps = b.n_steps;
  const std::size_t ns = static_cast<std::size_t>(b.n_steps);
  d.z.resize(b.n_paths * (ns + 1));
  parallel_for(
      b.n_paths,
      [&](std::size_t p) {
        double lz = 0.0;
        d.z[p * (ns + 1)] = 1.0;
        for (std::size_t i = 0; i < ns; ++i) {
          lz += -v1[i] * b.dB[p * ns + i] - v2[i] * b.dW[p * ns + i] -
                0.5 * (v1[i] * v1[i] + v2[i] * v2[i]) * b.dt;
          d.z[p * (ns + 1) + i + 1] = std::exp(lz);
        }
      },
      threads);
  return d;
}

/// 1/gamma_t and A_t along every path.
struct FieldPaths {
  std::size_t n_paths = 0;
  int n_steps = 0;
  double gamma0 = 1.0, a0 = 0.0;
  std::vector<double> inv_gamma, a_path;
  double inv_g(std::size_t p, int i) const { return inv_gamma[p * static_cast<std::size_t>(n_steps + 1) + static_cast<std::size_t>(i)]; }
  double a(std::size_t p, int i) const { return a_path[p * static_cast<std::size_t>(n_steps + 1) + static_cast<std::size_t>(i)]; }
};

/// 1/gamma_t = (1/gamma_0) exp(sum delta dS - 1/2 sum delta^2 dt) and
/// A_t = A_0 + 1/2 sum (theta - delta)^2 dt + gamma_t sum rho dS
///       - 1/2 sum phi^2 dt - sum phi dW.
inline FieldPaths build_forward_exponential(const CoefficientSpec& spec, double gamma0, double a0,
                                            const PathBundle& b, unsigned threads = 0) {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw std::domain_error("gamma0 must be > 0");
  if (!std::isfinite(a0)) throw std::domain_error("A0 must be finite");
  const int n = b.n_steps;
  const auto th = spec.theta_fn().on_grid(spec.horizon, n, "theta");
  const auto de = spec.delta_fn().on_grid(spec.horizon, n, "delta");
  const auto ph = spec.phi_fn().on_grid(spec.horizon, n, "phi");
  const auto rh = spec.rho_fn().on_grid(spec.horizon, n, "rho");
  FieldPaths f;
  f.n_paths = b.n_paths;
  f.n_steps = n;
  f.gamma0 = gamma0;
  f.a0 = a0;
  const std::size_t ns = static_cast<std::size_t>(n);
  f.inv_gamma.resize(b.n_paths * (ns + 1));
  f.a_path.resize(b.n_paths * (ns + 1));
  parallel_for(
      b.n_paths,
      [&](std::size_t p) {
        double log_ig = -std::log(gamma0), drift = 0.0, rho_ds = 0.0, noise = 0.0;
        f.inv_gamma[p * (ns + 1)] = 1.0 / gamma0;
        f.a_path[p * (ns + 1)] = a0;
        for (std::size_t i = 0; i < ns; ++i) {
          const double ds = th[i] * b.dt + b.dB[p * ns + i];
          log_ig += de[i] * ds - 0.5 * de[i] * de[i] * b.dt;
          drift += 0.5 * (th[i] - de[i]) * (th[i] - de[i]) * b.dt - 0.5 * ph[i] * ph[i] * b.dt;
          rho_ds += rh[i] * ds;
          noise += ph[i] * b.dW[p * ns + i];
          const double ig = std::exp(log_ig);
          f.inv_gamma[p * (ns + 1) + i + 1] = ig;
          f.a_path[p * (ns + 1) + i + 1] = a0 + drift + rho_ds / ig - noise;
        }
      },
      threads);
  return f;
}

enum class RegularityClass { pass, fail_analytic, undetermined };

inline RegularityClass exponential_moment_class(const CoefficientSpec& spec) {
  if (spec.delta_fn().is_zero()) return RegularityClass::pass;
  if (spec.rho_fn().is_zero() && spec.phi_fn().is_zero()) return RegularityClass::fail_analytic;
  return RegularityClass::undetermined;
}

/// Boundedness, Novikov and exponential-moment conditions for
/// piecewise-constant deterministic coefficients.
inline VerificationReport validate_regularity(const CoefficientSpec& spec, double gamma0, double a0,
                                              double novikov_eps = 0.5) {
  spec.validate();
  VerificationReport rep("regularity");
  {
    CheckEntry e;
    e.id = "regularity.bounded";
    e.check_tag = "ito.bounded_coefficients";
    const double sup = std::max({spec.theta_fn().sup_abs(), spec.delta_fn().sup_abs(),
                                 spec.phi_fn().sup_abs(), spec.rho_fn().sup_abs()});
    e.value = sup;
    e.verdict = Verdict::pass;
    std::ostringstream d;
    d << "sup|theta|=" << spec.theta_fn().sup_abs() << " sup|delta|=" << spec.delta_fn().sup_abs()
      << " sup|phi|=" << spec.phi_fn().sup_abs() << " sup|rho|=" << spec.rho_fn().sup_abs()
      << "; deterministic piecewise-constant coefficients are bounded";
    e.detail = d.str();
    rep.add(std::move(e));
  }
  {
    CheckEntry e;
    e.id = "regularity.novikov";
    e.check_tag = "ito.novikov";
    const double ex = (0.5 + novikov_eps) * spec.theta_fn().integrate([](double v) { return v * v; }, spec.horizon);
    e.value = ex;
    e.verdict = std::isfinite(ex) ? Verdict::pass : Verdict::fail;
    std::ostringstream d;
    d << "exponent (1/2 + " << novikov_eps << ") * int theta^2 = " << ex << " (deterministic, finite)";
    e.detail = d.str();
    rep.add(std::move(e));
  }
  {
    CheckEntry e;
    e.id = "regularity.exponential_moments";
    e.check_tag = "ito.exponential_moments";
    e.value = gamma0;
    switch (exponential_moment_class(spec)) {
      case RegularityClass::pass:
        e.verdict = Verdict::pass;
        e.detail = "delta = 0: gamma_T = gamma_0 and A_T is Gaussian, so exp(A_T + n gamma_T) is integrable";
        break;
      case RegularityClass::fail_analytic:
        e.verdict = Verdict::fail;
        e.detail = "FAIL-ANALYTIC: delta != 0 with rho = phi = 0 makes gamma_T lognormal, and "
                   "exp(n gamma_T) is not integrable";
        break;
      case RegularityClass::undetermined:
        e.verdict = Verdict::undetermined;
        e.detail = "delta != 0 with rho or phi nonzero: integrability not decided";
        break;
    }
    (void)a0;
    rep.add(std::move(e));
  }
  return rep;
}

/// CSV export: columns path, t, S, Z_<label>..., inv_gamma, A; one row per
/// (path, time), at most `max_paths` paths.
inline void export_paths_csv(std::ostream& os, const PathBundle& b, const FieldPaths& f,
                             const std::map<std::string, DensityPaths>& densities,
                             std::size_t max_paths = SIZE_MAX) {
  os << "path,t,S";
  for (const auto& [label, d] : densities) os << ",Z_" << label;
  os << ",inv_gamma,A\n";
  os.precision(17);
  const std::size_t np = std::min(max_paths, b.n_paths);
  for (std::size_t p = 0; p < np; ++p)
    for (int i = 0; i <= b.n_steps; ++i) {
      os << p << ',' << b.grid[static_cast<std::size_t>(i)] << ',' << b.s(p, i);
      for (const auto& [label, d] : densities) os << ',' << d.at(p, i);
      os << ',' << f.inv_g(p, i) << ',' << f.a(p, i) << '\n';
    }
}

}  // namespace fwdperf
