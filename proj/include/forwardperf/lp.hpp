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

// Dense two-phase primal simplex for the small linear programs that arise on
// event trees: maximize c'x subject to A x = b, x >= 0. Entering and leaving
// variables follow Bland's rule, so the method terminates on degenerate
// problems and is fully deterministic.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fwdperf::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  double objective = -std::numeric_limits<double>::infinity();
  std::vector<double> x;
};

struct Problem {
  std::vector<double> c;               // objective, size n
  std::vector<std::vector<double>> a;  // m rows of size n
  std::vector<double> b;               // size m
};

namespace detail {

struct Tableau {
  std::size_t m, n_cols;  // n_cols excludes the rhs column
  std::vector<double> t;  // m x (n_cols + 1)
  std::vector<std::size_t> basis;
  std::vector<bool> row_alive;

  double& at(std::size_t i, std::size_t j) { return t[i * (n_cols + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return t[i * (n_cols + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, n_cols); }

  void pivot(std::size_t r, std::size_t col) {
    const double p = at(r, col);
    for (std::size_t j = 0; j <= n_cols; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r || !row_alive[i]) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_cols; ++j) at(i, j) -= f * at(r, j);
      at(i, col) = 0.0;
    }
    basis[r] = col;
  }
};

// Runs simplex iterations maximizing cost'x over the columns flagged in
// `allowed`. Returns false if unbounded.
inline bool iterate(Tableau& tb, const std::vector<double>& cost, const std::vector<bool>& allowed,
                    double tol, std::size_t max_iter) {
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::size_t enter = tb.n_cols;
    for (std::size_t j = 0; j < tb.n_cols && enter == tb.n_cols; ++j) {
      if (!allowed[j]) continue;
      double d = cost[j];
      for (std::size_t i = 0; i < tb.m; ++i)
        if (tb.row_alive[i]) d -= cost[tb.basis[i]] * tb.at(i, j);
      if (d > tol) enter = j;
    }
    if (enter == tb.n_cols) return true;

    std::size_t leave = tb.m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tb.m; ++i) {
      if (!tb.row_alive[i]) continue;
      const double a = tb.at(i, enter);
      if (a <= tol) continue;
      const double ratio = tb.rhs(i) / a;
      if (ratio < best - tol ||
          (std::abs(ratio - best) <= tol && leave < tb.m && tb.basis[i] < tb.basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave == tb.m) return false;
    tb.pivot(leave, enter);
  }
  throw std::runtime_error("simplex: iteration limit reached");
}

}  // namespace detail

/// Maximizes c'x over {A x = b, x >= 0}.
inline Result maximize(const Problem& pb, double tol = 1e-11) {
  const std::size_t m = pb.a.size();
  const std::size_t n = pb.c.size();
  if (pb.b.size() != m) throw std::invalid_argument("lp: b has wrong size");
  for (const auto& row : pb.a)
    if (row.size() != n) throw std::invalid_argument("lp: ragged constraint matrix");

  detail::Tableau tb{m, n + m, std::vector<double>(m * (n + m + 1), 0.0),
                     std::vector<std::size_t>(m), std::vector<bool>(m, true)};
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = pb.b[i] < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tb.at(i, j) = sign * pb.a[i][j];
    tb.at(i, n + i) = 1.0;
    tb.rhs(i) = sign * pb.b[i];
    tb.basis[i] = n + i;
  }
  const std::size_t max_iter = 50 * (n + m + 10);

  // Phase 1: drive artificials to zero.
  std::vector<double> cost1(n + m, 0.0);
  for (std::size_t i = 0; i < m; ++i) cost1[n + i] = -1.0;
  std::vector<bool> all(n + m, true);
  detail::iterate(tb, cost1, all, tol, max_iter);
  double infeas = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (tb.basis[i] >= n) infeas += tb.rhs(i);
  double scale = 1.0;
  for (double v : pb.b) scale = std::max(scale, std::abs(v));
  Result res;
  if (infeas > 1e3 * tol * scale) {
    res.status = Status::infeasible;
    return res;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (tb.basis[i] < n) continue;
    std::size_t col = n;
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(tb.at(i, j)) > tol) {
        col = j;
        break;
      }
    if (col == n)
      tb.row_alive[i] = false;  // redundant constraint
    else
      tb.pivot(i, col);
  }

  // Phase 2.
  std::vector<double> cost2(n + m, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost2[j] = pb.c[j];
  std::vector<bool> originals(n + m, false);
  for (std::size_t j = 0; j < n; ++j) originals[j] = true;
  if (!detail::iterate(tb, cost2, originals, tol, max_iter)) {
    res.status = Status::unbounded;
    res.objective = std::numeric_limits<double>::infinity();
    return res;
  }
  res.status = Status::optimal;
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (tb.row_alive[i] && tb.basis[i] < n) res.x[tb.basis[i]] = std::max(0.0, tb.rhs(i));
  res.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) res.objective += pb.c[j] * res.x[j];
  return res;
}

}  // namespace fwdperf::lp
