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

// Exact verification of value fields on event trees: primal and dual value
// fields, self-generation, conjugacy of value fields, and the structural
// conditions for exponential fields.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/minima.hpp>

#include "forwardperf/fields.hpp"
#include "forwardperf/numerics.hpp"
#include "forwardperf/report.hpp"
#include "forwardperf/tree_market.hpp"

namespace fwdperf {

/// Raised by the wealth-grid primal solver when the optimal strategy leaves
/// the tabulated wealth range.
class SizingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A field given slice by slice. `dual` may be left empty, in which case the
/// conjugate is computed numerically from `utility`.
struct GenericField {
  std::function<UtilitySlice(NodeId)> utility;
  std::function<DualSlice(NodeId)> dual;
};

using Field = std::variant<ExponentialFieldParams, GenericField>;

inline UtilitySlice utility_at(const Field& f, NodeId n) {
  if (const auto* e = std::get_if<ExponentialFieldParams>(&f))
    return exponential_slice(e->gamma_at(n), e->a_at(n));
  return std::get<GenericField>(f).utility(n);
}

inline DualSlice dual_at(const Field& f, NodeId n) {
  if (const auto* e = std::get_if<ExponentialFieldParams>(&f))
    return exponential_dual(e->gamma_at(n), e->a_at(n));
  const auto& g = std::get<GenericField>(f);
  if (g.dual) return g.dual(n);
  return numeric_dual(g.utility(n));
}

/// Per-node argument (wealth xi or dual scale eta) for the nodes at time t.
struct NodeArgument {
  double constant = 0.0;
  std::map<NodeId, double> per_node;

  NodeArgument(double c = 0.0) : constant(c) {}  // NOLINT: implicit on purpose
  explicit NodeArgument(std::map<NodeId, double> m) : per_node(std::move(m)) {}

  double at(NodeId n) const {
    auto it = per_node.find(n);
    return it == per_node.end() ? constant : it->second;
  }
};

enum class PrimalMethod { automatic, exponential_factor, nested, wealth_grid };

struct PrimalOptions {
  PrimalMethod method = PrimalMethod::automatic;
  std::size_t grid_points = 257;
  double grid_lo = -10.0;
  double grid_hi = 10.0;
};

struct DualOptions {
  numerics::BarrierOptions barrier;
};

/// Value of a primal or dual problem at one node.
struct ValueAt {
  NodeId node = 0;
  double argument = 0.0;
  double value = 0.0;
  bool infinite = false;
  bool converged = true;
  // primal: optimal holding at every interior node reached by the optimal
  // strategy started from `argument`
  std::map<NodeId, double> portfolio;
  // dual: optimal measure on the subtree, its leaf weights, and the scale
  std::vector<NodeId> leaves;
  std::vector<double> leaf_weights;
  std::optional<TreeMeasure> measure;
  std::optional<double> eta;
  double error_estimate = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct ValueFieldResult {
  int t = 0, T = 0;
  std::vector<ValueAt> values;

  const ValueAt& at(NodeId n) const {
    for (const auto& v : values)
      if (v.node == n) return v;
    throw std::out_of_range("value field: node not evaluated");
  }
};

namespace detail {

inline void check_times(const EventTree& tree, int t, int T) {
  if (t > T) throw std::invalid_argument("t > T");
  if (t < 0 || T > tree.horizon()) throw std::invalid_argument("times outside the tree horizon");
}

inline void require_two_sided(const EventTree& tree, NodeId k) {
  bool up = false, down = false;
  for (NodeId c : tree.children(k)) {
    up |= tree.dS(c) > 0.0;
    down |= tree.dS(c) < 0.0;
  }
  if (up != down)
    throw NoMartingaleMeasure("node " + std::to_string(tree.label(k)) +
                              " admits arbitrage: the primal supremum is not attained");
}

inline bool all_flat(const EventTree& tree, NodeId k) {
  for (NodeId c : tree.children(k))
    if (tree.dS(c) != 0.0) return false;
  return true;
}

/// Backward induction with exact inner optimization. The value at an
/// interior node and wealth x is the one-dimensional concave maximization
/// over the holding pi; children are evaluated recursively and marginal
/// values come from the envelope theorem.
class NestedPrimal {
 public:
  NestedPrimal(const EventTree& tree, int T, const Field& field) : tree_(tree), T_(T) {
    for (NodeId k = 0; k < tree.size(); ++k)
      if (tree.time(k) == T) slices_.emplace(k, utility_at(field, k));
  }

  std::pair<double, double> value(NodeId k, double x) const {
    if (tree_.time(k) == T_) {
      const auto& s = slices_.at(k);
      return {s.eval(x), s.deriv(x)};
    }
    const double pi = optimal_pi(k, x);
    double w = 0.0, dw = 0.0;
    for (NodeId c : tree_.children(k)) {
      const auto [wc, dwc] = value(c, x + pi * tree_.dS(c));
      w += tree_.prob(c) * wc;
      dw += tree_.prob(c) * dwc;
    }
    return {w, dw};
  }

  double optimal_pi(NodeId k, double x) const {
    if (all_flat(tree_, k)) return 0.0;
    require_two_sided(tree_, k);
    return numerics::decreasing_root([&](double pi) {
      double g = 0.0;
      for (NodeId c : tree_.children(k)) {
        const double d = tree_.dS(c);
        g += tree_.prob(c) * value(c, x + pi * d).second * d;
      }
      return g;
    });
  }

  std::map<NodeId, double> strategy(NodeId n, double x) const {
    std::map<NodeId, double> out;
    walk(n, x, out);
    return out;
  }

 private:
  void walk(NodeId k, double x, std::map<NodeId, double>& out) const {
    if (tree_.time(k) >= T_) return;
    const double pi = optimal_pi(k, x);
    out[k] = pi;
    for (NodeId c : tree_.children(k)) walk(c, x + pi * tree_.dS(c), out);
  }

  const EventTree& tree_;
  int T_;
  std::map<NodeId, UtilitySlice> slices_;
};

/// Exponential field whose risk aversion is the same at every time-T node
/// of the subtree: u(x) = -exp(-gamma x) C with a scalar recursion for C.
class FactorPrimal {
 public:
  FactorPrimal(const EventTree& tree, int T, const ExponentialFieldParams& p, double gamma)
      : tree_(tree), T_(T), p_(p), gamma_(gamma) {}

  double factor(NodeId k) {
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    double c;
    if (tree_.time(k) == T_) {
      c = std::exp(p_.a_at(k));
    } else {
      std::vector<double> cc;
      for (NodeId ch : tree_.children(k)) cc.push_back(factor(ch));
      double pi = 0.0;
      if (!all_flat(tree_, k)) {
        require_two_sided(tree_, k);
        const auto& ch = tree_.children(k);
        pi = numerics::decreasing_root([&](double x) {
          double g = 0.0;
          for (std::size_t i = 0; i < ch.size(); ++i) {
            const double d = tree_.dS(ch[i]);
            g += tree_.prob(ch[i]) * cc[i] * d * std::exp(-gamma_ * x * d);
          }
          return g;
        });
      }
      pis_[k] = pi;
      c = 0.0;
      const auto& ch = tree_.children(k);
      for (std::size_t i = 0; i < ch.size(); ++i)
        c += tree_.prob(ch[i]) * cc[i] * std::exp(-gamma_ * pi * tree_.dS(ch[i]));
    }
    memo_[k] = c;
    return c;
  }

  std::map<NodeId, double> strategy(NodeId n) {
    factor(n);
    std::map<NodeId, double> out;
    for (NodeId k : tree_.interior_nodes(n, T_)) out[k] = pis_.at(k);
    return out;
  }

  double gamma() const { return gamma_; }

 private:
  const EventTree& tree_;
  int T_;
  const ExponentialFieldParams& p_;
  double gamma_;
  std::map<NodeId, double> memo_;
  std::map<NodeId, double> pis_;
};

/// Backward induction on a wealth grid with monotone cubic (PCHIP)
/// interpolation of the intermediate value functions.
class GridPrimal {
 public:
  GridPrimal(const EventTree& tree, int T, const Field& field, NodeId n, std::vector<double> grid)
      : tree_(tree), T_(T), grid_(std::move(grid)) {
    for (NodeId k = 0; k < tree.size(); ++k)
      if (tree.time(k) == T) slices_.emplace(k, utility_at(field, k));
    auto interior = tree.interior_nodes(n, T);
    // children before parents; the node n itself is optimized directly
    for (auto it = interior.rbegin(); it != interior.rend(); ++it) {
      if (*it == n) continue;
      std::vector<double> ys(grid_.size());
      for (std::size_t j = 0; j < grid_.size(); ++j) ys[j] = direct_value(*it, grid_[j]).first;
      std::vector<double> xs = grid_;
      tables_.emplace(*it, std::make_shared<Interp>(std::move(xs), std::move(ys)));
    }
  }

  std::pair<double, double> direct_value(NodeId k, double x) const {
    const double pi = optimal_pi(k, x);
    double w = 0.0, dw = 0.0;
    for (NodeId c : tree_.children(k)) {
      const auto [wc, dwc] = eval(c, x + pi * tree_.dS(c));
      w += tree_.prob(c) * wc;
      dw += tree_.prob(c) * dwc;
    }
    return {w, dw};
  }

  double optimal_pi(NodeId k, double x) const {
    if (all_flat(tree_, k)) return 0.0;
    require_two_sided(tree_, k);
    return numerics::decreasing_root([&](double pi) {
      double g = 0.0;
      for (NodeId c : tree_.children(k)) {
        const double d = tree_.dS(c);
        g += tree_.prob(c) * eval(c, x + pi * d).second * d;
      }
      return g;
    });
  }

  /// Optimal holdings from (n, x); throws SizingError if the strategy visits
  /// an interpolated node outside the grid.
  std::map<NodeId, double> strategy(NodeId n, double x) const {
    std::map<NodeId, double> out;
    walk(n, x, out, true);
    return out;
  }

 private:
  using Interp = boost::math::interpolators::pchip<std::vector<double>>;

  std::pair<double, double> eval(NodeId c, double x) const {
    if (tree_.time(c) == T_) {
      const auto& s = slices_.at(c);
      return {s.eval(x), s.deriv(x)};
    }
    const auto& f = *tables_.at(c);
    const double lo = grid_.front(), hi = grid_.back();
    if (x < lo) return {f(lo) + f.prime(lo) * (x - lo), f.prime(lo)};
    if (x > hi) return {f(hi) + f.prime(hi) * (x - hi), f.prime(hi)};
    return {f(x), f.prime(x)};
  }

  void walk(NodeId k, double x, std::map<NodeId, double>& out, bool top) const {
    if (tree_.time(k) >= T_) return;
    if (!top && (x < grid_.front() || x > grid_.back()))
      throw SizingError("wealth grid [" + std::to_string(grid_.front()) + ", " +
                        std::to_string(grid_.back()) + "] does not contain wealth " +
                        std::to_string(x) + " reached at node " + std::to_string(tree_.label(k)));
    const double pi = optimal_pi(k, x);
    out[k] = pi;
    for (NodeId c : tree_.children(k)) walk(c, x + pi * tree_.dS(c), out, false);
  }

  const EventTree& tree_;
  int T_;
  std::vector<double> grid_;
  std::map<NodeId, UtilitySlice> slices_;
  std::map<NodeId, std::shared_ptr<Interp>> tables_;
};

inline std::optional<double> common_terminal_gamma(const EventTree& tree,
                                                   const ExponentialFieldParams& p, NodeId n,
                                                   int T) {
  const auto leaves = tree.descendants_at(n, T);
  const double g = p.gamma_at(leaves.front());
  for (NodeId l : leaves)
    if (p.gamma_at(l) != g) return std::nullopt;
  return g;
}

}  // namespace detail

/// Primal value u(xi; t, T) at one node.
inline ValueAt primal_value_at(const EventTree& tree, const Field& field, NodeId n, double xi,
                               int T, const PrimalOptions& opt = {}) {
  ValueAt out;
  out.node = n;
  out.argument = xi;
  if (tree.time(n) == T) {
    out.value = utility_at(field, n).eval(xi);
    return out;
  }
  PrimalMethod method = opt.method;
  const auto* expo = std::get_if<ExponentialFieldParams>(&field);
  std::optional<double> g_common;
  if (expo) g_common = detail::common_terminal_gamma(tree, *expo, n, T);
  if (method == PrimalMethod::automatic)
    method = g_common ? PrimalMethod::exponential_factor : PrimalMethod::nested;
  if (method == PrimalMethod::exponential_factor && !g_common)
    throw std::invalid_argument(
        "exponential factor method needs an exponential field with a common terminal gamma");

  switch (method) {
    case PrimalMethod::exponential_factor: {
      detail::FactorPrimal fp(tree, T, *expo, *g_common);
      out.value = -std::exp(-*g_common * xi) * fp.factor(n);
      out.portfolio = fp.strategy(n);
      break;
    }
    case PrimalMethod::nested: {
      detail::NestedPrimal np(tree, T, field);
      out.value = np.value(n, xi).first;
      out.portfolio = np.strategy(n, xi);
      break;
    }
    case PrimalMethod::wealth_grid: {
      if (opt.grid_points < 5) throw SizingError("wealth grid needs at least 5 points");
      if (xi < opt.grid_lo || xi > opt.grid_hi)
        throw SizingError("argument outside the wealth grid");
      detail::GridPrimal fine(tree, T, field, n, lin_space(opt.grid_lo, opt.grid_hi, opt.grid_points));
      out.value = fine.direct_value(n, xi).first;
      out.portfolio = fine.strategy(n, xi);
      detail::GridPrimal coarse(tree, T, field, n,
                                lin_space(opt.grid_lo, opt.grid_hi, (opt.grid_points + 1) / 2));
      out.error_estimate = std::abs(coarse.direct_value(n, xi).first - out.value);
      break;
    }
    case PrimalMethod::automatic:
      break;
  }
  return out;
}

/// u(xi; t, T) at every node at time t.
inline ValueFieldResult primal_value(const EventTree& tree, const Field& field,
                                     const NodeArgument& xi, int t, int T,
                                     const PrimalOptions& opt = {}) {
  require_valid(tree);
  detail::check_times(tree, t, T);
  ValueFieldResult r;
  r.t = t;
  r.T = T;
  for (NodeId n : tree.nodes_at(t)) r.values.push_back(primal_value_at(tree, field, n, xi.at(n), T, opt));
  return r;
}

// --------------------------------------------------------------------------
// Dual side

/// Convex function of y >= 0 with two derivatives, describing V(T, .) at
/// one node.
struct DualLeaf {
  std::function<double(double)> v, dv, d2v;
};

inline DualLeaf dual_leaf(const Field& f, NodeId n) {
  if (const auto* e = std::get_if<ExponentialFieldParams>(&f)) {
    const double g = e->gamma_at(n), a = e->a_at(n);
    return {[g, a](double y) { return conjugate_exponential(g, a, y); },
            [g, a](double y) { return (std::log(y / g) - a) / g; },
            [g](double y) { return 1.0 / (g * y); }};
  }
  auto d = std::make_shared<DualSlice>(dual_at(f, n));
  return {[d](double y) { return d->eval(y); },
          [d](double y) { return -d->minimizer(y); },
          [d](double y) {
            const double h = 1e-5 * std::max(y, 1e-8);
            const double lo = std::max(y - h, 0.5 * y);
            return -(d->minimizer(y + h) - d->minimizer(lo)) / (y + h - lo);
          }};
}

struct DualProblemSolution {
  double value = 0.0;
  std::vector<NodeId> leaves;
  std::vector<double> weights;  // Q(leaf | root)
  numerics::BarrierResult solver;
};

/// Minimizes sum_leaves P(leaf) V_leaf(eta Q(leaf)/P(leaf)) over all
/// martingale measures described by `ls` (the subtree of `n`).
inline DualProblemSolution solve_dual_problem(const EventTree& tree, NodeId n, double eta,
                                              const std::vector<DualLeaf>& leaf_fn,
                                              const LeafSystem& ls,
                                              const numerics::BarrierOptions& opt = {}) {
  const std::size_t m = ls.leaves.size();
  std::vector<std::vector<double>> witnesses;
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < m; ++j) {
    lp::Problem pb;
    pb.c.assign(m, 0.0);
    pb.c[j] = 1.0;
    pb.a = ls.a;
    pb.b = ls.b;
    const auto sol = lp::maximize(pb);
    if (sol.status == lp::Status::infeasible)
      throw NoMartingaleMeasure("no martingale measure on the subtree of node " +
                                std::to_string(tree.label(n)));
    if (sol.objective > 1e-11) {
      support.push_back(j);
      witnesses.push_back(sol.x);
    }
  }
  DualProblemSolution out;
  out.leaves = ls.leaves;
  out.weights.assign(m, 0.0);

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(support.size()));
  for (const auto& w : witnesses)
    for (std::size_t s = 0; s < support.size(); ++s) x0(static_cast<Eigen::Index>(s)) += w[support[s]];
  x0 /= static_cast<double>(witnesses.size());

  if (eta == 0.0) {
    for (std::size_t s = 0; s < support.size(); ++s) out.weights[support[s]] = x0(static_cast<Eigen::Index>(s));
    double v = 0.0;
    for (std::size_t j = 0; j < m; ++j) v += ls.ref_prob[j] * leaf_fn[j].v(0.0);
    out.value = v;
    out.solver.converged = true;
    return out;
  }

  // zero-mass leaves contribute P(leaf) V(0)
  double fixed = 0.0;
  std::vector<bool> in_support(m, false);
  for (std::size_t s : support) in_support[s] = true;
  for (std::size_t j = 0; j < m; ++j)
    if (!in_support[j]) fixed += ls.ref_prob[j] * leaf_fn[j].v(0.0);

  Eigen::MatrixXd a(static_cast<Eigen::Index>(ls.a.size()), static_cast<Eigen::Index>(support.size()));
  for (std::size_t r = 0; r < ls.a.size(); ++r)
    for (std::size_t s = 0; s < support.size(); ++s)
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = ls.a[r][support[s]];

  numerics::SeparableObjective obj;
  obj.value = [&](std::size_t s, double q) {
    const std::size_t j = support[s];
    const double p = ls.ref_prob[j];
    return p * leaf_fn[j].v(eta * q / p);
  };
  obj.d1 = [&](std::size_t s, double q) {
    const std::size_t j = support[s];
    return eta * leaf_fn[j].dv(eta * q / ls.ref_prob[j]);
  };
  obj.d2 = [&](std::size_t s, double q) {
    const std::size_t j = support[s];
    const double p = ls.ref_prob[j];
    return eta * eta / p * leaf_fn[j].d2v(eta * q / p);
  };
  out.solver = numerics::barrier_minimize(obj, a, x0, opt);
  for (std::size_t s = 0; s < support.size(); ++s)
    out.weights[support[s]] = out.solver.x(static_cast<Eigen::Index>(s));
  out.value = out.solver.objective + fixed;
  return out;
}

/// Dual value v(eta; t, T) at one node.
inline ValueAt dual_value_at(const EventTree& tree, const Field& field, NodeId n, double eta, int T,
                             const DualOptions& opt = {}) {
  if (!(eta >= 0.0)) throw std::domain_error("dual_value: eta must be >= 0");
  ValueAt out;
  out.node = n;
  out.argument = eta;
  out.eta = eta;
  const auto ls = leaf_system(tree, n, T);
  std::vector<DualLeaf> fns;
  for (NodeId l : ls.leaves) fns.push_back(dual_leaf(field, l));
  const auto sol = solve_dual_problem(tree, n, eta, fns, ls, opt.barrier);
  out.value = sol.value;
  out.leaves = sol.leaves;
  out.leaf_weights = sol.weights;
  out.measure = measure_from_leaf_weights(tree, ls, sol.weights, TreeMeasure::reference(tree));
  out.converged = sol.solver.converged;
  out.kkt_residual = sol.solver.kkt_residual;
  out.iterations = sol.solver.newton_iterations;
  out.infinite = std::isinf(out.value) && out.value > 0;
  return out;
}

inline ValueFieldResult dual_value(const EventTree& tree, const Field& field, const NodeArgument& eta,
                                   int t, int T, const DualOptions& opt = {}) {
  require_valid(tree);
  detail::check_times(tree, t, T);
  ValueFieldResult r;
  r.t = t;
  r.T = T;
  for (NodeId n : tree.nodes_at(t)) r.values.push_back(dual_value_at(tree, field, n, eta.at(n), T, opt));
  return r;
}

// --------------------------------------------------------------------------
// Entropy of exponential fields

struct EntropyResult {
  int t = 0, T = 0;
  std::vector<NodeId> nodes;
  std::vector<double> value;
  std::vector<TreeMeasure> minimizer;  // filled by min_entropy only
  std::vector<double> kkt_residual;    // filled by min_entropy only

  double at(NodeId n) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i] == n) return value[i];
    throw std::out_of_range("entropy: node not evaluated");
  }
};

/// Relative conditional (gamma, A)-entropy of a given measure:
/// E[h(Z_T/(Z_t gamma_T)) - (Z_T/Z_t) A_T / gamma_T | node].
inline EntropyResult entropy(const EventTree& tree, const ExponentialFieldParams& p,
                             const TreeMeasure& q, int t, int T) {
  require_valid(tree);
  detail::check_times(tree, t, T);
  const auto z = density_process(tree, q);
  EntropyResult r;
  r.t = t;
  r.T = T;
  for (NodeId n : tree.nodes_at(t)) {
    double s = 0.0;
    for (NodeId l : tree.descendants_at(n, T)) {
      const double g = p.gamma_at(l);
      if (!(g > 0.0)) throw std::domain_error("entropy: gamma must be > 0");
      const double ratio = density_quotient(tree, z, t, T, l);
      s += tree.path_prob(n, l) * (h_entropy(ratio / g) - ratio * p.a_at(l) / g);
    }
    r.nodes.push_back(n);
    r.value.push_back(s);
  }
  return r;
}

/// Infimum of the entropy over martingale measures, with the minimizer.
inline EntropyResult min_entropy(const EventTree& tree, const ExponentialFieldParams& p, int t,
                                 int T, const DualOptions& opt = {}) {
  require_valid(tree);
  detail::check_times(tree, t, T);
  EntropyResult r;
  r.t = t;
  r.T = T;
  const Field f = p;
  for (NodeId n : tree.nodes_at(t)) {
    const auto v = dual_value_at(tree, f, n, 1.0, T, opt);
    r.nodes.push_back(n);
    r.value.push_back(v.value);
    r.minimizer.push_back(*v.measure);
    r.kkt_residual.push_back(v.kkt_residual);
  }
  return r;
}

// --------------------------------------------------------------------------
// Checks

using TimePairs = std::vector<std::pair<int, int>>;

namespace detail {

inline std::string pair_tag(int t, int T) {
  return "[t=" + std::to_string(t) + ",T=" + std::to_string(T) + "]";
}

inline CheckEntry worst_entry(std::string id, std::string tag, double worst_gap, double value,
                              double target, long worst_node, double tol, std::string detail) {
  CheckEntry e;
  e.id = std::move(id);
  e.check_tag = std::move(tag);
  e.value = value;
  e.target = target;
  e.tolerance = tol;
  e.worst_node = worst_node;
  e.verdict = (std::isfinite(worst_gap) && worst_gap <= tol) ? Verdict::pass : Verdict::fail;
  e.detail = std::move(detail);
  return e;
}

}  // namespace detail

/// |u(xi; t, T) - U(t, xi)| at every node, for every pair and grid point.
inline VerificationReport check_self_generation_primal(const EventTree& tree, const Field& field,
                                                       const TimePairs& pairs,
                                                       const std::vector<double>& xi_grid,
                                                       double tol, const PrimalOptions& opt = {}) {
  require_valid(tree);
  VerificationReport rep("primal self-generation");
  for (const auto& [t, T] : pairs) {
    detail::check_times(tree, t, T);
    double worst = -1.0, wv = 0.0, wt = 0.0, wx = 0.0;
    long wn = -1;
    for (double xi : xi_grid)
      for (NodeId n : tree.nodes_at(t)) {
        const double u = primal_value_at(tree, field, n, xi, T, opt).value;
        const double target = utility_at(field, n).eval(xi);
        const double gap = std::abs(u - target);
        if (!(gap <= worst) || std::isnan(gap)) {
          worst = std::isnan(gap) ? std::numeric_limits<double>::infinity() : gap;
          wv = u;
          wt = target;
          wn = tree.label(n);
          wx = xi;
        }
      }
    std::ostringstream d;
    d << "worst |u - U| = " << worst << " at xi = " << wx;
    rep.add(detail::worst_entry("primal_self_generation" + detail::pair_tag(t, T),
                                "value_field.primal_self_generation", worst, wv, wt, wn, tol, d.str()));
  }
  return rep;
}

/// |v(eta; t, T) - V(t, eta)| at every node, for every pair and grid point.
inline VerificationReport check_self_generation_dual(const EventTree& tree, const Field& field,
                                                     const TimePairs& pairs,
                                                     const std::vector<double>& eta_grid,
                                                     double tol, const DualOptions& opt = {}) {
  require_valid(tree);
  VerificationReport rep("dual self-generation");
  for (const auto& [t, T] : pairs) {
    detail::check_times(tree, t, T);
    double worst = -1.0, wv = 0.0, wt = 0.0, we = 0.0;
    long wn = -1;
    bool solver_ok = true;
    for (double eta : eta_grid)
      for (NodeId n : tree.nodes_at(t)) {
        const auto v = dual_value_at(tree, field, n, eta, T, opt);
        solver_ok &= v.converged;
        const double target = dual_at(field, n).eval(eta);
        const double gap = std::abs(v.value - target);
        if (!(gap <= worst) || std::isnan(gap)) {
          worst = std::isnan(gap) ? std::numeric_limits<double>::infinity() : gap;
          wv = v.value;
          wt = target;
          wn = tree.label(n);
          we = eta;
        }
      }
    std::ostringstream d;
    d << "worst |v - V| = " << worst << " at eta = " << we;
    if (!solver_ok) d << "; convex solver did not converge";
    auto e = detail::worst_entry("dual_self_generation" + detail::pair_tag(t, T),
                                 "value_field.dual_self_generation", worst, wv, wt, wn, tol, d.str());
    if (!solver_ok) e.verdict = Verdict::fail;
    rep.add(std::move(e));
  }
  return rep;
}

/// u(xi) <= v(eta) + xi eta over a grid; reports the smallest slack.
inline VerificationReport check_weak_duality(const EventTree& tree, const Field& field, int t, int T,
                                             const std::vector<double>& xi_grid,
                                             const std::vector<double>& eta_grid,
                                             double slack_tol = 1e-9) {
  require_valid(tree);
  detail::check_times(tree, t, T);
  VerificationReport rep("weak duality");
  double worst = std::numeric_limits<double>::infinity();
  long wn = -1;
  for (NodeId n : tree.nodes_at(t)) {
    std::vector<double> us, vs;
    for (double xi : xi_grid) us.push_back(primal_value_at(tree, field, n, xi, T).value);
    for (double eta : eta_grid) vs.push_back(dual_value_at(tree, field, n, eta, T).value);
    for (std::size_t i = 0; i < xi_grid.size(); ++i)
      for (std::size_t j = 0; j < eta_grid.size(); ++j) {
        const double slack = vs[j] + xi_grid[i] * eta_grid[j] - us[i];
        if (slack < worst) {
          worst = slack;
          wn = tree.label(n);
        }
      }
  }
  CheckEntry e;
  e.id = "weak_duality" + detail::pair_tag(t, T);
  e.check_tag = "value_field.weak_duality";
  e.value = worst;
  e.target = 0.0;
  e.tolerance = slack_tol;
  e.worst_node = wn;
  e.verdict = worst >= -slack_tol ? Verdict::pass : Verdict::fail;
  e.detail = "min over grid of v(eta) + xi eta - u(xi)";
  rep.add(std::move(e));
  return rep;
}

/// Minimizer of eta -> v(eta) + xi eta at one node.
struct DualAttainer {
  double value = 0.0;
  double eta = 0.0;
  bool infinite = false;
  std::optional<TreeMeasure> measure;
};

namespace detail {

// Minimizes a convex function of log-scale argument: grid scan, geometric
// extension when the grid minimum sits on an edge, then Brent refinement.
inline std::pair<double, double> refine_min_log(const std::function<double(double)>& f,
                                                std::vector<double> grid, bool& unbounded) {
  std::sort(grid.begin(), grid.end());
  std::vector<double> vals;
  for (double g : grid) vals.push_back(f(g));
  unbounded = false;
  for (int ext = 0; ext < 40; ++ext) {
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    if (best == 0 && grid.size() > 0) {
      grid.insert(grid.begin(), grid.front() / 4);
      vals.insert(vals.begin(), f(grid.front()));
    } else if (best + 1 == grid.size()) {
      grid.push_back(grid.back() * 4);
      vals.push_back(f(grid.back()));
    } else {
      const double lo = std::log(grid[best - 1]), hi = std::log(grid[best + 1]);
      std::uintmax_t iters = 200;
      auto [x, v] = boost::math::tools::brent_find_minima(
          [&](double s) { return f(std::exp(s)); }, lo, hi, std::numeric_limits<double>::digits / 2,
          iters);
      if (v <= vals[best]) return {std::exp(x), v};
      return {grid[best], vals[best]};
    }
  }
  unbounded = true;
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {grid[best], vals[best]};
}

// Same on a linear-scale argument, extending by the grid width.
inline std::pair<double, double> refine_min_lin(const std::function<double(double)>& f,
                                                std::vector<double> grid, bool& unbounded) {
  std::sort(grid.begin(), grid.end());
  std::vector<double> vals;
  for (double g : grid) vals.push_back(f(g));
  const double step = std::max(1.0, grid.back() - grid.front());
  unbounded = false;
  for (int ext = 0; ext < 40; ++ext) {
    const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    if (best == 0) {
      grid.insert(grid.begin(), grid.front() - step);
      vals.insert(vals.begin(), f(grid.front()));
    } else if (best + 1 == grid.size()) {
      grid.push_back(grid.back() + step);
      vals.push_back(f(grid.back()));
    } else {
      std::uintmax_t iters = 200;
      auto [x, v] = boost::math::tools::brent_find_minima(
          f, grid[best - 1], grid[best + 1], std::numeric_limits<double>::digits / 2, iters);
      if (v <= vals[best]) return {x, v};
      return {grid[best], vals[best]};
    }
  }
  unbounded = true;
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {grid[best], vals[best]};
}

}  // namespace detail

inline DualAttainer dual_attainer(const EventTree& tree, const Field& field, NodeId n, double xi,
                                  int T, const std::vector<double>& eta_grid) {
  bool unbounded = false;
  auto [eta, val] = detail::refine_min_log(
      [&](double e) { return dual_value_at(tree, field, n, e, T).value + xi * e; }, eta_grid,
      unbounded);
  DualAttainer a;
  a.value = val;
  a.eta = eta;
  a.infinite = unbounded;
  if (!unbounded) a.measure = dual_value_at(tree, field, n, eta, T).measure;
  return a;
}

/// Conjugacy of the value fields at every node at time t:
/// u(xi) = min_eta (v(eta) + xi eta) and v(eta) = max_xi (u(xi) - xi eta).
inline VerificationReport check_value_conjugacy(const EventTree& tree, const Field& field, int t,
                                                int T, const std::vector<double>& xi_grid,
                                                const std::vector<double>& eta_grid, double tol,
                                                std::vector<DualAttainer>* attainers = nullptr) {
  require_valid(tree);
  detail::check_times(tree, t, T);
  if (xi_grid.empty() || eta_grid.empty())
    throw std::invalid_argument("check_value_conjugacy: grids must be nonempty");
  VerificationReport rep("value-field conjugacy");
  double worst_p = -1.0, worst_d = -1.0;
  long wn_p = -1, wn_d = -1;
  double vp = 0, tp = 0, vd = 0, td = 0;
  bool outside = false;
  std::ostringstream eta_hat;
  for (NodeId n : tree.nodes_at(t)) {
    for (double xi : xi_grid) {
      const double u = primal_value_at(tree, field, n, xi, T).value;
      const auto a = dual_attainer(tree, field, n, xi, T, eta_grid);
      if (attainers) attainers->push_back(a);
      outside |= a.infinite;
      eta_hat << " node " << tree.label(n) << " xi=" << xi << " eta_hat=" << a.eta << ";";
      const double gap = std::abs(u - a.value);
      if (gap > worst_p) {
        worst_p = gap;
        wn_p = tree.label(n);
        vp = a.value;
        tp = u;
      }
    }
    for (double eta : eta_grid) {
      const double v = dual_value_at(tree, field, n, eta, T).value;
      bool unbounded = false;
      auto [xi, neg] = detail::refine_min_lin(
          [&](double x) { return -(primal_value_at(tree, field, n, x, T).value - x * eta); }, xi_grid,
          unbounded);
      (void)xi;
      outside |= unbounded;
      const double gap = std::abs(v - (-neg));
      if (gap > worst_d) {
        worst_d = gap;
        wn_d = tree.label(n);
        vd = -neg;
        td = v;
      }
    }
  }
  auto ep = detail::worst_entry("value_conjugacy.primal" + detail::pair_tag(t, T),
                                "value_field.conjugacy", worst_p, vp, tp, wn_p, tol,
                                "min_eta(v + xi eta) vs u; attainers:" + eta_hat.str());
  auto ed = detail::worst_entry("value_conjugacy.dual" + detail::pair_tag(t, T),
                                "value_field.conjugacy", worst_d, vd, td, wn_d, tol,
                                "max_xi(u - xi eta) vs v");
  if (outside) {
    ep.verdict = ed.verdict = Verdict::undetermined;
    ep.detail += " (refinement unbounded: outside validated regime)";
  }
  rep.add(std::move(ep));
  rep.add(std::move(ed));
  return rep;
}

// --------------------------------------------------------------------------
// Exponential fields: structural conditions

/// max (or min) over martingale measures of E^Q[X_T | n] by backward
/// induction over one-step vertices. Nodes without a one-step martingale
/// measure must carry zero mass.
inline double extremal_expectation(const EventTree& tree, NodeId n, int T,
                                   const std::function<double(NodeId)>& x, bool maximize) {
  const double bad = maximize ? -std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::infinity();
  std::function<double(NodeId)> rec = [&](NodeId k) -> double {
    if (tree.time(k) == T) return x(k);
    const auto poly = node_polytope(tree, k);
    if (poly.empty()) return bad;
    std::vector<double> child_vals;
    for (NodeId c : poly.children) child_vals.push_back(rec(c));
    double best = bad;
    for (const auto& v : poly.vertices) {
      double s = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0.0) continue;
        if (std::isinf(child_vals[i])) {
          ok = false;
          break;
        }
        s += v[i] * child_vals[i];
      }
      if (!ok) continue;
      best = maximize ? std::max(best, s) : std::min(best, s);
    }
    return best;
  };
  const double r = rec(n);
  if (std::isinf(r))
    throw NoMartingaleMeasure("no martingale measure on the subtree of node " +
                              std::to_string(tree.label(n)));
  return r;
}

struct ExponentialConditionFlags {
  bool positivity = false;
  bool inverse_gamma_martingale = false;
  bool entropy_identity = false;
  bool all() const { return positivity && inverse_gamma_martingale && entropy_identity; }
};

struct ExponentialConditionResult {
  ExponentialConditionFlags flags;
  VerificationReport report;
};

/// The three conditions characterizing self-generating exponential fields:
/// positivity of gamma; E^Q[1/gamma_T | F_t] = 1/gamma_t for every
/// martingale measure; and h(1/gamma_t) - A_t/gamma_t = min_Q H(Q; t, T).
inline ExponentialConditionResult check_exponential_conditions(const EventTree& tree,
                                                               const ExponentialFieldParams& p,
                                                               const TimePairs& pairs, double tol) {
  require_valid(tree);
  if (p.size() != tree.size()) throw std::invalid_argument("field size does not match tree");
  ExponentialConditionResult res;
  res.report = VerificationReport("exponential field conditions");

  {
    double min_gamma = std::numeric_limits<double>::infinity();
    long wn = -1;
    bool finite = true;
    for (NodeId n = 0; n < tree.size(); ++n) {
      finite &= std::isfinite(p.gamma[n]) && std::isfinite(p.a_shift[n]);
      if (p.gamma[n] < min_gamma || std::isnan(p.gamma[n])) {
        min_gamma = p.gamma[n];
        wn = tree.label(n);
      }
    }
    res.flags.positivity = finite && min_gamma > 0.0;
    CheckEntry e;
    e.id = "exponential.positivity";
    e.check_tag = "exponential_field.gamma_positive";
    e.value = min_gamma;
    e.target = 0.0;
    e.worst_node = wn;
    e.verdict = res.flags.positivity ? Verdict::pass : Verdict::fail;
    e.detail = "min gamma over nodes; coefficients are node values, hence adapted; "
               "integrability is automatic on a finite tree";
    res.report.add(std::move(e));
  }
  if (!res.flags.positivity) return res;

  res.flags.inverse_gamma_martingale = true;
  res.flags.entropy_identity = true;
  for (const auto& [t, T] : pairs) {
    detail::check_times(tree, t, T);
    double worst_b = -1.0, vb = 0, tb = 0;
    long wb = -1;
    auto inv_gamma = [&](NodeId k) { return 1.0 / p.gamma[k]; };
    for (NodeId n : tree.nodes_at(t)) {
      const double hi = extremal_expectation(tree, n, T, inv_gamma, true);
      const double lo = extremal_expectation(tree, n, T, inv_gamma, false);
      const double target = 1.0 / p.gamma[n];
      const double gap = std::max(std::abs(hi - target), std::abs(lo - target));
      if (gap > worst_b) {
        worst_b = gap;
        vb = std::abs(hi - target) >= std::abs(lo - target) ? hi : lo;
        tb = target;
        wb = tree.label(n);
      }
    }
    auto eb = detail::worst_entry("exponential.inverse_gamma_martingale" + detail::pair_tag(t, T),
                                  "exponential_field.inverse_gamma_martingale", worst_b, vb, tb, wb,
                                  tol, "extremes of E^Q[1/gamma_T|F_t] over martingale measures");
    res.flags.inverse_gamma_martingale &= eb.passed();
    res.report.add(std::move(eb));

    const auto me = min_entropy(tree, p, t, T);
    double worst_c = -1.0, vc = 0, tc = 0;
    long wc = -1;
    for (std::size_t i = 0; i < me.nodes.size(); ++i) {
      const NodeId n = me.nodes[i];
      const double g = p.gamma[n];
      const double lhs = h_entropy(1.0 / g) - p.a_shift[n] / g;
      const double gap = std::abs(lhs - me.value[i]);
      if (gap > worst_c) {
        worst_c = gap;
        vc = me.value[i];
        tc = lhs;
        wc = tree.label(n);
      }
    }
    auto ec = detail::worst_entry("exponential.entropy_identity" + detail::pair_tag(t, T),
                                  "exponential_field.entropy_identity", worst_c, vc, tc, wc, tol,
                                  "min_Q H(Q;t,T) vs h(1/gamma_t) - A_t/gamma_t");
    res.flags.entropy_identity &= ec.passed();
    res.report.add(std::move(ec));
  }
  return res;
}

struct ReplicationResult {
  bool feasible = false;
  std::vector<double> portfolio;  // per node; 0 at nodes at the horizon
  std::optional<NodeId> first_inconsistent;
  double max_residual = 0.0;
};

/// Solves pi dS_child = 1/gamma_child - 1/gamma_node node by node.
inline ReplicationResult replicate_inverse_gamma(const EventTree& tree, const std::vector<double>& gamma,
                                                 double tol = 1e-10) {
  require_valid(tree);
  if (gamma.size() != tree.size()) throw std::invalid_argument("gamma size does not match tree");
  for (double g : gamma)
    if (!(g > 0.0)) throw std::domain_error("replicate_inverse_gamma: gamma must be > 0");
  ReplicationResult r;
  r.feasible = true;
  r.portfolio.assign(tree.size(), 0.0);
  for (NodeId n = 0; n < tree.size(); ++n) {
    const auto& ch = tree.children(n);
    if (ch.empty()) continue;
    double sxy = 0.0, sxx = 0.0;
    for (NodeId c : ch) {
      const double d = 1.0 / gamma[c] - 1.0 / gamma[n];
      sxy += tree.dS(c) * d;
      sxx += tree.dS(c) * tree.dS(c);
    }
    const double pi = sxx > 0.0 ? sxy / sxx : 0.0;
    r.portfolio[n] = pi;
    double res = 0.0;
    for (NodeId c : ch) res = std::max(res, std::abs(pi * tree.dS(c) - (1.0 / gamma[c] - 1.0 / gamma[n])));
    r.max_residual = std::max(r.max_residual, res);
    if (res > tol && r.feasible) {
      r.feasible = false;
      r.first_inconsistent = n;
    }
  }
  return r;
}

/// Forward measure: leaf weights (gamma_0/gamma_T) Q(leaf) turned back into
/// one-step probabilities up to T.
inline TreeMeasure forward_measure(const EventTree& tree, const TreeMeasure& q,
                                   const std::vector<double>& gamma, int T, double tol = 1e-12) {
  require_valid(tree);
  if (T < 0 || T > tree.horizon()) throw std::invalid_argument("forward_measure: bad T");
  const auto ls = leaf_system(tree, tree.root(), T);
  auto w = leaf_weights(tree, ls, q);
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] *= gamma.at(0) / gamma.at(ls.leaves[j]);
    total += w[j];
  }
  if (std::abs(total - 1.0) > tol) {
    std::ostringstream os;
    os << "forward_measure: (gamma_0/gamma_T) dQ/dP has total mass " << total
       << " != 1; 1/gamma is not a Q-martingale";
    throw std::domain_error(os.str());
  }
  return measure_from_leaf_weights(tree, ls, w, q);
}

namespace detail {

// max over interior nodes m (with forward mass) of
// E^{Qg}[F_T | m] - F(m), F = A - log Z^{Qg}, for a measure given by its leaf
// weights on the subtree of n. Also returns the worst |drift|.
struct DriftStats {
  double max_drift = -std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  long node_max = -1, node_abs = -1;
};

inline DriftStats forward_drift(const EventTree& tree, const ExponentialFieldParams& p, const LeafSystem& ls,
                                const std::vector<double>& w) {
  const NodeId n = ls.root;
  std::vector<double> fwd(ls.leaves.size());
  for (std::size_t j = 0; j < w.size(); ++j) fwd[j] = w[j] * p.gamma[n] / p.gamma[ls.leaves[j]];
  DriftStats st;
  for (NodeId m : ls.interior) {
    double mass = 0.0, ref = 0.0, ef = 0.0;
    const double pm = tree.path_prob(n, m);
    for (std::size_t j = 0; j < ls.leaves.size(); ++j) {
      if (!tree.descends_from(ls.leaves[j], m)) continue;
      mass += fwd[j];
      ref += ls.ref_prob[j];
      if (fwd[j] > 0.0) {
        const double z = fwd[j] / ls.ref_prob[j];
        ef += fwd[j] * (p.a_shift[ls.leaves[j]] - std::log(z));
      }
    }
    (void)ref;
    if (!(mass > 1e-300)) continue;
    const double zm = mass / pm;
    const double drift = ef / mass - (p.a_shift[m] - std::log(zm));
    if (drift > st.max_drift) {
      st.max_drift = drift;
      st.node_max = tree.label(m);
    }
    if (std::abs(drift) > st.max_abs) {
      st.max_abs = std::abs(drift);
      st.node_abs = tree.label(m);
    }
  }
  return st;
}

}  // namespace detail

/// Forward-measure characterization of the entropy identity: under every
/// forward measure, F = A - log Z^{Qg} is a supermartingale, and under the
/// forward measure of the entropy minimizer it is a martingale.
inline VerificationReport check_forward_measure_conditions(const EventTree& tree,
                                                           const ExponentialFieldParams& p, int t,
                                                           int T, double tol,
                                                           std::size_t vertex_cap = 4096) {
  require_valid(tree);
  detail::check_times(tree, t, T);
  VerificationReport rep("forward-measure conditions");
  const auto pre = check_exponential_conditions(tree, p, {{t, T}}, tol);
  const std::string tag = detail::pair_tag(t, T);
  if (!pre.flags.positivity || !pre.flags.inverse_gamma_martingale) {
    for (const char* id : {"forward.supermartingale", "forward.martingale_at_minimizer"}) {
      CheckEntry e;
      e.id = std::string(id) + tag;
      e.check_tag = "forward_measure.drift";
      e.verdict = Verdict::refused;
      e.detail = "gamma positivity or the 1/gamma martingale condition fails; forward measure undefined";
      rep.add(std::move(e));
    }
    return rep;
  }
  double sup_drift = -std::numeric_limits<double>::infinity();
  long sup_node = -1;
  double opt_abs = 0.0;
  long opt_node = -1;
  bool truncated_any = false;
  std::size_t n_measures = 0;
  for (NodeId n : tree.nodes_at(t)) {
    const auto ls = leaf_system(tree, n, T);
    bool truncated = false;
    auto family = vertex_measures(tree, n, T, vertex_cap, &truncated);
    truncated_any |= truncated;
    const auto vhat = dual_value_at(tree, Field{p}, n, 1.0, T);
    family.push_back(vhat.leaf_weights);
    n_measures += family.size();
    for (const auto& w : family) {
      const auto st = detail::forward_drift(tree, p, ls, w);
      if (st.max_drift > sup_drift) {
        sup_drift = st.max_drift;
        sup_node = st.node_max;
      }
    }
    const auto st = detail::forward_drift(tree, p, ls, vhat.leaf_weights);
    if (st.max_abs >= opt_abs) {
      opt_abs = st.max_abs;
      opt_node = st.node_abs;
    }
  }
  if (!std::isfinite(sup_drift)) sup_drift = 0.0;  // no interior node carried mass
  CheckEntry e1;
  e1.id = "forward.supermartingale" + tag;
  e1.check_tag = "forward_measure.supermartingale";
  e1.value = sup_drift;
  e1.target = 0.0;
  e1.tolerance = tol;
  e1.worst_node = sup_node;
  e1.verdict = sup_drift <= tol ? Verdict::pass : Verdict::fail;
  e1.detail = "max one-sided drift E^Qg[F_T|m] - F_m over " + std::to_string(n_measures) +
              " measures (vertices and entropy minimizer)" + (truncated_any ? ", vertex list truncated" : "");
  rep.add(std::move(e1));
  CheckEntry e2;
  e2.id = "forward.martingale_at_minimizer" + tag;
  e2.check_tag = "forward_measure.martingale_at_minimizer";
  e2.value = opt_abs;
  e2.target = 0.0;
  e2.tolerance = tol;
  e2.worst_node = opt_node;
  e2.verdict = opt_abs <= tol ? Verdict::pass : Verdict::fail;
  e2.detail = "max |drift| under the forward measure of the entropy minimizer";
  rep.add(std::move(e2));
  return rep;
}

/// Refusal raised by solve_min_entropy_shift when 1/gamma is not a
/// martingale under every martingale measure.
class ConditionRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds A backward so that h(1/gamma_t) - A_t/gamma_t = min_Q H(Q; t, T)
/// at every node before T. Values of A at time T are taken from
/// `terminal_a`; nodes after T keep their input values.
inline ExponentialFieldParams solve_min_entropy_shift(const EventTree& tree,
                                                      const std::vector<double>& gamma,
                                                      const std::vector<double>& terminal_a, int T,
                                                      double tol = 1e-10) {
  require_valid(tree);
  if (gamma.size() != tree.size() || terminal_a.size() != tree.size())
    throw std::invalid_argument("solve_min_entropy_shift: sizes do not match tree");
  ExponentialFieldParams p(gamma, terminal_a);
  for (double g : gamma)
    if (!(g > 0.0)) throw std::domain_error("solve_min_entropy_shift: gamma must be > 0");
  for (int t = 0; t < T; ++t)
    for (NodeId n : tree.nodes_at(t)) {
      auto inv = [&](NodeId k) { return 1.0 / gamma[k]; };
      const double hi = extremal_expectation(tree, n, T, inv, true);
      const double lo = extremal_expectation(tree, n, T, inv, false);
      const double target = 1.0 / gamma[n];
      if (std::abs(hi - target) > tol || std::abs(lo - target) > tol) {
        std::ostringstream os;
        os << "refused: E^Q[1/gamma_T | node " << tree.label(n) << "] ranges over [" << lo << ", "
           << hi << "] but 1/gamma at the node is " << target;
        throw ConditionRefused(os.str());
      }
    }
  for (int t = T - 1; t >= 0; --t) {
    const auto me = min_entropy(tree, p, t, T);
    for (std::size_t i = 0; i < me.nodes.size(); ++i) {
      const NodeId n = me.nodes[i];
      const double g = gamma[n];
      p.a_shift[n] = g * (h_entropy(1.0 / g) - me.value[i]);
    }
  }
  return p;
}

}  // namespace fwdperf
