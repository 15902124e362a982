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

// Finite event-tree market with one risky asset quoted in units of the
// numeraire. Each non-root node carries the reference-measure probability
// and the price increment of the edge leading into it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "forwardperf/lp.hpp"
#include "forwardperf/report.hpp"

namespace fwdperf {

using NodeId = std::size_t;

/// Raised when an operation needs a tree that passes validate_tree.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when no (absolutely continuous) martingale measure exists where
/// one is required.
class NoMartingaleMeasure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw node description as read from a tree file. Branch k of a node pairs
/// with the k-th record, in input order, whose parent is that node.
struct NodeRecord {
  long id = 0;
  std::optional<long> parent;
  int time = 0;
  std::vector<std::pair<double, double>> branches;  // (probability, price increment)
};

class EventTree {
 public:
  struct Node {
    long label = 0;
    std::optional<NodeId> parent;
    int time = 0;
    std::vector<NodeId> children;
    double prob = 1.0;  // P(edge into this node | parent)
    double dS = 0.0;    // price increment on the edge into this node
  };

  EventTree() = default;

  /// Links records into a tree. Throws std::invalid_argument on structural
  /// defects (duplicate ids, unknown parents, no unique root, unreachable
  /// nodes, branch/child count mismatch). Numerical defects are left for
  /// validate_tree to report.
  static EventTree from_records(const std::vector<NodeRecord>& recs) {
    if (recs.empty()) throw std::invalid_argument("event tree: no nodes");
    std::map<long, std::size_t> by_id;
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (!by_id.emplace(recs[i].id, i).second)
        throw std::invalid_argument("event tree: duplicate node id " + std::to_string(recs[i].id));
    std::optional<std::size_t> root;
    std::vector<std::vector<std::size_t>> kids(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (!recs[i].parent) {
        if (root)
          throw std::invalid_argument("event tree: more than one root (" +
                                      std::to_string(recs[*root].id) + ", " +
                                      std::to_string(recs[i].id) + ")");
        root = i;
        continue;
      }
      auto it = by_id.find(*recs[i].parent);
      if (it == by_id.end())
        throw std::invalid_argument("event tree: node " + std::to_string(recs[i].id) +
                                    " has unknown parent " + std::to_string(*recs[i].parent));
      kids[it->second].push_back(i);
    }
    if (!root) throw std::invalid_argument("event tree: no root node");
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (kids[i].size() != recs[i].branches.size())
        throw std::invalid_argument("event tree: node " + std::to_string(recs[i].id) + " lists " +
                                    std::to_string(recs[i].branches.size()) +
                                    " branches but has " + std::to_string(kids[i].size()) +
                                    " children");

    // Breadth-first renumbering: the root becomes 0 and parents precede
    // children.
    EventTree tree;
    std::vector<std::optional<NodeId>> new_id(recs.size());
    std::deque<std::size_t> queue{*root};
    std::vector<std::size_t> order;
    new_id[*root] = 0;
    order.push_back(*root);
    while (!queue.empty()) {
      const std::size_t r = queue.front();
      queue.pop_front();
      for (std::size_t c : kids[r]) {
        if (new_id[c]) throw std::invalid_argument("event tree: cycle detected");
        new_id[c] = order.size();
        order.push_back(c);
        queue.push_back(c);
      }
    }
    if (order.size() != recs.size())
      throw std::invalid_argument("event tree: some nodes are not reachable from the root");

    tree.nodes_.resize(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& rec = recs[order[k]];
      Node& nd = tree.nodes_[k];
      nd.label = rec.id;
      nd.time = rec.time;
      if (rec.parent) nd.parent = *new_id[by_id.at(*rec.parent)];
      const auto& ch = kids[order[k]];
      for (std::size_t b = 0; b < ch.size(); ++b) {
        const NodeId cid = *new_id[ch[b]];
        nd.children.push_back(cid);
      }
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& rec = recs[order[k]];
      const auto& nd = tree.nodes_[k];
      for (std::size_t b = 0; b < nd.children.size(); ++b) {
        tree.nodes_[nd.children[b]].prob = rec.branches[b].first;
        tree.nodes_[nd.children[b]].dS = rec.branches[b].second;
      }
    }
    for (std::size_t k = 0; k < tree.nodes_.size(); ++k) {
      tree.label_index_[tree.nodes_[k].label] = k;
      tree.horizon_ = std::max(tree.horizon_, tree.nodes_[k].time);
    }
    return tree;
  }

  /// Recombination-free tree in which every node at time < horizon branches
  /// with the same (probability, increment) pairs.
  static EventTree uniform(const std::vector<std::pair<double, double>>& branches, int horizon) {
    std::vector<NodeRecord> recs;
    recs.push_back({0, std::nullopt, 0, {}});
    std::vector<std::size_t> frontier{0};
    for (int t = 0; t < horizon; ++t) {
      std::vector<std::size_t> next;
      for (std::size_t f : frontier) {
        recs[f].branches = branches;
        const long parent_id = recs[f].id;
        for (std::size_t b = 0; b < branches.size(); ++b) {
          recs.push_back({static_cast<long>(recs.size()), parent_id, t + 1, {}});
          next.push_back(recs.size() - 1);
        }
      }
      frontier = std::move(next);
    }
    return from_records(recs);
  }

  std::vector<NodeRecord> to_records() const {
    std::vector<NodeRecord> out;
    for (const auto& nd : nodes_) {
      NodeRecord r;
      r.id = nd.label;
      if (nd.parent) r.parent = nodes_[*nd.parent].label;
      r.time = nd.time;
      for (NodeId c : nd.children) r.branches.emplace_back(nodes_[c].prob, nodes_[c].dS);
      out.push_back(std::move(r));
    }
    return out;
  }

  std::size_t size() const { return nodes_.size(); }
  NodeId root() const { return 0; }
  int horizon() const { return horizon_; }
  const Node& node(NodeId i) const { return nodes_.at(i); }
  const std::vector<NodeId>& children(NodeId i) const { return nodes_.at(i).children; }
  std::optional<NodeId> parent(NodeId i) const { return nodes_.at(i).parent; }
  int time(NodeId i) const { return nodes_.at(i).time; }
  double prob(NodeId i) const { return nodes_.at(i).prob; }
  double dS(NodeId i) const { return nodes_.at(i).dS; }
  long label(NodeId i) const { return nodes_.at(i).label; }
  bool is_leaf(NodeId i) const { return nodes_.at(i).children.empty(); }

  NodeId index_of(long label) const {
    auto it = label_index_.find(label);
    if (it == label_index_.end())
      throw std::out_of_range("event tree: no node with id " + std::to_string(label));
    return it->second;
  }

  std::vector<NodeId> nodes_at(int t) const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].time == t) out.push_back(i);
    return out;
  }

  /// Descendants of n (n included when time(n) == t) that sit at time t.
  std::vector<NodeId> descendants_at(NodeId n, int t) const {
    std::vector<NodeId> out;
    std::vector<NodeId> stack{n};
    while (!stack.empty()) {
      const NodeId k = stack.back();
      stack.pop_back();
      if (nodes_[k].time == t) {
        out.push_back(k);
        continue;
      }
      if (nodes_[k].time > t) continue;
      for (auto it = nodes_[k].children.rbegin(); it != nodes_[k].children.rend(); ++it)
        stack.push_back(*it);
    }
    return out;
  }

  /// Nodes of the subtree of n with time in [time(n), t), in
  /// parent-before-child order.
  std::vector<NodeId> interior_nodes(NodeId n, int t) const {
    std::vector<NodeId> out;
    if (nodes_[n].time >= t) return out;
    std::deque<NodeId> q{n};
    while (!q.empty()) {
      const NodeId k = q.front();
      q.pop_front();
      out.push_back(k);
      if (nodes_[k].time + 1 < t)
        for (NodeId c : nodes_[k].children) q.push_back(c);
    }
    return out;
  }

  NodeId ancestor_at(NodeId n, int s) const {
    if (s > nodes_.at(n).time)
      throw std::invalid_argument("ancestor_at: time " + std::to_string(s) + " is after node " +
                                  std::to_string(label(n)));
    NodeId k = n;
    while (nodes_[k].time > s) {
      if (!nodes_[k].parent) throw std::invalid_argument("ancestor_at: ran past the root");
      k = *nodes_[k].parent;
    }
    if (nodes_[k].time != s)
      throw std::invalid_argument("ancestor_at: no ancestor at time " + std::to_string(s));
    return k;
  }

  bool descends_from(NodeId n, NodeId anc) const {
    NodeId k = n;
    while (true) {
      if (k == anc) return true;
      if (!nodes_[k].parent) return false;
      k = *nodes_[k].parent;
    }
  }

  /// Reference probability of reaching `n` conditional on its ancestor `from`.
  double path_prob(NodeId from, NodeId n) const {
    double p = 1.0;
    NodeId k = n;
    while (k != from) {
      if (!nodes_[k].parent) throw std::invalid_argument("path_prob: not a descendant");
      p *= nodes_[k].prob;
      k = *nodes_[k].parent;
    }
    return p;
  }

  /// Price S at node n relative to S at the root.
  double cumulative_price(NodeId n) const {
    double s = 0.0;
    NodeId k = n;
    while (nodes_[k].parent) {
      s += nodes_[k].dS;
      k = *nodes_[k].parent;
    }
    return s;
  }

 private:
  std::vector<Node> nodes_;
  std::map<long, NodeId> label_index_;
  int horizon_ = 0;
};

/// One-step conditional probabilities q per edge (indexed by the child node;
/// the root entry is 1).
struct TreeMeasure {
  std::vector<double> cond_prob;

  static TreeMeasure reference(const EventTree& tree) {
    TreeMeasure q;
    q.cond_prob.resize(tree.size());
    for (NodeId i = 0; i < tree.size(); ++i) q.cond_prob[i] = tree.prob(i);
    q.cond_prob[0] = 1.0;
    return q;
  }

  double operator[](NodeId i) const { return cond_prob.at(i); }
  double& operator[](NodeId i) { return cond_prob.at(i); }
};

/// Density process Z^Q, one value per node.
struct DensityPath {
  std::vector<double> z;
  double operator[](NodeId i) const { return z.at(i); }
};

// --------------------------------------------------------------------------
// Validation

inline VerificationReport validate_tree(const EventTree& tree, double tol = 1e-12) {
  VerificationReport rep("event tree validation");
  std::size_t issue = 0;
  auto fail = [&](NodeId n, const std::string& what, double value, double target) {
    CheckEntry e;
    std::ostringstream id;
    id << "tree.issue." << std::setw(3) << std::setfill('0') << issue;
    ++issue;
    e.id = id.str();
    e.check_tag = "event_tree.structure";
    e.value = value;
    e.target = target;
    e.tolerance = tol;
    e.worst_node = tree.label(n);
    e.verdict = Verdict::fail;
    e.detail = what;
    rep.add(std::move(e));
  };

  if (tree.size() == 0) {
    CheckEntry e;
    e.id = "tree.empty";
    e.check_tag = "event_tree.structure";
    e.detail = "tree has no nodes";
    rep.add(e);
    return rep;
  }
  if (tree.time(0) != 0) fail(0, "root must sit at time 0", tree.time(0), 0);
  for (NodeId n = 0; n < tree.size(); ++n) {
    const auto& nd = tree.node(n);
    if (tree.is_leaf(n) && nd.time != tree.horizon())
      fail(n, "leaf before the horizon", nd.time, tree.horizon());
    double sum = 0.0;
    for (NodeId c : nd.children) {
      const auto& cn = tree.node(c);
      if (cn.time != nd.time + 1) fail(c, "child time is not parent time + 1", cn.time, nd.time + 1);
      if (!std::isfinite(cn.prob) || !std::isfinite(cn.dS)) {
        fail(c, "non-finite branch data", cn.prob, 0.0);
        continue;
      }
      if (cn.prob <= 0.0)
        fail(c, "branch probability must be > 0 (reference measure must charge every path)",
             cn.prob, 0.0);
      sum += cn.prob;
    }
    if (!nd.children.empty() && std::abs(sum - 1.0) > 1e-12 * nd.children.size() + tol) {
      std::ostringstream msg;
      msg << "branch probabilities sum to " << sum;
      fail(n, msg.str(), sum, 1.0);
    }
  }
  if (rep.empty()) {
    CheckEntry e;
    e.id = "tree.valid";
    e.check_tag = "event_tree.structure";
    e.value = static_cast<double>(tree.size());
    e.target = static_cast<double>(tree.size());
    e.verdict = Verdict::pass;
    e.detail = "nodes=" + std::to_string(tree.size()) + " horizon=" + std::to_string(tree.horizon());
    rep.add(e);
  }
  return rep;
}

inline void require_valid(const EventTree& tree) {
  const auto rep = validate_tree(tree);
  if (!rep.passed()) {
    std::ostringstream os;
    os << "invalid event tree:";
    for (const auto& [id, e] : rep.entries())
      os << " [node " << (e.worst_node ? *e.worst_node : -1) << ": " << e.detail << "]";
    throw PreconditionError(os.str());
  }
}

// --------------------------------------------------------------------------
// One-step martingale polytopes

/// {q >= 0, sum q = 1, sum q dS = 0} at one node.
struct NodePolytope {
  NodeId node = 0;
  std::vector<NodeId> children;
  std::vector<double> increments;
  std::vector<std::vector<double>> vertices;  // each of size children.size()
  int dimension = -1;                         // -1 when empty

  bool empty() const { return vertices.empty(); }
};

/// Vertices of the one-step polytope for a single asset: a vertex has at
/// most two nonzero weights. Single-support vertices sit on zero increments;
/// two-support vertices pair an up-move with a down-move.
inline std::vector<std::vector<double>> one_step_vertices(const std::vector<double>& dS) {
  const std::size_t k = dS.size();
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < k; ++i)
    if (dS[i] == 0.0) {
      std::vector<double> v(k, 0.0);
      v[i] = 1.0;
      out.push_back(std::move(v));
    }
  for (std::size_t i = 0; i < k; ++i) {
    if (!(dS[i] > 0.0)) continue;
    for (std::size_t j = 0; j < k; ++j) {
      if (!(dS[j] < 0.0)) continue;
      std::vector<double> v(k, 0.0);
      const double span = dS[i] - dS[j];
      v[i] = -dS[j] / span;
      v[j] = dS[i] / span;
      out.push_back(std::move(v));
    }
  }
  return out;
}

inline NodePolytope node_polytope(const EventTree& tree, NodeId n) {
  NodePolytope p;
  p.node = n;
  p.children = tree.children(n);
  for (NodeId c : p.children) p.increments.push_back(tree.dS(c));
  p.vertices = one_step_vertices(p.increments);
  if (!p.vertices.empty()) {
    bool any_nonzero = false;
    for (double d : p.increments) any_nonzero |= (d != 0.0);
    p.dimension = static_cast<int>(p.children.size()) - (any_nonzero ? 2 : 1);
  }
  return p;
}

struct MeasurePolytope {
  int t = 0, T = 0;
  std::vector<NodePolytope> nodes;  // every node with time in [t, T)

  bool empty() const {
    for (const auto& p : nodes)
      if (p.empty()) return true;
    return false;
  }
  const NodePolytope& at(NodeId n) const {
    for (const auto& p : nodes)
      if (p.node == n) return p;
    throw std::out_of_range("measure polytope: node not in range");
  }
};

inline MeasurePolytope measure_polytope(const EventTree& tree, int t, int T) {
  if (t > T) throw std::invalid_argument("measure_polytope: t > T");
  if (t < 0 || T > tree.horizon()) throw std::invalid_argument("measure_polytope: times out of range");
  MeasurePolytope mp;
  mp.t = t;
  mp.T = T;
  for (NodeId n = 0; n < tree.size(); ++n)
    if (tree.time(n) >= t && tree.time(n) < T) mp.nodes.push_back(node_polytope(tree, n));
  return mp;
}

struct NflvrResult {
  bool ok = false;
  VerificationReport report;
};

/// Per node, maximizes eps subject to q_i = eps + r_i, r >= 0, sum q = 1,
/// sum q dS = 0. The market is free of arbitrage iff eps* > 0 everywhere.
inline NflvrResult check_nflvr(const EventTree& tree, double eps_tol = 1e-12) {
  require_valid(tree);
  NflvrResult res;
  res.ok = true;
  res.report = VerificationReport("no-arbitrage (strictly positive one-step martingale measures)");
  double worst = std::numeric_limits<double>::infinity();
  std::optional<NodeId> worst_node;
  for (NodeId n = 0; n < tree.size(); ++n) {
    const auto& ch = tree.children(n);
    if (ch.empty()) continue;
    const std::size_t k = ch.size();
    lp::Problem pb;
    pb.c.assign(k + 1, 0.0);
    pb.c[k] = 1.0;
    std::vector<double> norm(k + 1, 1.0), mart(k + 1, 0.0);
    norm[k] = static_cast<double>(k);
    double sum_ds = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      mart[i] = tree.dS(ch[i]);
      sum_ds += mart[i];
    }
    mart[k] = sum_ds;
    pb.a = {norm, mart};
    pb.b = {1.0, 0.0};
    const auto sol = lp::maximize(pb);
    const double eps = sol.status == lp::Status::optimal ? sol.objective : -1.0;
    if (eps < worst) {
      worst = eps;
      worst_node = n;
    }
    if (!(eps > eps_tol)) {
      res.ok = false;
      CheckEntry e;
      e.id = "nflvr.node." + std::to_string(tree.label(n));
      e.check_tag = "market.no_arbitrage";
      e.value = eps;
      e.target = 0.0;
      e.tolerance = eps_tol;
      e.worst_node = tree.label(n);
      e.verdict = Verdict::fail;
      e.detail = sol.status == lp::Status::optimal
                     ? "one-step martingale measures exist but none is strictly positive"
                     : "no one-step martingale measure (arbitrage)";
      res.report.add(std::move(e));
    }
  }
  CheckEntry e;
  e.id = "nflvr.summary";
  e.check_tag = "market.no_arbitrage";
  e.value = worst_node ? worst : 1.0;
  e.target = 0.0;
  e.tolerance = eps_tol;
  if (worst_node) e.worst_node = tree.label(*worst_node);
  e.verdict = res.ok ? Verdict::pass : Verdict::fail;
  e.detail = "value = smallest max-min one-step martingale weight";
  res.report.add(std::move(e));
  return res;
}

// --------------------------------------------------------------------------
// Densities

inline DensityPath density_process(const EventTree& tree, const TreeMeasure& q,
                                   double tol = 1e-12) {
  if (q.cond_prob.size() != tree.size())
    throw std::invalid_argument("density_process: measure size does not match tree");
  for (NodeId n = 0; n < tree.size(); ++n) {
    const auto& ch = tree.children(n);
    if (ch.empty()) continue;
    double s = 0.0;
    for (NodeId c : ch) {
      if (q[c] < -tol) throw std::invalid_argument("density_process: negative probability");
      s += q[c];
    }
    if (std::abs(s - 1.0) > tol * ch.size())
      throw std::invalid_argument("density_process: measure not normalized at node " +
                                  std::to_string(tree.label(n)));
  }
  DensityPath z;
  z.z.assign(tree.size(), 0.0);
  z.z[0] = 1.0;
  for (NodeId n = 1; n < tree.size(); ++n) {
    const NodeId par = *tree.parent(n);
    if (!(tree.prob(n) > 0.0))
      throw PreconditionError("density_process: branch probability must be > 0");
    z.z[n] = z.z[par] * (std::max(q[n], 0.0) / tree.prob(n));
  }
  return z;
}

/// Z_t / Z_s along the path into `node` (at time t), with the convention
/// that the quotient is 1 where Z_s = 0.
inline double density_quotient(const EventTree& tree, const DensityPath& z, int s, int t,
                               NodeId node) {
  if (s > t) throw std::invalid_argument("density_quotient: s > t");
  if (tree.time(node) != t)
    throw std::invalid_argument("density_quotient: node is not at time t");
  const NodeId anc = tree.ancestor_at(node, s);
  const double zs = z[anc];
  if (zs == 0.0) return 1.0;
  return z[node] / zs;
}

// --------------------------------------------------------------------------
// Leaf-space description of a subtree's martingale measures

/// Conditional measures on the subtree of `root` up to time T, written in
/// terms of the probabilities of the time-T nodes ("leaves").
struct LeafSystem {
  NodeId root = 0;
  int T = 0;
  std::vector<NodeId> leaves;               // time-T descendants of root
  std::vector<double> ref_prob;             // P(leaf | root)
  std::vector<NodeId> interior;             // nodes with time in [time(root), T)
  std::vector<std::vector<double>> a;       // normalization row + one martingale row per interior
  std::vector<double> b;

  std::size_t leaf_index(NodeId n) const {
    auto it = std::find(leaves.begin(), leaves.end(), n);
    if (it == leaves.end()) throw std::out_of_range("leaf system: not a leaf");
    return static_cast<std::size_t>(it - leaves.begin());
  }
};

inline LeafSystem leaf_system(const EventTree& tree, NodeId root, int T) {
  if (tree.time(root) > T) throw std::invalid_argument("leaf_system: node after T");
  LeafSystem ls;
  ls.root = root;
  ls.T = T;
  ls.leaves = tree.descendants_at(root, T);
  for (NodeId l : ls.leaves) ls.ref_prob.push_back(tree.path_prob(root, l));
  ls.interior = tree.interior_nodes(root, T);
  const std::size_t m = ls.leaves.size();
  ls.a.push_back(std::vector<double>(m, 1.0));
  ls.b.push_back(1.0);
  for (NodeId k : ls.interior) {
    std::vector<double> row(m, 0.0);
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (!tree.descends_from(ls.leaves[j], k)) continue;
      // increment on the first edge below k on the way to the leaf
      NodeId c = ls.leaves[j];
      while (*tree.parent(c) != k) c = *tree.parent(c);
      row[j] = tree.dS(c);
      any |= (row[j] != 0.0);
    }
    if (any) {
      ls.a.push_back(std::move(row));
      ls.b.push_back(0.0);
    }
  }
  return ls;
}

/// Leaf weights -> one-step conditional probabilities on the subtree. Edges
/// under zero-mass nodes get the node's first martingale vertex (or the
/// reference probabilities when the node has none); edges outside the
/// subtree keep the values from `base`.
inline TreeMeasure measure_from_leaf_weights(const EventTree& tree, const LeafSystem& ls,
                                             const std::vector<double>& w,
                                             const TreeMeasure& base) {
  std::vector<double> mass(tree.size(), 0.0);
  for (std::size_t j = 0; j < ls.leaves.size(); ++j) {
    NodeId k = ls.leaves[j];
    while (true) {
      mass[k] += std::max(w[j], 0.0);
      if (k == ls.root) break;
      k = *tree.parent(k);
    }
  }
  TreeMeasure q = base;
  for (NodeId k : ls.interior) {
    const auto& ch = tree.children(k);
    if (mass[k] > 0.0) {
      for (NodeId c : ch) q[c] = mass[c] / mass[k];
    } else {
      const auto v = node_polytope(tree, k).vertices;
      for (std::size_t i = 0; i < ch.size(); ++i)
        q[ch[i]] = v.empty() ? tree.prob(ch[i]) : v.front()[i];
    }
  }
  return q;
}

/// Q(leaf | root) for every leaf of the system.
inline std::vector<double> leaf_weights(const EventTree& tree, const LeafSystem& ls,
                                        const TreeMeasure& q) {
  std::vector<double> w(ls.leaves.size(), 1.0);
  for (std::size_t j = 0; j < ls.leaves.size(); ++j) {
    NodeId k = ls.leaves[j];
    while (k != ls.root) {
      w[j] *= q[k];
      k = *tree.parent(k);
    }
  }
  return w;
}

struct SupportResult {
  bool feasible = false;
  std::vector<NodeId> leaves;  // charged by some martingale measure
  std::vector<double> max_mass;
  std::string diagnostic;
};

/// Union of supports of all absolutely continuous martingale measures on
/// the subtree of `root` up to T: one linear program per leaf.
inline SupportResult maximal_support_at(const EventTree& tree, NodeId root, int T,
                                        double tol = 1e-11) {
  const auto ls = leaf_system(tree, root, T);
  SupportResult res;
  res.max_mass.assign(ls.leaves.size(), 0.0);
  for (std::size_t j = 0; j < ls.leaves.size(); ++j) {
    lp::Problem pb;
    pb.c.assign(ls.leaves.size(), 0.0);
    pb.c[j] = 1.0;
    pb.a = ls.a;
    pb.b = ls.b;
    const auto sol = lp::maximize(pb);
    if (sol.status == lp::Status::infeasible) {
      res.feasible = false;
      res.leaves.clear();
      res.diagnostic = "no martingale measure on the subtree of node " +
                       std::to_string(tree.label(root)) + " (no-arbitrage fails)";
      return res;
    }
    res.max_mass[j] = sol.objective;
    if (sol.objective > tol) res.leaves.push_back(ls.leaves[j]);
  }
  res.feasible = true;
  return res;
}

/// maximal_support_at for every node at time t; leaves concatenated.
inline SupportResult maximal_support(const EventTree& tree, int t, int T) {
  require_valid(tree);
  if (t > T || T > tree.horizon()) throw std::invalid_argument("maximal_support: bad times");
  SupportResult all;
  all.feasible = true;
  for (NodeId n : tree.nodes_at(t)) {
    auto r = maximal_support_at(tree, n, T);
    if (!r.feasible) return r;
    all.leaves.insert(all.leaves.end(), r.leaves.begin(), r.leaves.end());
    all.max_mass.insert(all.max_mass.end(), r.max_mass.begin(), r.max_mass.end());
  }
  return all;
}

/// Leaf-weight vectors of the measures obtained by picking one vertex of
/// every one-step polytope in the subtree. Returns an empty list when some
/// polytope on a charged node is empty; stops after `cap` measures.
inline std::vector<std::vector<double>> vertex_measures(const EventTree& tree, NodeId root, int T,
                                                        std::size_t cap = 4096,
                                                        bool* truncated = nullptr) {
  const auto ls = leaf_system(tree, root, T);
  std::vector<NodePolytope> polys;
  for (NodeId k : ls.interior) polys.push_back(node_polytope(tree, k));
  std::set<std::vector<double>> seen;
  std::vector<std::vector<double>> out;
  if (truncated) *truncated = false;

  // mass per node propagated from the root; recursion over interior nodes
  // in parent-before-child order.
  std::vector<std::size_t> choice(polys.size(), 0);
  std::map<NodeId, std::size_t> poly_index;
  for (std::size_t i = 0; i < polys.size(); ++i) poly_index[polys[i].node] = i;
  for (const auto& p : polys)
    if (p.empty()) return out;

  while (true) {
    std::vector<double> mass(tree.size(), 0.0);
    mass[root] = 1.0;
    for (std::size_t i = 0; i < polys.size(); ++i) {
      const auto& p = polys[i];
      const auto& v = p.vertices[choice[i]];
      for (std::size_t c = 0; c < p.children.size(); ++c) mass[p.children[c]] = mass[p.node] * v[c];
    }
    std::vector<double> w(ls.leaves.size());
    for (std::size_t j = 0; j < ls.leaves.size(); ++j) w[j] = mass[ls.leaves[j]];
    if (seen.insert(w).second) {
      out.push_back(w);
      if (out.size() >= cap) {
        if (truncated) *truncated = true;
        return out;
      }
    }
    // odometer increment
    std::size_t i = 0;
    for (; i < polys.size(); ++i) {
      if (++choice[i] < polys[i].vertices.size()) break;
      choice[i] = 0;
    }
    if (i == polys.size()) break;
  }
  return out;
}

}  // namespace fwdperf
