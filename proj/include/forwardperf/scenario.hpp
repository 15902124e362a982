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

// Scenario files: a JSON document naming a market, a field and a list of
// checks. See README.md for the schema. run_scenario returns 0 when every
// check passes, 1 when some check fails and 2 on configuration errors.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "forwardperf/fields.hpp"
#include "forwardperf/ito_engine.hpp"
#include "forwardperf/mc_verifier.hpp"
#include "forwardperf/parallel.hpp"
#include "forwardperf/report.hpp"
#include "forwardperf/tree_io.hpp"
#include "forwardperf/tree_market.hpp"
#include "forwardperf/tree_verifier.hpp"

namespace fwdperf::scenario {

using io::ConfigError;
using io::View;

inline constexpr const char* seed_env = "FORWARDPERF_SEED";

struct RunOptions {
  std::optional<std::uint64_t> seed;       // overrides the scenario and the environment
  std::optional<std::string> export_path;  // overrides "out" of export-paths scenarios
  std::optional<std::string> report_path;  // overrides "report"
  unsigned threads = 0;
};

struct Outcome {
  int exit_code = 2;
  VerificationReport report;
  std::string diagnostic;
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
  std::filesystem::path p(rel);
  return p.is_absolute() ? p : base / p;
}

inline std::vector<double> per_node(const View& v, const EventTree& tree) {
  v.allow_keys({"values"});
  const View vals = v.at("values");
  if (!vals.is_object()) vals.fail("expected an object keyed by node id");
  std::vector<double> out(tree.size(), std::nan(""));
  for (const auto& k : vals.keys()) {
    long id;
    try {
      std::size_t pos;
      id = std::stol(k, &pos);
      if (pos != k.size()) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      vals.at(k).fail("key is not a node id");
    }
    NodeId n;
    try {
      n = tree.index_of(id);
    } catch (const std::exception&) {
      vals.at(k).fail("no node with id " + k);
    }
    out[n] = vals.at(k).number();
  }
  for (NodeId n = 0; n < tree.size(); ++n)
    if (std::isnan(out[n])) vals.fail("missing value for node " + std::to_string(tree.label(n)));
  return out;
}

inline std::vector<double> node_values(const View& v, const EventTree& tree) {
  if (v.is_number()) return std::vector<double>(tree.size(), v.number());
  return per_node(v, tree);
}

inline std::vector<double> build_gamma(const View& v, const EventTree& tree) {
  if (v.is_object() && v.has("replicate")) {
    v.allow_keys({"replicate"});
    const View r = v.at("replicate");
    r.allow_keys({"gamma0", "portfolio"});
    const double g0 = r.at("gamma0").number();
    if (!(g0 > 0.0)) r.at("gamma0").fail("gamma0 must be > 0");
    const auto pi = node_values(r.at("portfolio"), tree);
    std::vector<double> inv(tree.size());
    inv[0] = 1.0 / g0;
    // breadth-first numbering: parents precede children
    for (NodeId n = 1; n < tree.size(); ++n) {
      const NodeId par = *tree.parent(n);
      inv[n] = inv[par] + pi[par] * tree.dS(n);
      if (!(inv[n] > 0.0))
        r.at("portfolio").fail("replication gives 1/gamma <= 0 at node " + std::to_string(tree.label(n)));
    }
    std::vector<double> g(tree.size());
    for (NodeId n = 0; n < tree.size(); ++n) g[n] = 1.0 / inv[n];
    return g;
  }
  auto g = node_values(v, tree);
  for (double x : g)
    if (!(x > 0.0)) v.fail("gamma must be > 0 at every node");
  return g;
}

inline ExponentialFieldParams build_tree_field(const View& v, const EventTree& tree) {
  v.allow_keys({"gamma", "a", "a0_offset"});
  const auto gamma = build_gamma(v.at("gamma"), tree);
  const View a = v.at("a");
  ExponentialFieldParams p;
  if (a.is_object() && a.has("min_entropy")) {
    a.allow_keys({"min_entropy"});
    const View me = a.at("min_entropy");
    me.allow_keys({"terminal"});
    const auto terminal = node_values(me.at("terminal"), tree);
    try {
      p = solve_min_entropy_shift(tree, gamma, terminal, tree.horizon());
    } catch (const ConditionRefused& e) {
      me.fail(e.what());
    } catch (const NoMartingaleMeasure& e) {
      me.fail(e.what());
    }
  } else {
    p = ExponentialFieldParams(gamma, node_values(a, tree));
  }
  if (v.has("a0_offset")) p.a_shift[0] += v.at("a0_offset").number();
  return p;
}

inline double tolerance(const View& c, double def) {
  const double t = c.number_or("tolerance", def);
  if (!(t > 0.0)) c.at("tolerance").fail("tolerance must be > 0");
  return t;
}

inline double confidence(const View& c, double def = 0.997) {
  const double x = c.number_or("confidence", def);
  if (!(x > 0.5 && x < 1.0)) c.at("confidence").fail("confidence must lie in (0.5, 1)");
  return x;
}

inline std::vector<double> grid_or(const View& c, const std::string& key, std::vector<double> def) {
  if (!c.has(key)) return def;
  auto g = c.at(key).numbers();
  if (g.empty()) c.at(key).fail("grid must be nonempty");
  return g;
}

inline TimePairs pairs_or(const View& c, const EventTree& tree, TimePairs def) {
  if (!c.has("pairs")) return def;
  TimePairs out;
  const View ps = c.at("pairs");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const View p = ps.at(i);
    if (!p.is_array() || p.size() != 2) p.fail("expected [t, T]");
    const int t = static_cast<int>(p.at(0).integer()), T = static_cast<int>(p.at(1).integer());
    if (t < 0 || t > T || T > tree.horizon()) p.fail("need 0 <= t <= T <= horizon");
    out.emplace_back(t, T);
  }
  return out;
}

inline PrimalMethod primal_method(const View& c) {
  if (!c.has("method")) return PrimalMethod::automatic;
  const std::string m = c.at("method").str();
  if (m == "automatic") return PrimalMethod::automatic;
  if (m == "exponential_factor") return PrimalMethod::exponential_factor;
  if (m == "nested") return PrimalMethod::nested;
  if (m == "wealth_grid") return PrimalMethod::wealth_grid;
  c.at("method").fail("unknown method \"" + m + "\"");
}

inline void add_unique(VerificationReport& rep, const VerificationReport& part, const View& where) {
  for (const auto& [id, e] : part.entries()) {
    if (rep.contains(id)) where.fail("check produces entry \"" + id + "\" twice; is it listed twice?");
    rep.add(e);
  }
  for (const auto& n : part.notes()) rep.add_note(n);
}

inline CheckEntry error_entry(const std::string& id, const std::string& tag, Verdict v, const std::string& why) {
  CheckEntry e;
  e.id = id;
  e.check_tag = tag;
  e.verdict = v;
  e.detail = why;
  return e;
}

inline void run_tree_checks(const View& sc, const EventTree& tree, const ExponentialFieldParams& p,
                            VerificationReport& rep) {
  const Field field = p;
  TimePairs all_pairs;
  for (int t = 0; t < tree.horizon(); ++t)
    for (int T = t + 1; T <= tree.horizon(); ++T) all_pairs.emplace_back(t, T);
  const View checks = sc.at("checks");
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const View c = checks.at(i);
    const std::string name = c.at("name").str();
    VerificationReport part;
    try {
      if (name == "tree_structure") {
        c.allow_keys({"name"});
        part = validate_tree(tree);
      } else if (name == "nflvr") {
        c.allow_keys({"name"});
        part = check_nflvr(tree).report;
      } else if (name == "primal_self_generation") {
        c.allow_keys({"name", "tolerance", "xi", "pairs", "method"});
        PrimalOptions po;
        po.method = primal_method(c);
        part = check_self_generation_primal(tree, field, pairs_or(c, tree, all_pairs),
                                            grid_or(c, "xi", {-1.0, 0.0, 1.0}), tolerance(c, 1e-6), po);
      } else if (name == "dual_self_generation") {
        c.allow_keys({"name", "tolerance", "eta", "pairs"});
        part = check_self_generation_dual(tree, field, pairs_or(c, tree, all_pairs),
                                          grid_or(c, "eta", {0.5, 1.0, 2.0}), tolerance(c, 1e-6));
      } else if (name == "value_conjugacy") {
        c.allow_keys({"name", "tolerance", "xi", "eta", "pairs"});
        for (const auto& [t, T] : pairs_or(c, tree, {{0, tree.horizon()}}))
          part.merge(check_value_conjugacy(tree, field, t, T, grid_or(c, "xi", {-1.0, 0.0, 1.0}),
                                           grid_or(c, "eta", log_space(1e-2, 1e2, 9)), tolerance(c, 1e-6)));
      } else if (name == "weak_duality") {
        c.allow_keys({"name", "tolerance", "xi", "eta", "pairs"});
        for (const auto& [t, T] : pairs_or(c, tree, {{0, tree.horizon()}}))
          part.merge(check_weak_duality(tree, field, t, T, grid_or(c, "xi", lin_space(-3.0, 3.0, 7)),
                                        grid_or(c, "eta", log_space(1e-2, 1e2, 7)), tolerance(c, 1e-9)));
      } else if (name == "exponential_conditions") {
        c.allow_keys({"name", "tolerance", "pairs"});
        part = check_exponential_conditions(tree, p, pairs_or(c, tree, all_pairs), tolerance(c, 1e-6)).report;
      } else if (name == "forward_measure_conditions") {
        c.allow_keys({"name", "tolerance", "pairs"});
        for (const auto& [t, T] : pairs_or(c, tree, all_pairs))
          part.merge(check_forward_measure_conditions(tree, p, t, T, tolerance(c, 1e-6)));
      } else {
        c.at("name").fail("unknown check \"" + name + "\" for kind tree-verify");
      }
    } catch (const NoMartingaleMeasure& e) {
      part = VerificationReport();
      part.add(error_entry(name, "market.no_arbitrage", Verdict::refused, e.what()));
    }
    add_unique(rep, part, c);
  }
}

inline CoefficientSpec read_coefficients(const View& m) {
  m.allow_keys({"coefficients"});
  const View c = m.at("coefficients");
  c.allow_keys({"breakpoints", "theta", "delta", "phi", "rho", "horizon", "s0"});
  CoefficientSpec s;
  s.horizon = c.at("horizon").number();
  s.breakpoints = c.has("breakpoints") ? c.at("breakpoints").numbers() : std::vector<double>{0.0, s.horizon};
  const std::size_t m_int = s.breakpoints.size() - 1;
  auto coef = [&](const char* key) {
    if (!c.has(key)) return std::vector<double>(m_int, 0.0);
    const View v = c.at(key);
    if (v.is_number()) return std::vector<double>(m_int, v.number());
    auto x = v.numbers();
    if (x.size() != m_int) v.fail("expected one value per interval");
    return x;
  };
  s.theta = coef("theta");
  s.delta = coef("delta");
  s.phi = coef("phi");
  s.rho = coef("rho");
  s.s0 = c.number_or("s0", 0.0);
  try {
    s.validate();
  } catch (const std::exception& e) {
    c.fail(e.what());
  }
  return s;
}

inline std::vector<NamedMeasure> read_measures(const View& c, const CoefficientSpec& spec) {
  const auto phi = spec.phi_fn();
  const double T = spec.horizon;
  auto shifted = [&](double d) { return combine(phi, PiecewiseConstant::constant(d, T), [](double a, double b) { return a + b; }); };
  if (!c.has("measures")) {
    return {{"0", PiecewiseConstant::constant(0.0, T)},
            {"phi", phi},
            {"phi+0.4", shifted(0.4)},
            {"phi-0.4", shifted(-0.4)},
            {"0.8", PiecewiseConstant::constant(0.8, T)}};
  }
  std::vector<NamedMeasure> out;
  const View ms = c.at("measures");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const View m = ms.at(i);
    m.allow_keys({"label", "nu", "phi_plus"});
    NamedMeasure nm;
    nm.label = m.at("label").str();
    if (m.has("phi_plus")) {
      if (m.has("nu")) m.fail("give either nu or phi_plus");
      nm.nu = shifted(m.at("phi_plus").number());
    } else {
      const View nu = m.at("nu");
      if (nu.is_number()) {
        nm.nu = PiecewiseConstant::constant(nu.number(), T);
      } else if (nu.is_string()) {
        if (nu.str() != "phi") nu.fail("the only named measure is \"phi\"");
        nm.nu = phi;
      } else {
        nu.allow_keys({"breakpoints", "values"});
        nm.nu = {nu.at("breakpoints").numbers(), nu.at("values").numbers()};
        try {
          nm.nu.validate("nu");
          nm.nu.on_grid(T, 1 << 20);  // horizon check only; grid alignment is checked at run time
        } catch (const AlignmentError&) {
        } catch (const std::exception& e) {
          nu.fail(e.what());
        }
        if (std::abs(nm.nu.horizon() - T) > 1e-12 * T) nu.fail("last breakpoint must equal the horizon");
      }
    }
    out.push_back(std::move(nm));
  }
  return out;
}

struct ItoSetup {
  CoefficientSpec spec;
  double gamma0 = 1.0, a0 = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_paths = 100000;
  int n_steps = 64;
  bool antithetic = true;
};

inline std::uint64_t parse_seed(const std::string& s, const std::string& where) {
  try {
    std::size_t pos;
    const auto v = std::stoull(s, &pos, 0);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": invalid seed \"" + s + "\"");
  }
}

inline ItoSetup read_ito_setup(const View& sc, const RunOptions& opt) {
  ItoSetup s;
  s.spec = read_coefficients(sc.at("market"));
  const View f = sc.at("field");
  f.allow_keys({"gamma0", "a0"});
  s.gamma0 = f.number_or("gamma0", 1.0);
  if (!(s.gamma0 > 0.0)) f.at("gamma0").fail("gamma0 must be > 0");
  s.a0 = f.number_or("a0", 0.0);
  s.seed = sc.has("seed") ? static_cast<std::uint64_t>(sc.at("seed").integer()) : 0;
  if (const char* env = std::getenv(seed_env); env && *env) s.seed = parse_seed(env, seed_env);
  if (opt.seed) s.seed = *opt.seed;
  const long np = sc.integer_or("n_paths", 100000), nst = sc.integer_or("n_steps", 64);
  if (np < 1) sc.at("n_paths").fail("n_paths must be >= 1");
  if (nst < 1) sc.at("n_steps").fail("n_steps must be >= 1");
  s.n_paths = static_cast<std::size_t>(np);
  s.n_steps = static_cast<int>(nst);
  s.antithetic = sc.has("antithetic") ? sc.at("antithetic").boolean() : true;
  if (s.antithetic && s.n_paths % 2) sc.at("n_paths").fail("antithetic sampling needs an even n_paths");
  try {
    for (const auto& c : {s.spec.theta_fn(), s.spec.delta_fn(), s.spec.phi_fn(), s.spec.rho_fn()})
      c.on_grid(s.spec.horizon, s.n_steps);
  } catch (const AlignmentError& e) {
    sc.at("n_steps").fail(e.what());
  }
  return s;
}

inline std::vector<double> times_or(const View& c, const PathBundle& b, std::vector<double> def) {
  auto t = grid_or(c, "times", std::move(def));
  for (std::size_t i = 0; i < t.size(); ++i) {
    try {
      b.index_of(t[i]);
    } catch (const AlignmentError& e) {
      c.at("times").at(i).fail(e.what());
    }
  }
  return t;
}

inline void run_ito_checks(const View& sc, const ItoSetup& s, VerificationReport& rep) {
  const View checks = sc.at("checks");
  // validate all check entries before simulating
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const View c = checks.at(i);
    const std::string name = c.at("name").str();
    if (name == "regularity") c.allow_keys({"name"});
    else if (name == "dual_submartingale") c.allow_keys({"name", "y", "measures", "times", "confidence"});
    else if (name == "dual_martingale_at_optimum") c.allow_keys({"name", "y", "times", "confidence"});
    else if (name == "inverse_gamma_martingale_mc" || name == "forward_drift_mc")
      c.allow_keys({"name", "measures", "confidence"});
    else c.at("name").fail("unknown check \"" + name + "\" for kind ito-verify");
    confidence(c);
    if (c.has("measures")) read_measures(c, s.spec);
  }
  const auto b = simulate_paths(s.spec, s.n_steps, s.n_paths, s.seed, s.antithetic);
  const auto f = build_forward_exponential(s.spec, s.gamma0, s.a0, b);
  const std::vector<double> default_times{0.25 * s.spec.horizon, 0.5 * s.spec.horizon, s.spec.horizon};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const View c = checks.at(i);
    const std::string name = c.at("name").str();
    VerificationReport part;
    if (name == "regularity") {
      part = validate_regularity(s.spec, s.gamma0, s.a0);
    } else if (name == "dual_submartingale") {
      for (double y : grid_or(c, "y", {1.0}))
        add_results(part, check_dual_submartingale(b, f, y, read_measures(c, s.spec), times_or(c, b, default_times),
                                                   confidence(c)));
    } else if (name == "dual_martingale_at_optimum") {
      for (double y : grid_or(c, "y", {1.0}))
        add_results(part, check_dual_martingale_at_optimum(b, f, y, times_or(c, b, default_times), confidence(c)));
    } else if (name == "inverse_gamma_martingale_mc") {
      add_results(part, check_inverse_gamma_martingale_mc(b, f, read_measures(c, s.spec), confidence(c)));
    } else if (name == "forward_drift_mc") {
      add_results(part, check_forward_drift_mc(b, f, read_measures(c, s.spec), confidence(c)));
    }
    add_unique(rep, part, c);
  }
  rep.add_note("Monte Carlo checks test conditional statements through their unconditional consequences");
  std::size_t n_tests = 0;
  for (const auto& [id, e] : rep.entries()) n_tests += e.confidence.has_value();
  if (n_tests > 0) {
    double expected = 0.0;
    for (const auto& [id, e] : rep.entries())
      if (e.confidence) expected += 1.0 - *e.confidence;
    std::ostringstream os;
    os << "expected number of false failures across " << n_tests << " tests: " << expected;
    rep.add_note(os.str());
  }
}

inline void run_conjugate_table(const View& sc, VerificationReport& rep, std::ostream& out) {
  const View f = sc.at("field");
  f.allow_keys({"gamma", "a", "y"});
  const auto gs = f.at("gamma").numbers(), as = f.at("a").numbers(), ys = f.at("y").numbers();
  for (double g : gs)
    if (!(g > 0.0)) f.at("gamma").fail("gamma must be > 0");
  for (double y : ys)
    if (!(y >= 0.0)) f.at("y").fail("y must be >= 0");
  const View checks = sc.at("checks");
  double tol = 1e-8;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const View c = checks.at(i);
    if (c.at("name").str() != "conjugacy") c.at("name").fail("unknown check for kind conjugate-table");
    c.allow_keys({"name", "tolerance"});
    tol = tolerance(c, tol);
  }
  out << std::setw(8) << "gamma" << std::setw(8) << "a" << std::setw(14) << "y" << std::setw(24) << "numeric"
      << std::setw(24) << "closed" << std::setw(14) << "diff" << "\n";
  double worst = -1.0, wv = 0.0, wt = 0.0;
  for (double g : gs)
    for (double a : as)
      for (double y : ys) {
        const double closed = conjugate_exponential(g, a, y);
        const double num = y == 0.0 ? numeric_dual(exponential_slice(g, a)).eval(0.0)
                                    : conjugate_numeric(exponential_slice(g, a), y).value;
        const double d = num - closed;
        out << std::setw(8) << g << std::setw(8) << a << std::setw(14) << y << std::setprecision(15)
            << std::setw(24) << num << std::setw(24) << closed << std::setprecision(3) << std::setw(14) << d
            << std::setprecision(6) << "\n";
        if (std::abs(d) > worst) {
          worst = std::abs(d);
          wv = num;
          wt = closed;
        }
      }
  CheckEntry e;
  e.id = "conjugacy_table";
  e.check_tag = "fields.conjugacy";
  e.value = wv;
  e.target = wt;
  e.tolerance = tol;
  e.verdict = worst <= tol ? Verdict::pass : Verdict::fail;
  e.detail = "worst |numeric - closed form| over the table";
  rep.add(std::move(e));
}

inline void run_export(const View& sc, const ItoSetup& s, const std::filesystem::path& out_path, long max_paths) {
  const auto b = simulate_paths(s.spec, s.n_steps, s.n_paths, s.seed, s.antithetic);
  const auto f = build_forward_exponential(s.spec, s.gamma0, s.a0, b);
  std::map<std::string, DensityPaths> dens;
  for (const auto& m : read_measures(sc, s.spec)) {
    try {
      dens.emplace(m.label, density_path(b, s.spec.theta_fn(), m.nu));
    } catch (const AlignmentError& e) {
      sc.at("measures").fail(e.what());
    }
  }
  std::ofstream os(out_path);
  if (!os) throw ConfigError(out_path.string() + ": cannot write");
  export_paths_csv(os, b, f, dens, static_cast<std::size_t>(max_paths));
}

inline void write_report(const VerificationReport& rep, const std::filesystem::path& p, const std::string& scenario,
                         std::optional<std::uint64_t> seed) {
  auto j = to_json(rep);
  j["scenario"] = scenario;
  if (seed) j["seed"] = *seed;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw ConfigError(p.string() + ": cannot write report");
  os << j.dump(2) << "\n";
}

}  // namespace detail

/// Parses and runs one scenario. Writes a summary to `out` and the report
/// file if the scenario (or `opt`) names one.
inline Outcome run_scenario(const std::string& path, std::ostream& out, const RunOptions& opt = {}) {
  Outcome res;
  struct ThreadScope {
    unsigned previous = fwdperf::detail::thread_setting();
    explicit ThreadScope(unsigned n) {
      if (n) set_default_threads(n);
    }
    ~ThreadScope() { set_default_threads(previous); }
  } thread_scope(opt.threads);
  try {
    const auto doc = io::load_document(path);
    const View sc(doc);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    io::require_schema_version(sc);
    const std::string kind = sc.at("kind").str();
    if (sc.has("checks") && sc.at("checks").size() == 0) sc.at("checks").fail("no checks requested");
    std::optional<std::uint64_t> seed_used;
    VerificationReport rep("scenario " + std::filesystem::path(path).filename().string());
    if (kind == "tree-verify") {
      sc.allow_keys({"schema_version", "kind", "description", "market", "field", "checks", "report"});
      const View m = sc.at("market");
      m.allow_keys({"tree_file", "tree"});
      EventTree tree;
      if (m.has("tree_file")) {
        if (m.has("tree")) m.fail("give either tree_file or tree");
        tree = io::load_tree(detail::resolve(base, m.at("tree_file").str()).string());
      } else {
        tree = io::read_tree(m.at("tree"));
      }
      const auto p = detail::build_tree_field(sc.at("field"), tree);
      detail::run_tree_checks(sc, tree, p, rep);
    } else if (kind == "ito-verify") {
      sc.allow_keys({"schema_version", "kind", "description", "market", "field", "checks", "seed", "n_paths",
                     "n_steps", "antithetic", "report"});
      const auto s = detail::read_ito_setup(sc, opt);
      seed_used = s.seed;
      if (opt.export_path) {
        detail::run_export(sc, s, *opt.export_path, static_cast<long>(s.n_paths));
        out << "wrote " << *opt.export_path << "\n";
        res.exit_code = 0;
        return res;
      }
      detail::run_ito_checks(sc, s, rep);
    } else if (kind == "conjugate-table") {
      sc.allow_keys({"schema_version", "kind", "description", "field", "checks", "report"});
      detail::run_conjugate_table(sc, rep, out);
    } else if (kind == "export-paths") {
      sc.allow_keys({"schema_version", "kind", "description", "market", "field", "seed", "n_paths", "n_steps",
                     "antithetic", "measures", "out", "max_paths"});
      const auto s = detail::read_ito_setup(sc, opt);
      std::filesystem::path outp;
      if (opt.export_path) outp = *opt.export_path;
      else outp = detail::resolve(base, sc.at("out").str());
      detail::run_export(sc, s, outp, sc.integer_or("max_paths", static_cast<long>(s.n_paths)));
      out << "wrote " << outp.string() << "\n";
      res.exit_code = 0;
      return res;
    } else {
      sc.at("kind").fail("unknown kind \"" + kind + "\"");
    }
    print_summary(out, rep);
    std::optional<std::filesystem::path> rp;
    if (opt.report_path) rp = *opt.report_path;
    else if (sc.has("report")) rp = detail::resolve(base, sc.at("report").str());
    if (rp) detail::write_report(rep, *rp, path, seed_used);
    res.exit_code = rep.passed() ? 0 : 1;
    res.report = std::move(rep);
  } catch (const ConfigError& e) {
    res.diagnostic = e.what();
    res.exit_code = 2;
  } catch (const std::invalid_argument& e) {
    res.diagnostic = std::string("configuration error: ") + e.what();
    res.exit_code = 2;
  } catch (const std::domain_error& e) {
    res.diagnostic = std::string("configuration error: ") + e.what();
    res.exit_code = 2;
  }
  return res;
}

}  // namespace fwdperf::scenario
