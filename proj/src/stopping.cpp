#include "treedro/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "treedro/lp.hpp"
#include "treedro/oracles.hpp"
#include "treedro/transport.hpp"

namespace treedro {

// ---------------------------------------------------------------------------
// Snell envelope
// ---------------------------------------------------------------------------

StagePayoffs StagePayoffs::terminal_state(int horizon,
                                          std::function<double(double)> g) {
  StagePayoffs sp;
  for (int n = 0; n < horizon; ++n)
    sp.fns.push_back([g](const Path& hist) { return g(hist.back()[0]); });
  return sp;
}

namespace {

std::vector<double> node_payoffs(const ScenarioTree& t, const StagePayoffs& f) {
  if (f.horizon() != t.horizon)
    throw ValidationError("stopping: payoffs cover " +
                          std::to_string(f.horizon()) + " steps, tree has " +
                          std::to_string(t.horizon));
  std::vector<double> out(t.nodes.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i)
    out[i] = f.eval(t.nodes[i].step, t.history(static_cast<int>(i)));
  return out;
}

// nodes by descending step, so every backward sweep sees children first
// regardless of how the node vector happens to be laid out
std::vector<int> backward_order(const ScenarioTree& t) {
  std::vector<int> order;
  order.reserve(t.nodes.size());
  for (int step = t.horizon; step >= 1; --step)
    for (std::size_t i = 0; i < t.nodes.size(); ++i)
      if (t.nodes[i].step == step) order.push_back(static_cast<int>(i));
  return order;
}

}  // namespace

SnellEnvelope snell(const ScenarioTree& t, const StagePayoffs& f) {
  const std::vector<double> pay = node_payoffs(t, f);
  SnellEnvelope env;
  env.F.resize(t.nodes.size());
  env.stop.resize(t.nodes.size());
  for (int i : backward_order(t)) {
    if (t.is_leaf(i)) {
      env.F[i] = pay[i];
      env.stop[i] = 1;
      continue;
    }
    double cont = 0.0;
    for (int b : t.children[i]) cont += t.nodes[b].prob * env.F[b];
    env.F[i] = std::max(pay[i], cont);
    env.stop[i] = pay[i] >= cont ? 1 : 0;
  }
  env.value = 0.0;
  for (int r : t.roots) env.value += t.nodes[r].prob * env.F[r];
  return env;
}

EnumeratedStopping enumerate_stopping(const ScenarioTree& t,
                                      const StagePayoffs& f, long cap) {
  const std::vector<double> pay = node_payoffs(t, f);
  std::vector<int> interior;
  for (std::size_t i = 0; i < t.nodes.size(); ++i)
    if (!t.is_leaf(static_cast<int>(i))) interior.push_back(static_cast<int>(i));
  if (interior.size() >= 63 ||
      (1L << interior.size()) > cap)
    throw CapExceededError("enumerate_stopping: 2^" +
                           std::to_string(interior.size()) +
                           " rules exceed the cap of " + std::to_string(cap));

  EnumeratedStopping out;
  out.value = -std::numeric_limits<double>::infinity();
  std::vector<char> stop(t.nodes.size(), 1);
  std::vector<double> V(t.nodes.size());
  const std::vector<int> order = backward_order(t);
  const long total = 1L << interior.size();
  for (long mask = 0; mask < total; ++mask) {
    for (std::size_t k = 0; k < interior.size(); ++k)
      stop[interior[k]] = (mask >> k) & 1 ? 1 : 0;
    for (int i : order) {
      if (stop[i]) {
        V[i] = pay[i];
      } else {
        double cont = 0.0;
        for (int b : t.children[i]) cont += t.nodes[b].prob * V[b];
        V[i] = cont;
      }
    }
    double value = 0.0;
    for (int r : t.roots) value += t.nodes[r].prob * V[r];
    ++out.rules_checked;
    if (value > out.value) {
      out.value = value;
      out.stop = stop;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// relaxation demo
// ---------------------------------------------------------------------------

namespace {

// one root of value 0 spreading to the given level values, uniformly
ScenarioTree fan_tree(const std::vector<double>& leaves) {
  ScenarioTree t;
  t.horizon = 2;
  t.dims = {1, 1};
  TreeNode root;
  root.id = 0;
  root.parent = -1;
  root.step = 1;
  root.value = {0.0};
  root.prob = 1.0;
  t.nodes.push_back(root);
  for (double v : leaves) {
    TreeNode nd;
    nd.id = static_cast<int>(t.nodes.size());
    nd.parent = 0;
    nd.step = 2;
    nd.value = {v};
    nd.prob = 1.0 / static_cast<double>(leaves.size());
    t.nodes.push_back(nd);
  }
  t.finalize();
  return t;
}

}  // namespace

RelaxationReport relaxation_demo() {
  RelaxationReport rep;
  rep.nu1 = fan_tree({-1.0, 1.0});
  rep.nu2 = fan_tree({-2.0, 2.0});
  rep.mixture = fan_tree({-2.0, -1.0, 1.0, 2.0});

  // coin-augmented mixture: two roots of equal value, different subtrees
  ScenarioTree aug;
  aug.horizon = 2;
  aug.dims = {1, 1};
  for (int branch = 0; branch < 2; ++branch) {
    TreeNode root;
    root.id = static_cast<int>(aug.nodes.size());
    root.parent = -1;
    root.step = 1;
    root.value = {0.0};
    root.prob = 0.5;
    aug.nodes.push_back(root);
    const double spread = branch == 0 ? 1.0 : 2.0;
    for (double v : {-spread, spread}) {
      TreeNode nd;
      nd.id = static_cast<int>(aug.nodes.size());
      nd.parent = root.id;
      nd.step = 2;
      nd.value = {v};
      nd.prob = 0.5;
      aug.nodes.push_back(nd);
    }
  }
  aug.finalize();
  rep.augmented = aug;

  StagePayoffs f;
  f.fns.push_back([](const Path&) { return 1.0; });
  f.fns.push_back([](const Path& hist) { return hist.back()[0] * hist.back()[0] - 1.0; });

  rep.j_nu1 = snell(rep.nu1, f).value;
  rep.j_nu2 = snell(rep.nu2, f).value;
  rep.j_plain_mixture = snell(rep.mixture, f).value;
  rep.j_augmented = snell(rep.augmented, f).value;
  return rep;
}

// ---------------------------------------------------------------------------
// candidate family and cost table
// ---------------------------------------------------------------------------

namespace {

bool equivalent_to_any(const ScenarioTree& t,
                       const std::vector<NestedDistribution>& seen) {
  const NestedDistribution nd = canonicalize(t);
  for (const auto& other : seen)
    if (nested_equal(nd, other)) return true;
  return false;
}

ScenarioTree shift_nodes(const ScenarioTree& base, const std::vector<int>& which,
                         double offset) {
  ScenarioTree t = base;
  for (int i : which)
    for (double& coord : t.nodes[i].value) coord += offset;
  t.finalize();
  return t;
}

}  // namespace

CandidateFamily make_candidates(const ScenarioTree& mu, double delta,
                                const std::vector<ScenarioTree>& extra, int cap) {
  if (delta < 0.0)
    throw ValidationError("make_candidates: delta must be >= 0");
  CandidateFamily fam;
  std::vector<NestedDistribution> seen;
  auto push = [&](const ScenarioTree& t, const std::string& label,
                  bool required) {
    if (static_cast<int>(fam.trees.size()) >= cap) {
      if (required)
        throw CapExceededError(
            "make_candidates: required candidates alone exceed the cap of " +
            std::to_string(cap));
      return false;
    }
    if (!required && equivalent_to_any(t, seen)) return true;
    seen.push_back(canonicalize(t));
    fam.trees.push_back(t);
    fam.labels.push_back(label);
    return true;
  };

  std::vector<ScenarioTree> bases;
  for (std::size_t r = 0; r < mu.roots.size(); ++r) {
    bases.push_back(mu.subtree(mu.roots[r]));
    push(bases.back(), "mu-root-" + std::to_string(r), true);
  }
  for (std::size_t i = 0; i < extra.size(); ++i) {
    if (extra[i].horizon != mu.horizon || extra[i].dims != mu.dims)
      throw ValidationError(
          "make_candidates: user candidate " + std::to_string(i) +
          " does not match the horizon/dims of mu");
    push(extra[i], "user-" + std::to_string(i), true);
  }

  if (delta > 0.0) {
    const double eps = std::sqrt(delta) / mu.horizon;
    for (std::size_t r = 0; r < bases.size(); ++r) {
      const ScenarioTree& base = bases[r];
      std::vector<int> all(base.nodes.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      for (double off : {eps, -eps, 2.0 * eps, -2.0 * eps})
        push(shift_nodes(base, all, off),
             "root-" + std::to_string(r) + "-shift-" + format_value(off), false);
      for (std::size_t i = 0; i < base.nodes.size(); ++i)
        for (double off : {eps, -eps, 2.0 * eps, -2.0 * eps})
          push(shift_nodes(base, {static_cast<int>(i)}, off),
               "root-" + std::to_string(r) + "-node-" + std::to_string(i) +
                   "-shift-" + format_value(off),
               false);
    }
  }
  return fam;
}

BicausalCostTable bicausal_cost_table(const ScenarioTree& mu,
                                      const CandidateFamily& cands,
                                      const CostSpec& c) {
  if (cands.trees.empty())
    throw ValidationError("stopping: empty candidate family");
  BicausalCostTable tab;
  tab.C.resize(mu.roots.size());
  std::vector<PathMeasure> cand_pm;
  cand_pm.reserve(cands.trees.size());
  for (const auto& t : cands.trees) cand_pm.push_back(to_path_measure(t));
  for (std::size_t r = 0; r < mu.roots.size(); ++r) {
    const PathMeasure sub = to_path_measure(mu.subtree(mu.roots[r]));
    tab.C[r].resize(cands.trees.size());
    for (std::size_t k = 0; k < cands.trees.size(); ++k)
      tab.C[r][k] = ot_bicausal(sub, cand_pm[k], c).cost;
  }
  return tab;
}

// ---------------------------------------------------------------------------
// dual and restricted primal
// ---------------------------------------------------------------------------

StoppingDualReport robust_stopping_dual(const ScenarioTree& mu,
                                        const StagePayoffs& f,
                                        const CandidateFamily& cands,
                                        const CostSpec& c, const Penalty& L,
                                        double lambda_cap) {
  StoppingDualReport rep;
  rep.costs = bicausal_cost_table(mu, cands, c);
  rep.snell_values.resize(cands.trees.size());
  for (std::size_t k = 0; k < cands.trees.size(); ++k)
    rep.snell_values[k] = snell(cands.trees[k], f).value;

  const std::vector<int>& roots = mu.roots;
  auto dual = [&](double lam) {
    double total = 0.0;
    for (std::size_t r = 0; r < roots.size(); ++r) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < cands.trees.size(); ++k)
        best = std::max(best, rep.snell_values[k] - lam * rep.costs.C[r][k]);
      total += mu.nodes[roots[r]].prob * best;
    }
    return total;
  };

  double cap = lambda_cap;
  const ExtReal dom = L.lambda_domain_max();
  const bool domain_capped = dom.finite() && dom.v < cap;
  if (domain_capped) cap = dom.v;
  auto h = [&](double lam) -> ExtReal {
    const ExtReal conj = conjugate(L, lam);
    if (conj.inf) return ExtReal::infinity();
    return ExtReal(conj.v + dual(lam));
  };
  const MinimizeResult res = minimize_convex(h, 0.0, cap);
  if (!res.found_finite)
    throw UnboundedError("stopping dual: objective infinite at every probe");
  if (res.on_cap && !domain_capped)
    throw UnboundedError(
        "stopping dual: objective still decreasing at the lambda cap");
  rep.value = res.value;
  rep.lambda_star = res.x;
  rep.on_cap = res.on_cap;
  rep.probes.reserve(res.probes.size());
  for (const auto& [lam, hv] : res.probes)
    rep.probes.emplace_back(lam, hv - conjugate(L, lam).v);
  rep.argmax_candidate.resize(roots.size());
  for (std::size_t r = 0; r < roots.size(); ++r) {
    double best = -std::numeric_limits<double>::infinity();
    int bk = 0;
    for (std::size_t k = 0; k < cands.trees.size(); ++k) {
      const double v = rep.snell_values[k] - rep.lambda_star * rep.costs.C[r][k];
      if (v > best) {
        best = v;
        bk = static_cast<int>(k);
      }
    }
    rep.argmax_candidate[r] = bk;
  }
  return rep;
}

double stopping_restricted_primal(const ScenarioTree& mu, const StagePayoffs& f,
                                  const CandidateFamily& cands, const CostSpec& c,
                                  double delta) {
  if (delta < 0.0)
    throw ValidationError("stopping primal: delta must be >= 0");
  const BicausalCostTable tab = bicausal_cost_table(mu, cands, c);
  std::vector<double> snell_values(cands.trees.size());
  for (std::size_t k = 0; k < cands.trees.size(); ++k)
    snell_values[k] = snell(cands.trees[k], f).value;

  const std::size_t R = mu.roots.size(), K = cands.trees.size();
  LpProblem lp;
  lp.num_vars = static_cast<int>(R * K);
  lp.objective.resize(R * K);
  for (std::size_t r = 0; r < R; ++r) {
    const double pr = mu.nodes[mu.roots[r]].prob;
    for (std::size_t k = 0; k < K; ++k)
      lp.objective[r * K + k] = pr * snell_values[k];
  }
  for (std::size_t r = 0; r < R; ++r) {
    std::vector<double> row(R * K, 0.0);
    for (std::size_t k = 0; k < K; ++k) row[r * K + k] = 1.0;
    lp.add_row(row, 'E', 1.0);
  }
  {
    std::vector<double> row(R * K, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
      const double pr = mu.nodes[mu.roots[r]].prob;
      for (std::size_t k = 0; k < K; ++k) row[r * K + k] = pr * tab.C[r][k];
    }
    lp.add_row(row, 'L', delta);
  }
  const LpSolution sol = solve_lp_max(lp);
  if (!sol.feasible)
    throw ValidationError("stopping primal: selection LP infeasible");
  return sol.value;
}

std::string stopping_report_to_json(const StoppingDualReport& rep,
                                    const CandidateFamily& cands) {
  nlohmann::json j;
  j["value"] = rep.value;
  j["lambda_star"] = rep.lambda_star;
  j["on_cap"] = rep.on_cap;
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& [lam, v] : rep.probes) probes.push_back({lam, v});
  j["probes"] = probes;
  j["snell_values"] = rep.snell_values;
  j["candidate_labels"] = cands.labels;
  nlohmann::json roots = nlohmann::json::array();
  for (std::size_t r = 0; r < rep.argmax_candidate.size(); ++r) {
    nlohmann::json e;
    e["root"] = r;
    e["argmax_candidate"] = rep.argmax_candidate[r];
    e["label"] = cands.labels.at(rep.argmax_candidate[r]);
    roots.push_back(e);
  }
  j["argmax"] = roots;
  nlohmann::json costs = nlohmann::json::array();
  for (const auto& row : rep.costs.C) costs.push_back(row);
  j["bicausal_costs"] = costs;
  return j.dump(2);
}

}  // namespace treedro
