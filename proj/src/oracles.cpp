#include "treedro/oracles.hpp"

#include "treedro/lp.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace treedro {

namespace {

constexpr double kGroupTol = 1e-9;

// pi(p, cyl(b)) mu(p') = pi(p', cyl(b)) mu(p) for consecutive path pairs in
// each first-n-values group of the first marginal and each length-n prefix
// class b of the second support; chaining consecutive pairs covers all pairs.
void add_forward_rows(LpProblem& lp, const std::vector<Path>& ppaths,
                      const std::vector<double>& pweights,
                      const std::vector<Path>& qpaths, int horizon, int Q) {
  const int P = static_cast<int>(ppaths.size());
  for (int n = 1; n <= horizon - 1; ++n) {
    int ng = 0, nc = 0;
    const auto gid = group_paths_by_prefix(ppaths, n, kGroupTol, &ng);
    const auto cid = group_paths_by_prefix(qpaths, n, kGroupTol, &nc);
    std::vector<std::vector<int>> members(ng), classes(nc);
    for (int p = 0; p < P; ++p) members[gid[p]].push_back(p);
    for (int q = 0; q < Q; ++q) classes[cid[q]].push_back(q);
    for (const auto& g : members) {
      for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const int pa = g[i], pb = g[i + 1];
        for (const auto& cls : classes) {
          std::vector<double> a(lp.num_vars, 0.0);
          for (int q : cls) {
            a[static_cast<std::size_t>(pa) * Q + q] += pweights[pb];
            a[static_cast<std::size_t>(pb) * Q + q] -= pweights[pa];
          }
          lp.add_row(a, 'E', 0.0);
        }
      }
    }
  }
}

// the mirror identities with the roles of the marginals swapped
void add_backward_rows(LpProblem& lp, const std::vector<Path>& ppaths,
                       const std::vector<Path>& qpaths,
                       const std::vector<double>& qweights, int horizon, int Q) {
  const int P = static_cast<int>(ppaths.size());
  for (int n = 1; n <= horizon - 1; ++n) {
    int ng = 0, nc = 0;
    const auto gid = group_paths_by_prefix(qpaths, n, kGroupTol, &ng);
    const auto cid = group_paths_by_prefix(ppaths, n, kGroupTol, &nc);
    std::vector<std::vector<int>> members(ng), classes(nc);
    for (int q = 0; q < Q; ++q) members[gid[q]].push_back(q);
    for (int p = 0; p < P; ++p) classes[cid[p]].push_back(p);
    for (const auto& g : members) {
      for (std::size_t j = 0; j + 1 < g.size(); ++j) {
        const int qa = g[j], qb = g[j + 1];
        for (const auto& cls : classes) {
          std::vector<double> a(lp.num_vars, 0.0);
          for (int p : cls) {
            a[static_cast<std::size_t>(p) * Q + qa] += qweights[qb];
            a[static_cast<std::size_t>(p) * Q + qb] -= qweights[qa];
          }
          lp.add_row(a, 'E', 0.0);
        }
      }
    }
  }
}

struct BuiltLp {
  LpProblem lp;
  int P = 0;
  int Q = 0;
  std::vector<Path> qpaths;
  std::vector<double> cost;  // c(p, q), row-major
};

BuiltLp build_coupling_lp(const CouplingConstraintSet& cons, const CostSpec& c,
                          long var_cap, int extra_vars) {
  cons.mu.validate();
  if (cons.nu) {
    cons.nu->validate();
    if (cons.nu->horizon != cons.mu.horizon)
      throw ValidationError("coupling LP: marginal horizons differ");
  } else if (cons.candidates.empty()) {
    throw ValidationError("coupling LP: empty candidate path set");
  }
  if (cons.mode == CouplingMode::Bicausal && cons.free_marginal())
    throw ValidationError(
        "bicausal coupling set with a free second marginal is not convex; "
        "no LP formulation exists (fix the marginal or use causal mode)");

  BuiltLp b;
  b.qpaths = cons.nu ? cons.nu->paths : cons.candidates;
  const auto& mu = cons.mu;
  b.P = static_cast<int>(mu.paths.size());
  b.Q = static_cast<int>(b.qpaths.size());
  for (const Path& pth : b.qpaths) {
    if (static_cast<int>(pth.size()) != mu.horizon)
      throw ValidationError("coupling LP: candidate path has wrong horizon");
    for (int s = 0; s < mu.horizon; ++s)
      if (static_cast<int>(pth[s].size()) != mu.dims[s])
        throw ValidationError("coupling LP: candidate path dims mismatch");
  }
  if (static_cast<long>(b.P) * b.Q > var_cap)
    throw CapExceededError("coupling LP: " + std::to_string(b.P) + "x" +
                           std::to_string(b.Q) + " variables exceed cap " +
                           std::to_string(var_cap));

  b.lp.num_vars = b.P * b.Q + extra_vars;
  b.lp.objective.assign(b.lp.num_vars, 0.0);

  for (int p = 0; p < b.P; ++p) {
    std::vector<double> a(b.lp.num_vars, 0.0);
    for (int q = 0; q < b.Q; ++q) a[static_cast<std::size_t>(p) * b.Q + q] = 1.0;
    b.lp.add_row(a, 'E', mu.weights[p]);
  }
  if (cons.nu) {
    for (int q = 0; q < b.Q; ++q) {
      std::vector<double> a(b.lp.num_vars, 0.0);
      for (int p = 0; p < b.P; ++p) a[static_cast<std::size_t>(p) * b.Q + q] = 1.0;
      b.lp.add_row(a, 'E', cons.nu->weights[q]);
    }
  }
  if (cons.mode == CouplingMode::Causal || cons.mode == CouplingMode::Bicausal)
    add_forward_rows(b.lp, mu.paths, mu.weights, b.qpaths, mu.horizon, b.Q);
  if (cons.mode == CouplingMode::Bicausal)
    add_backward_rows(b.lp, mu.paths, b.qpaths, cons.nu->weights, mu.horizon, b.Q);

  b.cost.resize(static_cast<std::size_t>(b.P) * b.Q);
  for (int p = 0; p < b.P; ++p)
    for (int q = 0; q < b.Q; ++q)
      b.cost[static_cast<std::size_t>(p) * b.Q + q] =
          c.eval(mu.paths[p], b.qpaths[q]);
  return b;
}

Coupling extract_coupling(const CouplingConstraintSet& cons, const BuiltLp& b,
                          const std::vector<double>& x) {
  Coupling out;
  out.mu = cons.mu;
  if (cons.nu) {
    out.nu = *cons.nu;
    for (int p = 0; p < b.P; ++p)
      for (int q = 0; q < b.Q; ++q) {
        const double m = x[static_cast<std::size_t>(p) * b.Q + q];
        if (m > 1e-12) out.entries.emplace_back(p, q, m);
      }
  } else {
    // induced second marginal: keep candidates that received mass
    std::vector<double> col(b.Q, 0.0);
    for (int p = 0; p < b.P; ++p)
      for (int q = 0; q < b.Q; ++q)
        col[q] += x[static_cast<std::size_t>(p) * b.Q + q];
    std::vector<int> remap(b.Q, -1);
    out.nu.horizon = cons.mu.horizon;
    out.nu.dims = cons.mu.dims;
    for (int q = 0; q < b.Q; ++q) {
      if (col[q] > 1e-12) {
        remap[q] = static_cast<int>(out.nu.paths.size());
        out.nu.paths.push_back(b.qpaths[q]);
        out.nu.weights.push_back(col[q]);
      }
    }
    for (int p = 0; p < b.P; ++p)
      for (int q = 0; q < b.Q; ++q) {
        const double m = x[static_cast<std::size_t>(p) * b.Q + q];
        if (m > 1e-12) out.entries.emplace_back(p, remap[q], m);
      }
  }
  double cv = 0.0;
  for (int p = 0; p < b.P; ++p)
    for (int q = 0; q < b.Q; ++q)
      cv += x[static_cast<std::size_t>(p) * b.Q + q] *
            b.cost[static_cast<std::size_t>(p) * b.Q + q];
  out.cost = cv;
  return out;
}

PathMeasure single_path_measure(const PathMeasure& like, const Path& p) {
  PathMeasure pm;
  pm.horizon = like.horizon;
  pm.dims = like.dims;
  pm.paths = {p};
  pm.weights = {1.0};
  return pm;
}

bool vec_within(const Vec& a, const Vec& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::fabs(a[i] - b[i]) > tol) return false;
  return true;
}

bool path_within(const Path& a, const Path& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t s = 0; s < a.size(); ++s)
    if (!vec_within(a[s], b[s], tol)) return false;
  return true;
}

bool supported_on(const PathMeasure& m, const std::vector<Path>& candidates) {
  for (const Path& p : m.paths) {
    bool found = false;
    for (const Path& c : candidates)
      if (path_within(p, c, kGroupTol)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

}  // namespace

std::pair<double, Coupling> lp_transport_min_cost(const CouplingConstraintSet& cons,
                                                  const CostSpec& c, long var_cap) {
  BuiltLp b = build_coupling_lp(cons, c, var_cap, 0);
  for (int v = 0; v < b.P * b.Q; ++v) b.lp.objective[v] = -b.cost[v];
  auto sol = solve_lp_max(b.lp);
  if (!sol.feasible)
    throw ValidationError("coupling LP infeasible; this signals a bug");
  return {-sol.value, extract_coupling(cons, b, sol.x)};
}

std::pair<double, Coupling> lp_transport_max_gain(const CouplingConstraintSet& cons,
                                                  const CostSpec& c,
                                                  const PathFunctional& f,
                                                  double lambda, long var_cap) {
  if (lambda < 0.0) throw ValidationError("coupling LP: lambda must be >= 0");
  BuiltLp b = build_coupling_lp(cons, c, var_cap, 0);
  std::vector<double> fq(b.Q);
  for (int q = 0; q < b.Q; ++q) fq[q] = f.eval(b.qpaths[q]);
  for (int p = 0; p < b.P; ++p)
    for (int q = 0; q < b.Q; ++q)
      b.lp.objective[static_cast<std::size_t>(p) * b.Q + q] =
          fq[q] - lambda * b.cost[static_cast<std::size_t>(p) * b.Q + q];
  auto sol = solve_lp_max(b.lp);
  if (!sol.feasible)
    throw ValidationError("coupling LP infeasible; this signals a bug");
  return {sol.value, extract_coupling(cons, b, sol.x)};
}

double primal_dro_ball(const ScenarioTree& mu, const PathFunctional& f,
                       const CostSpec& c, double delta, CouplingMode mode,
                       const std::vector<Path>& candidates, long var_cap) {
  if (delta < 0.0) throw ValidationError("primal ball: negative radius");
  PathMeasure pm = to_path_measure(mu);

  if (mode == CouplingMode::Bicausal) {
    // mixtures over a finite family of laws, each priced by its bicausal
    // distance from mu; exact for the family, a lower bound in general
    std::vector<double> vals, costs;
    auto add_law = [&](const PathMeasure& law) {
      double v = 0.0;
      for (std::size_t i = 0; i < law.paths.size(); ++i)
        v += law.weights[i] * f.eval(law.paths[i]);
      vals.push_back(v);
      costs.push_back(ot_bicausal(pm, law, c).cost);
    };
    if (supported_on(pm, candidates)) add_law(pm);
    if (mu.roots.size() > 1) {
      for (int r : mu.roots) {
        PathMeasure sub = to_path_measure(mu.subtree(r));
        if (supported_on(sub, candidates)) add_law(sub);
      }
    }
    for (const Path& y : candidates) add_law(single_path_measure(pm, y));

    const int K = static_cast<int>(vals.size());
    if (K > var_cap)
      throw CapExceededError("primal ball: candidate family exceeds cap");
    LpProblem lp;
    lp.num_vars = K;
    lp.objective = vals;
    lp.add_row(std::vector<double>(K, 1.0), 'E', 1.0);
    if (std::isfinite(delta)) lp.add_row(costs, 'L', delta);
    auto sol = solve_lp_max(lp);
    if (!sol.feasible)
      throw ValidationError(
          "primal ball: no candidate law within the budget; candidates "
          "should cover the support of mu");
    return sol.value;
  }

  CouplingConstraintSet cons;
  cons.mode = mode;
  cons.mu = pm;
  cons.candidates = candidates;
  BuiltLp b = build_coupling_lp(cons, c, var_cap, 0);
  std::vector<double> fq(b.Q);
  for (int q = 0; q < b.Q; ++q) fq[q] = f.eval(b.qpaths[q]);
  for (int p = 0; p < b.P; ++p)
    for (int q = 0; q < b.Q; ++q)
      b.lp.objective[static_cast<std::size_t>(p) * b.Q + q] = fq[q];
  if (std::isfinite(delta)) b.lp.add_row(b.cost, 'L', delta);
  auto sol = solve_lp_max(b.lp);
  if (!sol.feasible)
    throw ValidationError(
        "primal ball: infeasible at this radius; candidates should cover "
        "the support of mu");
  return sol.value;
}

double primal_avar_ball(const ScenarioTree& mu, const PathFunctional& f,
                        const CostSpec& c, double delta, double alpha,
                        const std::vector<Path>& candidates, long var_cap) {
  if (delta < 0.0) throw ValidationError("primal AVaR: negative radius");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ValidationError("primal AVaR: alpha must lie in (0, 1]");
  PathMeasure pm = to_path_measure(mu);
  CouplingConstraintSet cons;
  cons.mode = CouplingMode::Causal;
  cons.mu = pm;
  cons.candidates = candidates;
  BuiltLp b = build_coupling_lp(cons, c, var_cap, /*extra_vars=*/
                                static_cast<int>(candidates.size()));
  const int PQ = b.P * b.Q;
  if (std::isfinite(delta)) {
    std::vector<double> a(b.lp.num_vars, 0.0);
    for (int v = 0; v < PQ; ++v) a[v] = b.cost[v];
    b.lp.add_row(a, 'L', delta);
  }
  // eta(q) <= (1/alpha) * column mass of pi at q
  for (int q = 0; q < b.Q; ++q) {
    std::vector<double> a(b.lp.num_vars, 0.0);
    a[PQ + q] = 1.0;
    for (int p = 0; p < b.P; ++p)
      a[static_cast<std::size_t>(p) * b.Q + q] = -1.0 / alpha;
    b.lp.add_row(a, 'L', 0.0);
  }
  {
    std::vector<double> a(b.lp.num_vars, 0.0);
    for (int q = 0; q < b.Q; ++q) a[PQ + q] = 1.0;
    b.lp.add_row(a, 'E', 1.0);
  }
  for (int q = 0; q < b.Q; ++q) b.lp.objective[PQ + q] = f.eval(b.qpaths[q]);
  auto sol = solve_lp_max(b.lp);
  if (!sol.feasible)
    throw ValidationError(
        "primal AVaR: infeasible at this radius; candidates should cover "
        "the support of mu");
  return sol.value;
}

}  // namespace treedro
