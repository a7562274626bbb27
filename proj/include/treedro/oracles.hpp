#pragma once

// Brute-force ground truth, kept deliberately independent of the fast paths:
// exact LPs over path-pair couplings with linearized causality constraints,
// primal ball-constrained DRO and robust-AVaR LPs, and exhaustive policy /
// stopping-rule enumeration. Everything here exists to certify the dynamic
// recursions at desk scale.

#include "treedro/common.hpp"
#include "treedro/control.hpp"
#include "treedro/cost.hpp"
#include "treedro/payoff.hpp"
#include "treedro/stopping.hpp"
#include "treedro/transport.hpp"
#include "treedro/tree.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace treedro {

enum class CouplingMode { Classical, Causal, Bicausal };

// First marginal always fixed to mu. The second is either fixed (nu) or free
// with support restricted to the finite candidate path set.
struct CouplingConstraintSet {
  CouplingMode mode = CouplingMode::Classical;
  PathMeasure mu;
  std::optional<PathMeasure> nu;
  std::vector<Path> candidates;

  bool free_marginal() const { return !nu.has_value(); }
};

// Exact LP over coupling variables pi(p, q) >= 0 with row sums mu, optional
// fixed column sums nu, and linearized causality rows per mode. Bicausal with
// a free second marginal is rejected: the backward constraints then involve
// products of unknowns and the feasible set is not convex.
std::pair<double, Coupling> lp_transport_min_cost(const CouplingConstraintSet& cons,
                                                  const CostSpec& c,
                                                  long var_cap = 10000);

std::pair<double, Coupling> lp_transport_max_gain(const CouplingConstraintSet& cons,
                                                  const CostSpec& c,
                                                  const PathFunctional& f,
                                                  double lambda,
                                                  long var_cap = 10000);

// sup { E_nu[f] : transport distance from mu at most delta } as an exact LP.
// Causal mode optimizes the coupling directly; bicausal mode (whose coupling
// set is non-convex) instead selects convex mixtures from a finite family of
// candidate laws: mu itself, its root subtrees (when supported on the
// candidate paths), and every single-candidate-path point mass, each priced
// by ot_bicausal. Pass delta = infinity to drop the budget row.
double primal_dro_ball(const ScenarioTree& mu, const PathFunctional& f,
                       const CostSpec& c, double delta, CouplingMode mode,
                       const std::vector<Path>& candidates, long var_cap = 10000);

// Robust AVaR primal: variables pi(p, q) and tail weights eta(q) with
// eta(q) <= (1/alpha) * column mass of pi, sum eta = 1, causal rows on pi and
// transport budget delta; maximizes sum eta(q) f(q).
double primal_avar_ball(const ScenarioTree& mu, const PathFunctional& f,
                        const CostSpec& c, double delta, double alpha,
                        const std::vector<Path>& candidates, long var_cap = 10000);

struct EnumeratedPolicies {
  double value = 0.0;
  Policy policy;
  long policies_checked = 0;
};

// Exhaustive policy search evaluating each policy with the same backward
// arithmetic as bellman_solve, so agreement is exact, not approximate.
EnumeratedPolicies enumerate_policies(const ControlProblem& pb,
                                      std::optional<double> lambda,
                                      const std::vector<std::vector<double>>& ygrids,
                                      const CostSpec& c,
                                      const ControlOptions& opts = {},
                                      long cap = 1000000);

struct EnumeratedStopping {
  double value = 0.0;
  std::vector<char> stop;  // per node; leaves always stop
  long rules_checked = 0;
};

// Max over all adapted stopping rules (stop/continue label per interior
// node), sharing the continuation summation order with snell.
EnumeratedStopping enumerate_stopping(const ScenarioTree& t, const StagePayoffs& f,
                                      long cap = 1 << 22);

}  // namespace treedro
