#pragma once

// Optimal stopping on filtered trees: Snell envelopes, the relaxation demo
// (mixing filtered laws can strictly raise the stopping value), and the
// distributionally robust stopping dual over a finite candidate family of
// filtered laws, priced with the bicausal transport distance.

#include "treedro/common.hpp"
#include "treedro/cost.hpp"
#include "treedro/minimize.hpp"
#include "treedro/penalty.hpp"
#include "treedro/tree.hpp"

#include <functional>
#include <string>
#include <vector>

namespace treedro {

// f_n evaluated on value histories x_{1:n}; fns[n-1] is the step-n payoff.
struct StagePayoffs {
  std::vector<std::function<double(const Path&)>> fns;

  int horizon() const { return static_cast<int>(fns.size()); }
  double eval(int n, const Path& hist) const { return fns[n - 1](hist); }

  // f_n(x_{1:n}) = g(x_n) at every step
  static StagePayoffs terminal_state(int horizon, std::function<double(double)> g);
};

struct SnellEnvelope {
  std::vector<double> F;   // per node index
  std::vector<char> stop;  // 1 = stop (ties stop), 0 = continue
  double value = 0.0;      // sum over roots of prob * F
};

SnellEnvelope snell(const ScenarioTree& t, const StagePayoffs& f);

struct RelaxationReport {
  double j_nu1 = 0.0;
  double j_nu2 = 0.0;
  double j_plain_mixture = 0.0;
  double j_augmented = 0.0;
  ScenarioTree nu1, nu2, mixture, augmented;
};

// Two-step example: nu1 spreads to {-1, +1}, nu2 to {-2, +2}, payoffs
// f_1 = 1 and f_2 = x^2 - 1. Stopping values are 1 and 3; merging the laws
// into one plain tree yields 1.5, while the coin-augmented filtered mixture
// (two equal-valued roots with different subtrees) restores (1+3)/2 = 2.
RelaxationReport relaxation_demo();

struct CandidateFamily {
  std::vector<ScenarioTree> trees;
  std::vector<std::string> labels;
};

// Default family around mu: its root subtrees unshifted, whole-subtree value
// shifts by {+-eps, +-2 eps} with eps = sqrt(delta)/horizon, then single-node
// shifts, deduplicated up to information equivalence and capped.
CandidateFamily make_candidates(const ScenarioTree& mu, double delta,
                                const std::vector<ScenarioTree>& extra = {},
                                int cap = 200);

// C[r][k] = bicausal transport cost between mu's r-th root subtree and
// candidate k (cost on full paths, first step included).
struct BicausalCostTable {
  std::vector<std::vector<double>> C;
};

BicausalCostTable bicausal_cost_table(const ScenarioTree& mu,
                                      const CandidateFamily& cands,
                                      const CostSpec& c);

struct StoppingDualReport {
  double value = 0.0;
  double lambda_star = 0.0;
  bool on_cap = false;
  std::vector<std::pair<double, double>> probes;  // (lambda, objective)
  std::vector<int> argmax_candidate;              // per root of mu, at lambda_star
  std::vector<double> snell_values;               // per candidate
  BicausalCostTable costs;
};

// inf_{lambda >= 0} { L*(lambda) + sum_r P(r) max_k { snell(w_k) - lambda C[r][k] } },
// exact for the candidate-restricted relaxed problem.
StoppingDualReport robust_stopping_dual(const ScenarioTree& mu, const StagePayoffs& f,
                                        const CandidateFamily& cands, const CostSpec& c,
                                        const Penalty& L, double lambda_cap = 1e8);

// Matching primal: selection weights theta(r, .) on candidates per root,
// maximizing the mixed Snell value under the budget
// sum_{r,k} P(r) theta(r,k) C[r][k] <= delta.
double stopping_restricted_primal(const ScenarioTree& mu, const StagePayoffs& f,
                                  const CandidateFamily& cands, const CostSpec& c,
                                  double delta);

std::string stopping_report_to_json(const StoppingDualReport& rep,
                                    const CandidateFamily& cands);

}  // namespace treedro
