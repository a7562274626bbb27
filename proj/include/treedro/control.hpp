#pragma once

// Distributionally robust stochastic control on finite state/action/noise
// grids: robustified stage costs, backward Bellman recursion, outer lambda
// search, and the closed-form scalar LQ solver.

#include "treedro/common.hpp"
#include "treedro/cost.hpp"
#include "treedro/minimize.hpp"
#include "treedro/penalty.hpp"
#include "treedro/tree.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace treedro {

// Observation cost f_n(x): the part of the stage cost the adversary may
// shift. Quadratic keeps a closed-form unboundedness test for the robust sup.
struct ObsCost {
  enum class Kind { Quadratic, Custom } kind = Kind::Quadratic;
  std::function<double(double)> fn;

  double eval(double x) const {
    return kind == Kind::Quadratic ? x * x : fn(x);
  }
  static ObsCost quadratic() { return {}; }
  static ObsCost custom(std::function<double(double)> f) {
    ObsCost o;
    o.kind = Kind::Custom;
    o.fn = std::move(f);
    return o;
  }
};

// next state = A x + B u + w, or a custom map (x, u, w) -> next
struct Dynamics {
  bool affine = true;
  double A = 1.0;
  double B = 0.0;
  std::function<double(double, double, double)> fn;

  double eval(double x, double u, double w) const {
    return affine ? A * x + B * u + w : fn(x, u, w);
  }
};

// Markov control problem with scalar states. Steps are 1-based: actions,
// noise, dynamics and stage costs live at steps 1..N-1, observation costs at
// steps 1..N. Off-grid next states are snapped to the nearest grid point.
struct ControlProblem {
  int horizon = 0;
  std::vector<std::vector<double>> state_grids;           // size N
  std::vector<std::vector<double>> actions;               // size N-1
  std::vector<std::vector<std::pair<double, double>>> noise;  // (w, prob), size N-1
  std::vector<Dynamics> dynamics;                         // size N-1
  std::vector<std::function<double(double, double)>> stage_cost;  // l_n(x,u), size N-1
  std::vector<ObsCost> obs_cost;                          // f_n(x), size N
  std::vector<std::pair<double, double>> initial;         // (state, prob)

  void validate() const;
};

ControlProblem control_from_json(const std::string& json_text);

// action_index[n-1][xi] = chosen action index at step n in state grid point xi
struct Policy {
  std::vector<std::vector<int>> action_index;
};

std::string policy_to_json(const ControlProblem& pb, const Policy& policy);

struct ControlOptions {
  bool refine = true;      // golden-section polish of the inner sup over y
  int expand_rounds = 8;   // boundary-expansion rounds before declaring unbounded
  double lambda_cap = 1e8;
};

// f-hat(x) = sup_y { f(y) - lambda * c(x, y) } tabulated over xgrid. With
// refine off the sup runs over ygrid alone (exactly the grid-restricted
// problem); with it on, doubling probes past the grid edges plus a golden
// polish chase maxima between and beyond the grid points, and a sup that is
// still improving after expand_rounds doublings throws UnboundedError, as
// does the quadratic-vs-squared-distance pair at lambda <= 1 (closed-form
// divergence of the continuum sup).
std::vector<double> robust_stage_cost(const ObsCost& f, const GroundCost& c,
                                      double lambda,
                                      const std::vector<double>& xgrid,
                                      const std::vector<double>& ygrid,
                                      bool refine = true, int expand_rounds = 8);

struct BellmanResult {
  double value = 0.0;
  Policy policy;
  std::vector<std::vector<double>> J;  // J[n-1][xi]
  double max_snap = 0.0;               // largest dynamics snap distance seen
};

// Backward dynamic program. With lambda set, observation costs are replaced
// by their robust versions over ygrids; without it the classical problem is
// solved. Ties in the action minimum go to the smallest action index.
BellmanResult bellman_solve(const ControlProblem& pb, std::optional<double> lambda,
                            const std::vector<std::vector<double>>& ygrids,
                            const CostSpec& c, const ControlOptions& opts = {});

struct ControlSolveReport {
  MinimizeResult outer;  // over lambda
  double value = 0.0;
  double lambda_star = 0.0;
  Policy policy;
  double max_snap = 0.0;
  bool on_cap = false;
};

// V = inf_{lambda >= 0} { L*(lambda) + J(lambda) } with the greedy policy at
// the optimal lambda.
ControlSolveReport solve_robust_control(const ControlProblem& pb, const CostSpec& c,
                                        const Penalty& L,
                                        const std::vector<std::vector<double>>& ygrids,
                                        const ControlOptions& opts = {});

// Value of a fixed policy, computed with the same backward arithmetic as
// bellman_solve; at the solver's own greedy policy the two agree bitwise.
double policy_value(const ControlProblem& pb, const Policy& policy,
                    std::optional<double> lambda,
                    const std::vector<std::vector<double>>& ygrids,
                    const CostSpec& c, const ControlOptions& opts = {});

// Law of the state process under a fixed policy, as a scenario tree (children
// with equal states merged, so the tree stays plain).
ScenarioTree controlled_law(const ControlProblem& pb, const Policy& policy);

// Expected accumulated control cost sum_n l_n(x_n, u_n) under the policy.
double expected_control_cost(const ControlProblem& pb, const Policy& policy);

// --- scalar linear-quadratic problem ----------------------------------------

struct LQSpec {
  double A = 1.0;
  double B = 1.0;
  int N = 2;
  double x1 = 0.0;
  double vw = 0.0;   // noise variance per step
  double delta = 0.0;
  double lambda_cap = 1e9;
};

struct RiccatiCoeffs {
  std::vector<double> p;  // p[n-1], value V_n(x) = p_n x^2 + q_n
  std::vector<double> q;
};

struct LqResult {
  double value = 0.0;
  double lambda_star = 0.0;
  bool on_cap = false;
  RiccatiCoeffs riccati;          // at lambda_star
  double classical_value = 0.0;   // same Riccati with kappa = 1
  std::vector<std::pair<double, double>> probes;
};

// V(lambda) from the difference Riccati recursion with kappa = lambda/(lambda-1),
// minimized over lambda in (1, cap] as delta*lambda + V(lambda).
LqResult lq_solve(const LQSpec& spec);

// Riccati evaluation at a fixed kappa (exposed for cross-checks).
RiccatiCoeffs lq_riccati(const LQSpec& spec, double kappa);

}  // namespace treedro
