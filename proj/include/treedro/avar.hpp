#pragma once

// Average value-at-risk, standard and distributionally robust, plus the
// two-period geometric Brownian motion option study.

#include <string>
#include <vector>

#include "treedro/cost.hpp"
#include "treedro/dro.hpp"
#include "treedro/payoff.hpp"
#include "treedro/penalty.hpp"
#include "treedro/tree.hpp"

namespace treedro {

// ---------------------------------------------------------------------------
// standard AVaR
// ---------------------------------------------------------------------------

// AVaR_alpha(f) = inf_{gamma >= 0} { gamma + alpha^{-1} E[(f - gamma)^+] },
// computed exactly as the mean of the worst alpha-tail of the finite law of
// f.  Requires 0 < alpha < 1 and f >= 0 on the support.
double avar_standard(const PathMeasure& mu, const PathFunctional& f,
                     double alpha);

// ---------------------------------------------------------------------------
// robust AVaR
// ---------------------------------------------------------------------------

struct AvarParams {
  double alpha = 0.95;
  Penalty penalty = Penalty::ball(0.0);
  CandidateGrids grids;

  void validate() const;  // alpha in (0,1)
};

// Evaluator for the dual objective
//   h(lambda, gamma) = L*(lambda) + gamma
//                      + E-part[ alpha^{-1} (f - gamma)^+ - lambda c ]
// where the E-part is the nested (causal) or flat (classical) sup over grid
// paths.  Since (f - gamma)^+ = max(f - gamma, 0), the innermost max over the
// last grid step splits into two tables that do not depend on gamma:
//   B = max_{y_N} { alpha^{-1} f - lambda c },  V = max_{y_N} { -lambda c },
// after which every gamma costs only one cheap sweep over (leaf, prefix)
// pairs.  prepare(lambda) rebuilds the tables; dual_epart(gamma) evaluates.
class AvarDualEvaluator {
 public:
  AvarDualEvaluator(const ScenarioTree& mu, const PathFunctional& f,
                    const CostSpec& c, double alpha,
                    const CandidateGrids& grids, bool classical,
                    long work_cap = 12500000);

  void prepare(double lambda);

  // E-part only; the dual objective is conjugate(L,lambda) + gamma + this.
  double dual_epart(double gamma) const;

  // Upper bound for the inner minimizer at the prepared lambda: the value at
  // gamma = 0 minus the gamma -> infinity limit (both from the tables).
  double gamma_hi() const;

  double min_grid_payoff() const;  // min of f over grid paths

 private:
  double sweep(double gamma, bool clamp_only) const;

  const ScenarioTree& mu_;
  double alpha_;
  bool classical_;
  int horizon_ = 0;
  long n_prefix_ = 1;  // product of grid sizes over steps 1..N-1
  long n_last_ = 1;    // grid size at step N
  std::vector<int> grid_size_;        // per step
  std::vector<int> leaf_ids_;        // nodes at the last step, tree order
  std::vector<double> leaf_prob_;    // joint probabilities
  std::vector<double> payoff_;       // f over grid paths, prefix-major
  std::vector<double> cost_;         // c(x_leaf, y_path), leaf-major
  double min_payoff_ = 0.0;
  std::vector<double> tab_b_, tab_v_;  // (leaf, prefix) tables, leaf-major
};

// Minimizes the jointly convex dual objective by an outer golden-section
// search over lambda with an exact inner minimization over
// gamma in [0, gamma_hi(lambda)].  The report's gamma_star is set.
DualSolveReport avar_robust(const ScenarioTree& mu, const PathFunctional& f,
                            const CostSpec& c, const AvarParams& params,
                            DroMode mode, const DualSolveOptions& opts = {});

// ---------------------------------------------------------------------------
// geometric Brownian motion discretization
// ---------------------------------------------------------------------------

struct GbmSpec {
  double sigma = 0.2;
  std::vector<double> times = {0.5, 1.0};
  double s0 = 1.0;
  int atoms = 16;

  void validate() const;
};

// Inverse standard normal CDF (Acklam's rational approximation polished by a
// Halley step through std::erfc; accurate to ~1e-15).
double norminv(double p);

// Tree of prices S_{t_1}, ..., S_{t_N} under dS = sigma S dW, S_0 = s0.  Each
// step multiplies by exp(sigma sqrt(dt) z_i - sigma^2 dt / 2) where the z_i
// are the equal-probability quantile midpoints z_i = norminv((i+0.5)/m).
ScenarioTree gbm_tree(const GbmSpec& spec);

// ---------------------------------------------------------------------------
// option experiment
// ---------------------------------------------------------------------------

struct AvarExperimentRow {
  double strike = 0.0;
  double standard = 0.0;
  double causal = 0.0;
  double classical = 0.0;
};

// For each strike K computes standard, causal-robust and classical-robust
// AVaR of the spread option f(x) = (x_N - x_1 + 1 - K)^+ under a ball
// penalty of budget delta on squared-distance transport cost.
std::vector<AvarExperimentRow> run_avar_experiment(
    const GbmSpec& spec, double alpha, double delta, double k_lo = 0.5,
    double k_hi = 1.5, double k_step = 0.05, int points_per_dim = 25);

// CSV with header strike,standard,causal,classical.
std::string avar_experiment_csv(const std::vector<AvarExperimentRow>& rows);

}  // namespace treedro
