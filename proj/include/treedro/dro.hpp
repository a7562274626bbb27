#pragma once

// Penalized distributionally robust values on scenario trees: the nested
// (adapted) dual evaluator, the classical per-path evaluator, and the outer
// convex minimization over the penalty multiplier.

#include "treedro/common.hpp"
#include "treedro/cost.hpp"
#include "treedro/minimize.hpp"
#include "treedro/payoff.hpp"
#include "treedro/penalty.hpp"
#include "treedro/tree.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace treedro {

// Per-step finite candidate value sets Y_n replacing the continuum sup.
struct CandidateGrids {
  std::vector<std::vector<Vec>> steps;

  void validate(int horizon, const std::vector<int>& dims) const;
  long path_count() const;
  // every full path through the per-step sets (used as oracle candidates)
  std::vector<Path> all_paths(long cap = 200000) const;
};

// Union of the step-n support of mu with a uniform grid extending half_width
// beyond the support range in every dimension.
CandidateGrids make_grids(const ScenarioTree& mu, double half_width,
                          int points_per_dim = 33, bool cover_support = true);

double default_grid_half_width(const Penalty& L);

// E_mu-interleaved sup: G_N = max_{y_N} { f(y) - lambda c(x, y) },
// G_n = max_{y_n} E[ G_{n+1} | x_{1:n} ], value = E[G_1]. The max at each
// step may only use x_{1:n}: candidate choices are adapted. Stage-additive
// payoffs with separable costs collapse to per-node maxima. With refine set,
// the per-step max is polished by golden section between grid neighbours
// (separable fast path only).
double nested_dual_value(const ScenarioTree& mu, const PathFunctional& f,
                         const CostSpec& c, double lambda,
                         const CandidateGrids& grids, bool refine = false,
                         long work_cap = 50000000);

// Per-path flat max over full grid paths (anticipative choices allowed).
double classical_dual_value(const ScenarioTree& mu, const PathFunctional& f,
                            const CostSpec& c, double lambda,
                            const CandidateGrids& grids, bool refine = false,
                            long work_cap = 50000000);

enum class DroMode { Causal, Classical };

struct DualSolveOptions {
  double lambda_cap = 1e8;
  bool refine = false;
  MinimizeOptions line;
};

struct DualSolveReport {
  double value = 0.0;
  double lambda_star = 0.0;
  std::optional<double> gamma_star;
  std::vector<std::pair<double, double>> probes;  // (lambda, objective)
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool on_cap = false;
  std::optional<double> oracle_gap;
};

std::string report_to_json(const DualSolveReport& rep);

// inf_{lambda >= 0} { L*(lambda) + D(lambda) } with D the chosen inner
// evaluator. Throws UnboundedError when the objective is still decreasing at
// the lambda cap, which violates the growth condition tying f to the cost.
DualSolveReport solve_penalized(const ScenarioTree& mu, const PathFunctional& f,
                                const CostSpec& c, const Penalty& L,
                                const CandidateGrids& grids, DroMode mode,
                                const DualSolveOptions& opts = {});

// v(delta) for each radius via Ball(delta) penalties.
std::vector<std::pair<double, double>> radius_curve(
    const ScenarioTree& mu, const PathFunctional& f, const CostSpec& c,
    const std::vector<double>& deltas, const CandidateGrids& grids, DroMode mode,
    const DualSolveOptions& opts = {});

std::string radius_curve_csv(const std::vector<std::pair<double, double>>& curve);

}  // namespace treedro
