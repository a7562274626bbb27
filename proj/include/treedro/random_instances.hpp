#pragma once

// Seeded random instances shared by tests, the acceptance suite and the CLI
// generator: plain scenario trees over small per-step alphabets, payoffs,
// costs, Markov control problems and stage payoffs for stopping.

#include "treedro/common.hpp"
#include "treedro/control.hpp"
#include "treedro/cost.hpp"
#include "treedro/payoff.hpp"
#include "treedro/stopping.hpp"
#include "treedro/tree.hpp"

#include <vector>

namespace treedro {

// A plain tree together with the full finite value space it lives on.
struct RandomInstance {
  ScenarioTree tree;
  std::vector<std::vector<Vec>> alphabets;  // per step
};

// Plain tree: each step has a shared alphabet of `alphabet_size` values;
// sibling groups take entries with distinct first coordinates from it, so all
// value histories are injective and the tree is plain by construction.
// Coordinates beyond the first are unconstrained lattice draws.
RandomInstance random_plain_instance(Rng& rng, int horizon, int max_branch,
                                     int alphabet_size, int dims = 1);

PathFunctional random_payoff(Rng& rng);

// squared distance most of the time, plain distance otherwise
CostSpec random_cost(Rng& rng, int horizon);

// Markov problem on small scalar grids with affine dynamics; observation
// costs alternate between quadratic and clamped piecewise-linear tables so
// every lambda >= 0 keeps the robust sup finite for the latter.
ControlProblem random_mdp(Rng& rng, int horizon, int n_states, int n_actions);

// per-step payoffs a_n x_n^2 + b_n x_n + c_n on the current state
StagePayoffs random_stage_payoffs(Rng& rng, int horizon);

}  // namespace treedro
