#pragma once

#include "treedro/common.hpp"
#include "treedro/cost.hpp"
#include "treedro/tree.hpp"

#include <ostream>
#include <tuple>
#include <vector>

namespace treedro {

// A transport plan between two path measures, stored sparsely as
// (mu path index, nu path index, mass) with only positive entries.
struct Coupling {
  PathMeasure mu;
  PathMeasure nu;
  std::vector<std::tuple<int, int, double>> entries;
  double cost = 0.0;
};

enum class Direction { Forward, Backward };

// Unconstrained optimal transport between the two path distributions.
// Throws CapExceededError when either side exceeds max_side paths.
Coupling ot_classic(const PathMeasure& mu, const PathMeasure& nu,
                    const CostSpec& cost, int max_side = 2000);

// Optimal transport over bicausal (adapted both ways) couplings, computed by
// a backward recursion over node pairs of the two scenario trees.
Coupling ot_bicausal(const PathMeasure& mu, const PathMeasure& nu,
                     const CostSpec& cost);

// Checks the conditional-independence identities that characterize causal
// (Forward) or anticausal (Backward) couplings:
//   pi(p, cyl(b)) * mu(p') == pi(p', cyl(b)) * mu(p)
// for every pair of first-marginal paths p, p' sharing their first n values
// and every length-n prefix class b of the second marginal (roles swapped
// for Backward). Residuals are compared against tol.
bool validate_causal(const Coupling& pi, Direction dir, double tol = 1e-8);

void coupling_to_csv(const Coupling& pi, std::ostream& os);

}  // namespace treedro
