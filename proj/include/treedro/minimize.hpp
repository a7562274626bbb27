#pragma once

// One-dimensional minimization of convex extended-real functions on
// [lo, cap]: bracket by doubling, bisect any +inf boundary, then golden
// section. Deterministic; +inf compares greater than any finite value and
// never enters arithmetic.

#include <functional>
#include <utility>
#include <vector>

#include "treedro/common.hpp"

namespace treedro {

struct MinimizeOptions {
  double tol_rel = 1e-8;    // stop when bracket width <= tol_rel*(1+|a|+|b|)
  double start = 1.0;       // first probe for the doubling phase
  int max_golden_iters = 200;
};

struct MinimizeResult {
  double x = 0.0;
  double value = 0.0;        // best finite probe value
  bool found_finite = false; // false iff h = +inf everywhere probed
  bool on_cap = false;       // h still strictly decreasing at the cap
  int evals = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  std::vector<std::pair<double, double>> probes;  // finite probes in eval order
};

MinimizeResult minimize_convex(const std::function<ExtReal(double)>& h,
                               double lo, double cap,
                               const MinimizeOptions& opts = {});

}  // namespace treedro
