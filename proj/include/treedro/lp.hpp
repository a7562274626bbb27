#pragma once

// Exact desk-scale LP machinery.
//
// solve_lp_max: dense two-phase primal simplex, Bland's rule throughout
// (entering: smallest improving column index; leaving: smallest basic index
// among minimal ratios). Deterministic and cycle-free; built for the oracle
// LPs, not for scale.
//
// solve_transport_min: transportation simplex (spanning-tree basis, same
// Bland pivoting on arcs in row-major order) for plain OT between discrete
// measures; avoids the dense tableau so large marginals stay in memory.

#include <tuple>
#include <vector>

#include "treedro/common.hpp"

namespace treedro {

struct LpRow {
  std::vector<double> a;
  char op;  // 'E' =, 'L' <=, 'G' >=
  double b;
};

struct LpProblem {
  int num_vars = 0;
  std::vector<double> objective;  // maximize objective . x, x >= 0
  std::vector<LpRow> rows;

  void add_row(std::vector<double> a, char op, double b) {
    rows.push_back(LpRow{std::move(a), op, b});
  }
};

struct LpSolution {
  bool feasible = false;
  double value = 0.0;
  std::vector<double> x;
  int iterations = 0;
};

LpSolution solve_lp_max(const LpProblem& p, long max_iters = 2000000);

struct TransportSolution {
  double value = 0.0;
  std::vector<std::tuple<int, int, double>> flows;  // positive flows only
  int iterations = 0;
};

// cost is row-major m x n; supply (size m) and demand (size n) must have
// equal totals within 1e-9 (demand is rescaled to match exactly).
TransportSolution solve_transport_min(const std::vector<double>& supply,
                                      const std::vector<double>& demand,
                                      const std::vector<double>& cost,
                                      long max_iters = 5000000);

}  // namespace treedro
