#include "treedro/lp.hpp"

#include "treedro/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace treedro {

// ---------------------------------------------------------------------------
// dense two-phase simplex
// ---------------------------------------------------------------------------

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kReducedTol = 1e-9;

struct Tableau {
  int m = 0;       // rows
  int cols = 0;    // total columns incl. rhs
  int n_struct = 0;
  int n_total = 0;  // structural + slack + artificial
  int art_begin = 0;
  std::vector<double> t;     // m x cols, row-major
  std::vector<double> obj;   // length cols: reduced costs + current -value in rhs slot
  std::vector<int> basis;    // basis[i] = column of basic var in row i

  double& at(int i, int j) { return t[static_cast<std::size_t>(i) * cols + j]; }

  void pivot(int pr, int pc) {
    const double piv = at(pr, pc);
    const double inv = 1.0 / piv;
    for (int j = 0; j < cols; ++j) at(pr, j) *= inv;
    at(pr, pc) = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i == pr) continue;
      const double factor = at(i, pc);
      if (factor == 0.0) continue;
      for (int j = 0; j < cols; ++j) at(i, j) -= factor * at(pr, j);
      at(i, pc) = 0.0;
    }
    const double of = obj[pc];
    if (of != 0.0) {
      for (int j = 0; j < cols; ++j) obj[j] -= of * at(pr, j);
      obj[pc] = 0.0;
    }
    basis[pr] = pc;
  }

  // Bland: entering = smallest column index with positive reduced cost;
  // leaving = min ratio, ties by smallest basic column index.
  // Returns 0 optimal, 1 pivoted, -1 unbounded.
  int step(int col_limit) {
    int pc = -1;
    for (int j = 0; j < col_limit; ++j) {
      if (obj[j] > kReducedTol) {
        pc = j;
        break;
      }
    }
    if (pc < 0) return 0;
    int pr = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double aij = at(i, pc);
      if (aij <= kPivotTol) continue;
      const double ratio = at(i, cols - 1) / aij;
      if (pr < 0 || ratio < best - 1e-12) {
        best = ratio;
        pr = i;
      } else if (ratio <= best + 1e-12 && basis[i] < basis[pr]) {
        best = std::min(best, ratio);
        pr = i;
      }
    }
    if (pr < 0) return -1;
    pivot(pr, pc);
    return 1;
  }
};

}  // namespace

LpSolution solve_lp_max(const LpProblem& p, long max_iters) {
  const int m = static_cast<int>(p.rows.size());
  const int n = p.num_vars;
  if (static_cast<int>(p.objective.size()) != n)
    throw ValidationError("lp: objective size mismatch");

  // column layout: [0,n) structural, [n, n+s) slack/surplus, then artificials
  int n_slack = 0;
  for (const LpRow& r : p.rows) {
    if (static_cast<int>(r.a.size()) != n)
      throw ValidationError("lp: row size mismatch");
    if (r.op == 'L' || r.op == 'G') ++n_slack;
  }

  Tableau T;
  T.m = m;
  T.n_struct = n;
  // artificial count determined while filling; reserve worst case m
  const int art_begin = n + n_slack;
  T.art_begin = art_begin;
  int n_art = 0;

  // first pass to count artificials (row with b<0 normalized flips op)
  std::vector<int> art_of(m, -1);
  {
    int slack_idx = 0;
    for (int i = 0; i < m; ++i) {
      const LpRow& r = p.rows[i];
      char op = r.op;
      if (r.b < 0.0) op = (op == 'L') ? 'G' : (op == 'G' ? 'L' : 'E');
      if (op == 'L') {
        // slack basic, no artificial
      } else {
        art_of[i] = n_art++;
      }
      (void)slack_idx;
    }
  }

  T.n_total = n + n_slack + n_art;
  T.cols = T.n_total + 1;
  T.t.assign(static_cast<std::size_t>(m) * T.cols, 0.0);
  T.obj.assign(T.cols, 0.0);
  T.basis.assign(m, -1);

  {
    int slack_idx = 0;
    for (int i = 0; i < m; ++i) {
      const LpRow& r = p.rows[i];
      double sgn = 1.0;
      char op = r.op;
      double b = r.b;
      if (b < 0.0) {
        sgn = -1.0;
        b = -b;
        op = (op == 'L') ? 'G' : (op == 'G' ? 'L' : 'E');
      }
      for (int j = 0; j < n; ++j) T.at(i, j) = sgn * r.a[j];
      T.at(i, T.cols - 1) = b;
      if (op == 'L') {
        T.at(i, n + slack_idx) = 1.0;
        T.basis[i] = n + slack_idx;
        ++slack_idx;
      } else if (op == 'G') {
        T.at(i, n + slack_idx) = -1.0;
        ++slack_idx;
        T.at(i, art_begin + art_of[i]) = 1.0;
        T.basis[i] = art_begin + art_of[i];
      } else {
        T.at(i, art_begin + art_of[i]) = 1.0;
        T.basis[i] = art_begin + art_of[i];
      }
    }
  }

  LpSolution sol;

  // phase 1: maximize -sum(artificials); reduced costs canonicalized by
  // adding every artificial-basic row
  if (n_art > 0) {
    for (int j = 0; j < T.cols; ++j) T.obj[j] = 0.0;
    for (int k = 0; k < n_art; ++k) T.obj[art_begin + k] = -1.0;
    for (int i = 0; i < m; ++i) {
      if (T.basis[i] >= art_begin) {
        for (int j = 0; j < T.cols; ++j) T.obj[j] += T.at(i, j);
        T.obj[T.basis[i]] = 0.0;
      }
    }
    long it = 0;
    for (;; ++it) {
      if (it > max_iters) throw CapExceededError("simplex iteration cap (phase 1)");
      const int s = T.step(T.n_total);
      if (s == 0) break;
      if (s == -1) throw ValidationError("lp: phase-1 unbounded (bug)");
    }
    sol.iterations += static_cast<int>(it);
    // infeasible if artificials retain mass
    double art_mass = 0.0;
    for (int i = 0; i < m; ++i)
      if (T.basis[i] >= art_begin) art_mass += T.at(i, T.cols - 1);
    if (art_mass > 1e-7) {
      sol.feasible = false;
      return sol;
    }
    // drive zero-valued artificials out of the basis; redundant rows are
    // neutralized (set to zero) so later pivots cannot touch them
    for (int i = 0; i < m; ++i) {
      if (T.basis[i] < art_begin) continue;
      int pc = -1;
      for (int j = 0; j < art_begin; ++j) {
        if (std::fabs(T.at(i, j)) > 1e-7) {
          pc = j;
          break;
        }
      }
      if (pc >= 0) {
        T.pivot(i, pc);
      } else {
        for (int j = 0; j < T.cols; ++j) T.at(i, j) = 0.0;
        T.at(i, T.basis[i]) = 1.0;  // keep the zero artificial parked
      }
    }
  }

  // phase 2: original objective, artificial columns barred from entering
  for (int j = 0; j < T.cols; ++j) T.obj[j] = 0.0;
  for (int j = 0; j < n; ++j) T.obj[j] = p.objective[j];
  for (int i = 0; i < m; ++i) {
    const int bj = T.basis[i];
    const double c = T.obj[bj];
    if (c != 0.0) {
      for (int j = 0; j < T.cols; ++j) T.obj[j] -= c * T.at(i, j);
      T.obj[bj] = 0.0;
    }
  }
  {
    long it = 0;
    for (;; ++it) {
      if (it > max_iters) throw CapExceededError("simplex iteration cap (phase 2)");
      const int s = T.step(T.art_begin);
      if (s == 0) break;
      if (s == -1) throw UnboundedError("lp: objective unbounded");
    }
    sol.iterations += static_cast<int>(it);
  }

  sol.feasible = true;
  sol.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i) {
    if (T.basis[i] < n) {
      double v = T.at(i, T.cols - 1);
      if (v < 0.0 && v > -1e-9) v = 0.0;
      sol.x[T.basis[i]] = v;
    }
  }
  double val = 0.0;
  for (int j = 0; j < n; ++j) val += p.objective[j] * sol.x[j];
  sol.value = val;
  return sol;
}

// ---------------------------------------------------------------------------
// transportation simplex
// ---------------------------------------------------------------------------

namespace {

struct ArcBasis {
  // spanning tree over m sources (nodes 0..m-1) and n sinks (m..m+n-1)
  int m = 0, n = 0;
  std::vector<int> ai, aj;        // basic arcs (source, sink)
  std::vector<double> flow;       // flow on basic arcs
  std::vector<std::vector<int>> adj;  // node -> incident basic-arc indices

  void rebuild_adj() {
    adj.assign(m + n, {});
    for (std::size_t k = 0; k < ai.size(); ++k) {
      adj[ai[k]].push_back(static_cast<int>(k));
      adj[m + aj[k]].push_back(static_cast<int>(k));
    }
  }
};

}  // namespace

TransportSolution solve_transport_min(const std::vector<double>& supply,
                                      const std::vector<double>& demand_in,
                                      const std::vector<double>& cost,
                                      long max_iters) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand_in.size());
  if (m == 0 || n == 0) throw ValidationError("transport: empty marginal");
  if (static_cast<int>(cost.size()) != m * n)
    throw ValidationError("transport: cost size mismatch");
  double sa = 0.0, sb = 0.0;
  for (double v : supply) sa += v;
  for (double v : demand_in) sb += v;
  if (std::fabs(sa - sb) > 1e-9)
    throw ValidationError("transport: marginal totals differ");
  std::vector<double> demand = demand_in;
  const double scale = sa / sb;
  for (double& v : demand) v *= scale;

  ArcBasis B;
  B.m = m;
  B.n = n;

  // northwest-corner start: deterministic, m+n-1 arcs incl. degenerate zeros
  {
    int i = 0, j = 0;
    double ra = supply[0], rb = demand[0];
    for (;;) {
      const double t = std::min(ra, rb);
      B.ai.push_back(i);
      B.aj.push_back(j);
      B.flow.push_back(t);
      ra -= t;
      rb -= t;
      if (i == m - 1 && j == n - 1) break;
      if (ra <= rb && i < m - 1) {
        ++i;
        ra = supply[i];
      } else {
        ++j;
        rb = demand[j];
      }
    }
  }
  B.rebuild_adj();

  std::vector<double> u(m), v(n);
  std::vector<int> par_node(m + n), par_arc(m + n);
  std::vector<char> seen(m + n);

  TransportSolution out;
  long it = 0;
  for (;; ++it) {
    if (it > max_iters)
      throw CapExceededError("transportation simplex iteration cap");

    // potentials from the spanning tree (u[0] = 0)
    std::fill(seen.begin(), seen.end(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    u[0] = 0.0;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int k : B.adj[node]) {
        const int a = B.ai[k], b = m + B.aj[k];
        const int other = (node == a) ? b : a;
        if (seen[other]) continue;
        seen[other] = 1;
        const double c = cost[static_cast<std::size_t>(B.ai[k]) * n + B.aj[k]];
        if (other >= m)
          v[other - m] = c - u[B.ai[k]];
        else
          u[other] = c - v[B.aj[k]];
        stack.push_back(other);
      }
    }

    // entering arc: first (row-major) with negative reduced cost
    int ei = -1, ej = -1;
    for (int i = 0; i < m && ei < 0; ++i) {
      const double ui = u[i];
      const double* ci = &cost[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) {
        if (ci[j] - ui - v[j] < -1e-11) {
          ei = i;
          ej = j;
          break;
        }
      }
    }
    if (ei < 0) break;  // optimal

    // unique tree path from source ei to sink ej
    std::fill(seen.begin(), seen.end(), 0);
    std::vector<int> bfs{ei};
    seen[ei] = 1;
    par_node[ei] = -1;
    par_arc[ei] = -1;
    for (std::size_t q = 0; q < bfs.size(); ++q) {
      const int node = bfs[q];
      for (int k : B.adj[node]) {
        const int a = B.ai[k], b = m + B.aj[k];
        const int other = (node == a) ? b : a;
        if (seen[other]) continue;
        seen[other] = 1;
        par_node[other] = node;
        par_arc[other] = k;
        bfs.push_back(other);
      }
    }
    // walk back from sink ej; arcs alternate -theta starting at the sink end
    std::vector<int> cyc_arcs;
    for (int node = m + ej; par_arc[node] >= 0; node = par_node[node])
      cyc_arcs.push_back(par_arc[node]);
    // entering arc carries +theta; along the path the signs alternate -,+,-,...
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t q = 0; q < cyc_arcs.size(); ++q) {
      if (q % 2 != 0) continue;  // only reverse arcs lose flow
      const int k = cyc_arcs[q];
      const double fl = B.flow[k];
      if (leave < 0 || fl < theta - 1e-15) {
        theta = fl;
        leave = k;
      } else if (fl <= theta + 1e-15 &&
                 (B.ai[k] < B.ai[leave] ||
                  (B.ai[k] == B.ai[leave] && B.aj[k] < B.aj[leave]))) {
        theta = std::min(theta, fl);
        leave = k;
      }
    }
    if (leave < 0) throw ValidationError("transport: no leaving arc (bug)");
    for (std::size_t q = 0; q < cyc_arcs.size(); ++q)
      B.flow[cyc_arcs[q]] += (q % 2 == 0) ? -theta : theta;
    B.ai[leave] = ei;
    B.aj[leave] = ej;
    B.flow[leave] = theta;
    B.rebuild_adj();
  }

  out.iterations = static_cast<int>(it);
  double val = 0.0;
  for (std::size_t k = 0; k < B.ai.size(); ++k) {
    const double fl = B.flow[k];
    val += fl * cost[static_cast<std::size_t>(B.ai[k]) * n + B.aj[k]];
    if (fl > 0.0) out.flows.emplace_back(B.ai[k], B.aj[k], fl);
  }
  out.value = val;
  return out;
}

}  // namespace treedro
