#include "treedro/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "treedro/oracles.hpp"

namespace treedro {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int snap_index(const std::vector<double>& grid, double x, double* dist) {
  int best = 0;
  double bd = std::abs(grid[0] - x);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = std::abs(grid[i] - x);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  if (dist && bd > *dist) *dist = bd;
  return best;
}

double golden_max_1d(const std::function<double(double)>& g, double lo,
                     double hi, int iters) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = g(x1), f2 = g(x2);
  double best = std::max(f1, f2);
  for (int i = 0; i < iters && b - a > 1e-14 * (1.0 + std::abs(a)); ++i) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = g(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = g(x2);
    }
    best = std::max(best, std::max(f1, f2));
  }
  best = std::max(best, g((a + b) / 2.0));
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// problem validation and I/O
// ---------------------------------------------------------------------------

void ControlProblem::validate() const {
  if (horizon < 1) throw ValidationError("control: horizon must be >= 1");
  auto want = [&](std::size_t got, std::size_t need, const char* what) {
    if (got != need)
      throw ValidationError(std::string("control: expected ") +
                            std::to_string(need) + " " + what + ", got " +
                            std::to_string(got));
  };
  want(state_grids.size(), horizon, "state grids");
  want(actions.size(), horizon - 1, "action sets");
  want(noise.size(), horizon - 1, "noise laws");
  want(dynamics.size(), horizon - 1, "dynamics");
  want(stage_cost.size(), horizon - 1, "stage costs");
  want(obs_cost.size(), horizon, "observation costs");
  for (const auto& g : state_grids)
    if (g.empty()) throw ValidationError("control: empty state grid");
  for (const auto& a : actions)
    if (a.empty()) throw ValidationError("control: empty action set");
  for (const auto& nz : noise) {
    if (nz.empty()) throw ValidationError("control: empty noise law");
    double total = 0.0;
    for (const auto& [w, p] : nz) {
      if (!(p > 0.0)) throw ValidationError("control: noise probs must be positive");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("control: noise probs must sum to 1, got " +
                            format_value(total));
  }
  for (const auto& d : dynamics)
    if (!d.affine && !d.fn)
      throw ValidationError("control: custom dynamics without a function");
  for (const auto& l : stage_cost)
    if (!l) throw ValidationError("control: missing stage cost function");
  for (const auto& f : obs_cost)
    if (f.kind == ObsCost::Kind::Custom && !f.fn)
      throw ValidationError("control: custom observation cost without a function");
  if (initial.empty()) throw ValidationError("control: empty initial law");
  double total = 0.0;
  for (const auto& [x, p] : initial) {
    if (!(p > 0.0)) throw ValidationError("control: initial probs must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("control: initial probs must sum to 1, got " +
                          format_value(total));
}

ControlProblem control_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("control json: ") + e.what());
  }
  try {
    ControlProblem pb;
    pb.horizon = j.at("horizon").get<int>();
    pb.state_grids = j.at("state_grids").get<std::vector<std::vector<double>>>();
    if (j.contains("actions"))
      pb.actions = j.at("actions").get<std::vector<std::vector<double>>>();
    if (j.contains("noise"))
      for (const auto& step : j.at("noise")) {
        std::vector<std::pair<double, double>> nz;
        for (const auto& atom : step)
          nz.emplace_back(atom.at(0).get<double>(), atom.at(1).get<double>());
        pb.noise.push_back(nz);
      }
    if (j.contains("dynamics"))
      for (std::size_t n = 0; n < j.at("dynamics").size(); ++n) {
        const auto& d = j.at("dynamics")[n];
        Dynamics dyn;
        const std::string type = d.at("type").get<std::string>();
        if (type == "affine") {
          dyn.A = d.value("A", 1.0);
          dyn.B = d.value("B", 0.0);
        } else if (type == "table") {
          // next[xi][ui][wi]; inputs are matched against the declared grids
          auto next =
              d.at("next").get<std::vector<std::vector<std::vector<double>>>>();
          auto xs = pb.state_grids.at(n);
          std::vector<double> us = j.at("actions")[n].get<std::vector<double>>();
          std::vector<double> ws;
          for (const auto& atom : j.at("noise")[n]) ws.push_back(atom.at(0).get<double>());
          dyn.affine = false;
          dyn.fn = [next, xs, us, ws](double x, double u, double w) {
            auto find = [](const std::vector<double>& v, double t) {
              for (std::size_t i = 0; i < v.size(); ++i)
                if (std::abs(v[i] - t) <= 1e-9) return i;
              throw ValidationError("control: tabulated dynamics queried off-grid");
            };
            return next.at(find(xs, x)).at(find(us, u)).at(find(ws, w));
          };
        } else {
          throw ValidationError("control json: unknown dynamics type '" + type + "'");
        }
        pb.dynamics.push_back(dyn);
      }
    if (j.contains("stage_costs"))
      for (std::size_t n = 0; n < j.at("stage_costs").size(); ++n) {
        const auto& sc = j.at("stage_costs")[n];
        const std::string type = sc.at("type").get<std::string>();
        if (type == "usq") {
          pb.stage_cost.push_back([](double, double u) { return u * u; });
        } else if (type == "quad") {
          const double cu = sc.value("cu", 1.0), cx = sc.value("cx", 0.0);
          pb.stage_cost.push_back(
              [cu, cx](double x, double u) { return cu * u * u + cx * x * x; });
        } else if (type == "table") {
          auto values = sc.at("values").get<std::vector<std::vector<double>>>();
          auto xs = pb.state_grids.at(n);
          std::vector<double> us = j.at("actions")[n].get<std::vector<double>>();
          pb.stage_cost.push_back([values, xs, us](double x, double u) {
            auto find = [](const std::vector<double>& v, double t) {
              for (std::size_t i = 0; i < v.size(); ++i)
                if (std::abs(v[i] - t) <= 1e-9) return i;
              throw ValidationError("control: tabulated stage cost queried off-grid");
            };
            return values.at(find(xs, x)).at(find(us, u));
          });
        } else {
          throw ValidationError("control json: unknown stage cost type '" + type + "'");
        }
      }
    for (const auto& oc : j.at("obs_costs")) {
      const std::string type = oc.at("type").get<std::string>();
      if (type == "quadratic") {
        pb.obs_cost.push_back(ObsCost::quadratic());
      } else if (type == "table") {
        // clamped linear interpolation, so off-grid probes stay defined
        auto xs = oc.at("x").get<std::vector<double>>();
        auto vs = oc.at("values").get<std::vector<double>>();
        if (xs.size() != vs.size() || xs.size() < 1)
          throw ValidationError("control json: bad tabulated observation cost");
        pb.obs_cost.push_back(ObsCost::custom([xs, vs](double x) {
          if (x <= xs.front()) return vs.front();
          if (x >= xs.back()) return vs.back();
          std::size_t i = 1;
          while (xs[i] < x) ++i;
          const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
          return vs[i - 1] + t * (vs[i] - vs[i - 1]);
        }));
      } else {
        throw ValidationError("control json: unknown observation cost type '" +
                              type + "'");
      }
    }
    for (const auto& atom : j.at("initial"))
      pb.initial.emplace_back(atom.at(0).get<double>(), atom.at(1).get<double>());
    pb.validate();
    return pb;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("control json: ") + e.what());
  }
}

std::string policy_to_json(const ControlProblem& pb, const Policy& policy) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t n = 0; n < policy.action_index.size(); ++n) {
    nlohmann::json step;
    step["step"] = n + 1;
    step["states"] = pb.state_grids.at(n);
    std::vector<double> acts;
    for (int ui : policy.action_index[n]) acts.push_back(pb.actions.at(n).at(ui));
    step["actions"] = acts;
    steps.push_back(step);
  }
  nlohmann::json out;
  out["policy"] = steps;
  return out.dump(2);
}

// ---------------------------------------------------------------------------
// robust stage cost
// ---------------------------------------------------------------------------

std::vector<double> robust_stage_cost(const ObsCost& f, const GroundCost& c,
                                      double lambda,
                                      const std::vector<double>& xgrid,
                                      const std::vector<double>& ygrid,
                                      bool refine, int expand_rounds) {
  if (xgrid.empty() || ygrid.empty())
    throw ValidationError("robust stage cost: empty grid");
  if (lambda < 0.0)
    throw ValidationError("robust stage cost: lambda must be >= 0");
  // Closed-form divergence test for the quadratic/squared-distance pair.
  // Only the continuum sup diverges; the pure grid sup (refine off) is a
  // finite maximum at any lambda and stays comparable with grid oracles.
  if (refine && f.kind == ObsCost::Kind::Quadratic &&
      c.kind == GroundCost::SqEuclid && lambda <= 1.0)
    throw UnboundedError(
        "robust stage cost: sup_y { y^2 - lambda (x-y)^2 } diverges for "
        "lambda <= 1 (got lambda = " + format_value(lambda) + ")");

  std::vector<double> ys = ygrid;
  std::sort(ys.begin(), ys.end());
  const int m = static_cast<int>(ys.size());

  std::vector<double> out(xgrid.size());
  for (std::size_t xi = 0; xi < xgrid.size(); ++xi) {
    const double x = xgrid[xi];
    auto g = [&](double y) { return f.eval(y) - lambda * c.eval({x}, {y}); };

    double best = -kInf;
    int bi = 0;
    for (int i = 0; i < m; ++i) {
      const double v = g(ys[i]);
      if (v > best) {
        best = v;
        bi = i;
      }
    }

    // With refine off the sup is taken over the grid alone, which keeps the
    // tables exactly comparable with grid-restricted primal oracles. With it
    // on, probe outward from the edges in doubling steps (one grid spacing,
    // two, four, ...) so a maximum just past the boundary is still caught; a
    // sup improving through the last round is declared divergent. The polish
    // then brackets the best point seen, on or off the grid.
    if (refine) {
      const double s_lo = m >= 2 ? ys[1] - ys[0] : 1.0 + std::abs(ys[0]);
      const double s_hi = m >= 2 ? ys[m - 1] - ys[m - 2] : 1.0 + std::abs(ys[0]);
      double exp_best = best, exp_y = 0.0, exp_step = 0.0;
      bool from_expansion = false;
      double step_lo = s_lo, step_hi = s_hi;
      for (int r = 0; r < expand_rounds; ++r) {
        bool improved = false;
        const std::pair<double, double> probes[] = {
            {ys.front() - step_lo, step_lo}, {ys.back() + step_hi, step_hi}};
        for (const auto& [y, st] : probes) {
          const double v = g(y);
          if (v > exp_best + 1e-7 * (1.0 + std::abs(exp_best))) {
            exp_best = v;
            exp_y = y;
            exp_step = st;
            from_expansion = true;
            improved = true;
          }
        }
        if (improved && r + 1 == expand_rounds)
          throw UnboundedError(
              "robust stage cost: sup over y still improving after expanding "
              "the search range " + std::to_string(expand_rounds) +
              " times at lambda = " + format_value(lambda));
        step_lo *= 2.0;
        step_hi *= 2.0;
      }
      best = exp_best;

      double lo, hi;
      if (from_expansion) {
        lo = exp_y - exp_step;
        hi = exp_y + exp_step;
      } else {
        lo = bi > 0 ? ys[bi - 1] : ys[0] - s_lo;
        hi = bi + 1 < m ? ys[bi + 1] : ys[m - 1] + s_hi;
      }
      if (hi > lo) best = std::max(best, golden_max_1d(g, lo, hi, 120));
    }
    out[xi] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// backward dynamic program
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> obs_tables(
    const ControlProblem& pb, std::optional<double> lambda,
    const std::vector<std::vector<double>>& ygrids, const CostSpec& c,
    const ControlOptions& opts) {
  std::vector<std::vector<double>> tabs(pb.horizon);
  for (int n = 1; n <= pb.horizon; ++n) {
    const auto& xs = pb.state_grids[n - 1];
    if (!lambda) {
      tabs[n - 1].resize(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i)
        tabs[n - 1][i] = pb.obs_cost[n - 1].eval(xs[i]);
    } else {
      tabs[n - 1] = robust_stage_cost(pb.obs_cost[n - 1], c.step(n), *lambda,
                                      xs, ygrids[n - 1], opts.refine,
                                      opts.expand_rounds);
    }
  }
  return tabs;
}

// q(x, u) = l_n(x, u) + fhat_n(x) + sum_w p_w J_{n+1}(snap(g_n(x, u, w)))
double q_value(const ControlProblem& pb, int n, int xi, int ui,
               const std::vector<double>& j_next,
               const std::vector<std::vector<double>>& tabs, double* max_snap) {
  const double x = pb.state_grids[n - 1][xi];
  const double u = pb.actions[n - 1][ui];
  double total = pb.stage_cost[n - 1](x, u) + tabs[n - 1][xi];
  for (const auto& [w, pw] : pb.noise[n - 1]) {
    const double nx = pb.dynamics[n - 1].eval(x, u, w);
    const int ni = snap_index(pb.state_grids[n], nx, max_snap);
    total += pw * j_next[ni];
  }
  return total;
}

// One backward pass; with `fixed` null the action minimum is taken (ties to
// the smallest index), otherwise the given policy is followed.  Shared by the
// solver, the policy evaluator and the enumeration oracle so that their
// arithmetic is identical term for term.
double run_dp(const ControlProblem& pb,
              const std::vector<std::vector<double>>& tabs, const Policy* fixed,
              Policy* policy_out, std::vector<std::vector<double>>* j_out,
              double* max_snap) {
  const int N = pb.horizon;
  std::vector<std::vector<double>> J(N);
  J[N - 1] = tabs[N - 1];
  if (policy_out) policy_out->action_index.assign(N - 1, {});
  for (int n = N - 1; n >= 1; --n) {
    const auto& xs = pb.state_grids[n - 1];
    J[n - 1].resize(xs.size());
    if (policy_out) (*policy_out).action_index[n - 1].resize(xs.size());
    for (std::size_t xi = 0; xi < xs.size(); ++xi) {
      if (fixed) {
        const int ui = fixed->action_index[n - 1][xi];
        J[n - 1][xi] = q_value(pb, n, static_cast<int>(xi), ui, J[n], tabs,
                               max_snap);
      } else {
        double best = kInf;
        int bi = 0;
        for (std::size_t ui = 0; ui < pb.actions[n - 1].size(); ++ui) {
          const double q = q_value(pb, n, static_cast<int>(xi),
                                   static_cast<int>(ui), J[n], tabs, max_snap);
          if (q < best) {
            best = q;
            bi = static_cast<int>(ui);
          }
        }
        J[n - 1][xi] = best;
        if (policy_out) (*policy_out).action_index[n - 1][xi] = bi;
      }
    }
  }
  double value = 0.0;
  for (const auto& [x0, p] : pb.initial)
    value += p * J[0][snap_index(pb.state_grids[0], x0, max_snap)];
  if (j_out) *j_out = std::move(J);
  return value;
}

void check_robust_inputs(const ControlProblem& pb, std::optional<double> lambda,
                         const std::vector<std::vector<double>>& ygrids,
                         const CostSpec& c) {
  if (!lambda) return;
  if (*lambda < 0.0)
    throw ValidationError("control: lambda must be >= 0");
  if (!c.is_separable())
    throw ValidationError("control: the transport cost must be separable");
  if (static_cast<int>(ygrids.size()) != pb.horizon)
    throw ValidationError("control: need one adversary grid per step");
  for (const auto& g : ygrids)
    if (g.empty()) throw ValidationError("control: empty adversary grid");
}

}  // namespace

BellmanResult bellman_solve(const ControlProblem& pb,
                            std::optional<double> lambda,
                            const std::vector<std::vector<double>>& ygrids,
                            const CostSpec& c, const ControlOptions& opts) {
  pb.validate();
  check_robust_inputs(pb, lambda, ygrids, c);
  const auto tabs = obs_tables(pb, lambda, ygrids, c, opts);
  BellmanResult res;
  res.max_snap = 0.0;
  res.value = run_dp(pb, tabs, nullptr, &res.policy, &res.J, &res.max_snap);
  return res;
}

double policy_value(const ControlProblem& pb, const Policy& policy,
                    std::optional<double> lambda,
                    const std::vector<std::vector<double>>& ygrids,
                    const CostSpec& c, const ControlOptions& opts) {
  pb.validate();
  check_robust_inputs(pb, lambda, ygrids, c);
  if (policy.action_index.size() + 1 != static_cast<std::size_t>(pb.horizon))
    throw ValidationError("control: policy has the wrong number of steps");
  for (int n = 1; n < pb.horizon; ++n) {
    const auto& row = policy.action_index[n - 1];
    if (row.size() != pb.state_grids[n - 1].size())
      throw ValidationError("control: policy row does not match the state grid");
    for (int ui : row)
      if (ui < 0 || ui >= static_cast<int>(pb.actions[n - 1].size()))
        throw ValidationError("control: policy action index out of range");
  }
  const auto tabs = obs_tables(pb, lambda, ygrids, c, opts);
  double snap = 0.0;
  return run_dp(pb, tabs, &policy, nullptr, nullptr, &snap);
}

EnumeratedPolicies enumerate_policies(const ControlProblem& pb,
                                      std::optional<double> lambda,
                                      const std::vector<std::vector<double>>& ygrids,
                                      const CostSpec& c,
                                      const ControlOptions& opts, long cap) {
  pb.validate();
  check_robust_inputs(pb, lambda, ygrids, c);
  double count = 1.0;
  for (int n = 1; n < pb.horizon; ++n)
    count *= std::pow(static_cast<double>(pb.actions[n - 1].size()),
                      static_cast<double>(pb.state_grids[n - 1].size()));
  if (count > static_cast<double>(cap))
    throw CapExceededError("enumerate_policies: " + format_value(count) +
                           " policies exceed the cap of " + std::to_string(cap));
  const auto tabs = obs_tables(pb, lambda, ygrids, c, opts);

  Policy cur;
  cur.action_index.resize(pb.horizon - 1);
  for (int n = 1; n < pb.horizon; ++n)
    cur.action_index[n - 1].assign(pb.state_grids[n - 1].size(), 0);

  EnumeratedPolicies out;
  out.value = kInf;
  bool done = false;
  while (!done) {
    double snap = 0.0;
    const double v = run_dp(pb, tabs, &cur, nullptr, nullptr, &snap);
    ++out.policies_checked;
    if (v < out.value) {
      out.value = v;
      out.policy = cur;
    }
    // odometer over the (step, state) slots
    done = true;
    for (int n = 1; n < pb.horizon && done; ++n)
      for (std::size_t xi = 0; xi < cur.action_index[n - 1].size() && done; ++xi) {
        if (++cur.action_index[n - 1][xi] <
            static_cast<int>(pb.actions[n - 1].size())) {
          done = false;
        } else {
          cur.action_index[n - 1][xi] = 0;
        }
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// outer search
// ---------------------------------------------------------------------------

ControlSolveReport solve_robust_control(const ControlProblem& pb,
                                        const CostSpec& c, const Penalty& L,
                                        const std::vector<std::vector<double>>& ygrids,
                                        const ControlOptions& opts) {
  pb.validate();
  check_robust_inputs(pb, 0.0, ygrids, c);
  double cap = opts.lambda_cap;
  const ExtReal dom = L.lambda_domain_max();
  const bool domain_capped = dom.finite() && dom.v < cap;
  if (domain_capped) cap = dom.v;
  auto h = [&](double lam) -> ExtReal {
    const ExtReal conj = conjugate(L, lam);
    if (conj.inf) return ExtReal::infinity();
    try {
      const BellmanResult r = bellman_solve(pb, lam, ygrids, c, opts);
      return ExtReal(conj.v + r.value);
    } catch (const UnboundedError&) {
      return ExtReal::infinity();  // divergent robust sup at this lambda
    }
  };
  const MinimizeResult res = minimize_convex(h, 0.0, cap);
  if (!res.found_finite)
    throw UnboundedError(
        "robust control: dual objective infinite at every probed lambda");
  if (res.on_cap && !domain_capped)
    throw UnboundedError(
        "robust control: objective still decreasing at the lambda cap; the "
        "observation costs' growth is not controlled by the transport cost");
  const BellmanResult at_best = bellman_solve(pb, res.x, ygrids, c, opts);
  ControlSolveReport rep;
  rep.outer = res;
  rep.value = res.value;
  rep.lambda_star = res.x;
  rep.policy = at_best.policy;
  rep.max_snap = at_best.max_snap;
  rep.on_cap = res.on_cap;
  return rep;
}

// ---------------------------------------------------------------------------
// controlled law and policy cost
// ---------------------------------------------------------------------------

ScenarioTree controlled_law(const ControlProblem& pb, const Policy& policy) {
  pb.validate();
  ScenarioTree t;
  t.horizon = pb.horizon;
  t.dims.assign(pb.horizon, 1);
  // frontier of (node index, state grid index)
  std::vector<std::pair<int, int>> frontier;
  {
    // merge initial atoms landing on the same grid point
    std::vector<double> mass(pb.state_grids[0].size(), 0.0);
    for (const auto& [x0, p] : pb.initial)
      mass[snap_index(pb.state_grids[0], x0, nullptr)] += p;
    for (std::size_t i = 0; i < mass.size(); ++i) {
      if (mass[i] <= 0.0) continue;
      TreeNode nd;
      nd.id = static_cast<int>(t.nodes.size());
      nd.parent = -1;
      nd.step = 1;
      nd.value = {pb.state_grids[0][i]};
      nd.prob = mass[i];
      t.nodes.push_back(nd);
      frontier.emplace_back(nd.id, static_cast<int>(i));
    }
  }
  for (int n = 1; n < pb.horizon; ++n) {
    std::vector<std::pair<int, int>> next;
    for (const auto& [parent_index, xi] : frontier) {
      const double x = pb.state_grids[n - 1][xi];
      const int ui = policy.action_index.at(n - 1).at(xi);
      const double u = pb.actions[n - 1][ui];
      std::vector<double> mass(pb.state_grids[n].size(), 0.0);
      for (const auto& [w, pw] : pb.noise[n - 1])
        mass[snap_index(pb.state_grids[n],
                        pb.dynamics[n - 1].eval(x, u, w), nullptr)] += pw;
      for (std::size_t i = 0; i < mass.size(); ++i) {
        if (mass[i] <= 0.0) continue;
        TreeNode nd;
        nd.id = static_cast<int>(t.nodes.size());
        nd.parent = parent_index;
        nd.step = n + 1;
        nd.value = {pb.state_grids[n][i]};
        nd.prob = mass[i];
        t.nodes.push_back(nd);
        next.emplace_back(nd.id, static_cast<int>(i));
      }
    }
    frontier = std::move(next);
  }
  t.finalize();
  return t;
}

double expected_control_cost(const ControlProblem& pb, const Policy& policy) {
  pb.validate();
  // forward state distribution over grid indices
  std::vector<double> dist(pb.state_grids[0].size(), 0.0);
  for (const auto& [x0, p] : pb.initial)
    dist[snap_index(pb.state_grids[0], x0, nullptr)] += p;
  double total = 0.0;
  for (int n = 1; n < pb.horizon; ++n) {
    std::vector<double> next(pb.state_grids[n].size(), 0.0);
    for (std::size_t xi = 0; xi < dist.size(); ++xi) {
      if (dist[xi] <= 0.0) continue;
      const double x = pb.state_grids[n - 1][xi];
      const int ui = policy.action_index.at(n - 1).at(xi);
      const double u = pb.actions[n - 1][ui];
      total += dist[xi] * pb.stage_cost[n - 1](x, u);
      for (const auto& [w, pw] : pb.noise[n - 1])
        next[snap_index(pb.state_grids[n],
                        pb.dynamics[n - 1].eval(x, u, w), nullptr)] +=
            dist[xi] * pw;
    }
    dist = std::move(next);
  }
  return total;
}

// ---------------------------------------------------------------------------
// scalar LQ
// ---------------------------------------------------------------------------

RiccatiCoeffs lq_riccati(const LQSpec& spec, double kappa) {
  const int N = spec.N;
  RiccatiCoeffs rc;
  rc.p.assign(N, 0.0);
  rc.q.assign(N, 0.0);
  rc.p[N - 1] = kappa;
  for (int n = N - 1; n >= 1; --n) {
    const double pn = rc.p[n];  // p_{n+1}
    const double a2 = spec.A * spec.A, b2 = spec.B * spec.B;
    rc.p[n - 1] = kappa + a2 * pn - a2 * b2 * pn * pn / (1.0 + b2 * pn);
    rc.q[n - 1] = rc.q[n] + pn * spec.vw;
  }
  return rc;
}

LqResult lq_solve(const LQSpec& spec) {
  if (spec.N < 2) throw ValidationError("lq: N must be >= 2");
  if (spec.vw < 0.0) throw ValidationError("lq: noise variance must be >= 0");
  if (spec.delta < 0.0) throw ValidationError("lq: delta must be >= 0");
  if (!(spec.lambda_cap > 1.0))
    throw ValidationError("lq: lambda cap must exceed 1");
  auto value_at = [&](double kappa) {
    const RiccatiCoeffs rc = lq_riccati(spec, kappa);
    return rc.p[0] * spec.x1 * spec.x1 + rc.q[0];
  };
  auto h = [&](double lam) -> ExtReal {
    if (lam <= 1.0) return ExtReal::infinity();
    return ExtReal(spec.delta * lam + value_at(lam / (lam - 1.0)));
  };
  MinimizeOptions mo;
  mo.start = 2.0;
  const MinimizeResult res = minimize_convex(h, 1.0, spec.lambda_cap, mo);
  LqResult out;
  out.value = res.value;
  out.lambda_star = res.x;
  out.on_cap = res.on_cap;  // reported, not an error: delta = 0 ends up here
  out.riccati = lq_riccati(spec, res.x / (res.x - 1.0));
  out.classical_value = value_at(1.0);
  out.probes = res.probes;
  return out;
}

}  // namespace treedro
