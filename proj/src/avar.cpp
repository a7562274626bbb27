#include "treedro/avar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "treedro/minimize.hpp"

namespace treedro {

// ---------------------------------------------------------------------------
// standard AVaR
// ---------------------------------------------------------------------------

double avar_standard(const PathMeasure& mu, const PathFunctional& f,
                     double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("avar: alpha must lie in (0,1), got " +
                          format_value(alpha));
  std::vector<std::pair<double, double>> atoms;  // (value, weight)
  atoms.reserve(mu.paths.size());
  for (std::size_t p = 0; p < mu.paths.size(); ++p) {
    const double v = f.eval(mu.paths[p]);
    if (v < -1e-12)
      throw ValidationError("avar: payoff must be nonnegative on the support; "
                            "found " + format_value(v));
    atoms.emplace_back(v, mu.weights[p]);
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  // mean of the worst alpha-tail; the boundary atom enters fractionally
  double mass = 0.0, sum = 0.0;
  for (const auto& [v, w] : atoms) {
    const double take = std::min(w, alpha - mass);
    if (take <= 0.0) break;
    sum += v * take;
    mass += take;
  }
  return sum / alpha;
}

// ---------------------------------------------------------------------------
// dual evaluator
// ---------------------------------------------------------------------------

void AvarParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("avar: alpha must lie in (0,1), got " +
                          format_value(alpha));
}

AvarDualEvaluator::AvarDualEvaluator(const ScenarioTree& mu,
                                     const PathFunctional& f,
                                     const CostSpec& c, double alpha,
                                     const CandidateGrids& grids,
                                     bool classical, long work_cap)
    : mu_(mu), alpha_(alpha), classical_(classical), horizon_(mu.horizon) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("avar: alpha must lie in (0,1), got " +
                          format_value(alpha));
  grids.validate(mu.horizon, mu.dims);
  grid_size_.resize(horizon_);
  for (int n = 0; n < horizon_; ++n)
    grid_size_[n] = static_cast<int>(grids.steps[n].size());
  n_prefix_ = 1;
  for (int n = 0; n + 1 < horizon_; ++n) n_prefix_ *= grid_size_[n];
  n_last_ = grid_size_[horizon_ - 1];
  const long n_ypaths = n_prefix_ * n_last_;

  leaf_ids_ = mu.leaves();
  const long n_leaves = static_cast<long>(leaf_ids_.size());
  if (n_leaves * n_ypaths > work_cap)
    throw CapExceededError(
        "avar: leaf x grid-path table needs " +
        std::to_string(n_leaves * n_ypaths) + " entries, cap is " +
        std::to_string(work_cap));
  leaf_prob_.resize(n_leaves);
  std::vector<Path> hists(n_leaves);
  for (long l = 0; l < n_leaves; ++l) {
    leaf_prob_[l] = mu.joint_prob(leaf_ids_[l]);
    hists[l] = mu.history(leaf_ids_[l]);
  }

  payoff_.resize(n_ypaths);
  cost_.resize(n_leaves * n_ypaths);
  Path buf(horizon_);
  long flat = 0;
  // prefix-major enumeration of grid paths
  auto walk = [&](auto&& self, int step) -> void {
    if (step == horizon_) {
      payoff_[flat] = f.eval(buf);
      for (long l = 0; l < n_leaves; ++l)
        cost_[l * n_ypaths + flat] = c.eval(hists[l], buf);
      ++flat;
      return;
    }
    for (const Vec& y : grids.steps[step]) {
      buf[step] = y;
      self(self, step + 1);
    }
  };
  walk(walk, 0);
  min_payoff_ = *std::min_element(payoff_.begin(), payoff_.end());
}

void AvarDualEvaluator::prepare(double lambda) {
  const long n_ypaths = n_prefix_ * n_last_;
  const long n_leaves = static_cast<long>(leaf_ids_.size());
  const double ia = 1.0 / alpha_;
  const double lowest = -std::numeric_limits<double>::infinity();
  const long tab_size = classical_ ? n_leaves : n_leaves * n_prefix_;
  tab_b_.assign(tab_size, lowest);
  tab_v_.assign(tab_size, lowest);
  for (long l = 0; l < n_leaves; ++l) {
    const double* crow = cost_.data() + l * n_ypaths;
    for (long j = 0; j < n_prefix_; ++j) {
      const long at = classical_ ? l : l * n_prefix_ + j;
      double b = tab_b_[at], v = tab_v_[at];
      const long base = j * n_last_;
      for (long i = 0; i < n_last_; ++i) {
        const double lc = lambda * crow[base + i];
        b = std::max(b, ia * payoff_[base + i] - lc);
        v = std::max(v, -lc);
      }
      tab_b_[at] = b;
      tab_v_[at] = v;
    }
  }
}

double AvarDualEvaluator::sweep(double gamma, bool clamp_only) const {
  const double ia_gamma = gamma / alpha_;
  auto term = [&](long at) {
    return clamp_only ? tab_v_[at]
                      : std::max(tab_b_[at] - ia_gamma, tab_v_[at]);
  };
  if (classical_) {
    double total = 0.0;
    for (std::size_t l = 0; l < leaf_ids_.size(); ++l)
      total += leaf_prob_[l] * term(static_cast<long>(l));
    return total;
  }
  std::vector<int> leaf_pos(mu_.nodes.size(), -1);
  for (std::size_t l = 0; l < leaf_ids_.size(); ++l)
    leaf_pos[leaf_ids_[l]] = static_cast<int>(l);
  auto rec = [&](auto&& self, int a, long j) -> double {
    const TreeNode& nd = mu_.nodes[a];
    if (nd.step == horizon_) return term(leaf_pos[a] * n_prefix_ + j);
    const int m = grid_size_[nd.step - 1];
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int b : mu_.children[a])
        s += mu_.nodes[b].prob * self(self, b, j * m + i);
      best = std::max(best, s);
    }
    return best;
  };
  double total = 0.0;
  for (int r : mu_.roots) total += mu_.nodes[r].prob * rec(rec, r, 0);
  return total;
}

double AvarDualEvaluator::dual_epart(double gamma) const {
  return sweep(gamma, false);
}

double AvarDualEvaluator::gamma_hi() const {
  return std::max(0.0, sweep(0.0, false) - sweep(0.0, true));
}

double AvarDualEvaluator::min_grid_payoff() const { return min_payoff_; }

// ---------------------------------------------------------------------------
// robust AVaR
// ---------------------------------------------------------------------------

DualSolveReport avar_robust(const ScenarioTree& mu, const PathFunctional& f,
                            const CostSpec& c, const AvarParams& params,
                            DroMode mode, const DualSolveOptions& opts) {
  params.validate();
  AvarDualEvaluator ev(mu, f, c, params.alpha, params.grids,
                       mode == DroMode::Classical);
  if (ev.min_grid_payoff() < -1e-9)
    throw ValidationError(
        "avar: payoff must be nonnegative on the candidate grid; minimum "
        "found " + format_value(ev.min_grid_payoff()));
  const Penalty& L = params.penalty;
  double cap = opts.lambda_cap;
  const ExtReal dom = L.lambda_domain_max();
  const bool domain_capped = dom.finite() && dom.v < cap;
  if (domain_capped) cap = dom.v;

  // The inner objective is piecewise linear in gamma, so its minimum sits at
  // a kink and the value error scales with the final bracket width; drive the
  // gamma search much tighter than the outer line search.
  MinimizeOptions inner_line = opts.line;
  inner_line.tol_rel = std::min(opts.line.tol_rel, 1e-12);
  double last_gamma = 0.0;
  auto inner = [&](double lam) -> double {
    ev.prepare(lam);
    const double ghi = ev.gamma_hi();
    if (ghi <= 0.0) {
      last_gamma = 0.0;
      return ev.dual_epart(0.0);
    }
    auto phi = [&](double g) -> ExtReal {
      return ExtReal(g + ev.dual_epart(g));
    };
    const MinimizeResult r = minimize_convex(phi, 0.0, ghi, inner_line);
    last_gamma = r.x;
    return r.value;
  };
  auto h = [&](double lam) -> ExtReal {
    const ExtReal conj = conjugate(L, lam);
    if (conj.inf) return ExtReal::infinity();
    return ExtReal(conj.v + inner(lam));
  };
  const MinimizeResult res = minimize_convex(h, 0.0, cap, opts.line);
  if (!res.found_finite)
    throw UnboundedError("avar dual: objective infinite at every probe");
  if (res.on_cap && !domain_capped)
    throw UnboundedError(
        "avar dual: objective still decreasing at the lambda cap; the "
        "payoff's growth is not controlled by the transport cost");
  DualSolveReport rep;
  rep.value = res.value;
  rep.lambda_star = res.x;
  rep.iterations = res.evals;
  rep.bracket_lo = res.bracket_lo;
  rep.bracket_hi = res.bracket_hi;
  rep.on_cap = res.on_cap;
  inner(res.x);  // restore the inner minimizer at lambda*
  rep.gamma_star = last_gamma;
  rep.probes.reserve(res.probes.size());
  for (const auto& [lam, hv] : res.probes)
    rep.probes.emplace_back(lam, hv - conjugate(L, lam).v);
  return rep;
}

// ---------------------------------------------------------------------------
// GBM discretization
// ---------------------------------------------------------------------------

void GbmSpec::validate() const {
  if (!(sigma > 0.0))
    throw ValidationError("gbm: sigma must be positive");
  if (!(s0 > 0.0)) throw ValidationError("gbm: s0 must be positive");
  if (times.empty())
    throw ValidationError("gbm: at least one observation time is required");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev))
      throw ValidationError(
          "gbm: observation times must be positive and strictly increasing");
    prev = t;
  }
  if (atoms < 1) throw ValidationError("gbm: atoms must be at least 1");
}

double norminv(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError("norminv: p must lie in (0,1)");
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double cl[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double dl[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((cl[0] * q + cl[1]) * q + cl[2]) * q + cl[3]) * q + cl[4]) * q +
         cl[5]) /
        ((((dl[0] * q + dl[1]) * q + dl[2]) * q + dl[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((cl[0] * q + cl[1]) * q + cl[2]) * q + cl[3]) * q + cl[4]) * q +
          cl[5]) /
        ((((dl[0] * q + dl[1]) * q + dl[2]) * q + dl[3]) * q + 1.0);
  }
  // Halley polish through the complementary error function
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  x -= u / (1.0 + x * u / 2.0);
  return x;
}

ScenarioTree gbm_tree(const GbmSpec& spec) {
  spec.validate();
  const int n_steps = static_cast<int>(spec.times.size());
  const int m = spec.atoms;
  ScenarioTree t;
  t.horizon = n_steps;
  t.dims.assign(n_steps, 1);
  std::vector<std::vector<double>> factor(n_steps);
  for (int k = 0; k < n_steps; ++k) {
    const double dt = spec.times[k] - (k ? spec.times[k - 1] : 0.0);
    for (int i = 0; i < m; ++i) {
      const double z = norminv((i + 0.5) / m);
      factor[k].push_back(
          std::exp(spec.sigma * std::sqrt(dt) * z - spec.sigma * spec.sigma * dt / 2.0));
    }
  }
  std::vector<std::pair<int, double>> frontier;  // node index, price
  for (int k = 0; k < n_steps; ++k) {
    std::vector<std::pair<int, double>> next;
    auto grow = [&](int parent_index, double price) {
      for (int i = 0; i < m; ++i) {
        TreeNode nd;
        nd.id = static_cast<int>(t.nodes.size());
        nd.parent = parent_index;
        nd.step = k + 1;
        nd.value = {price * factor[k][i]};
        nd.prob = 1.0 / m;
        t.nodes.push_back(nd);
        next.emplace_back(nd.id, nd.value[0]);
      }
    };
    if (k == 0) {
      grow(-1, spec.s0);
    } else {
      for (const auto& [idx, price] : frontier) grow(idx, price);
    }
    frontier = std::move(next);
  }
  t.finalize();
  return t;
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

std::vector<AvarExperimentRow> run_avar_experiment(const GbmSpec& spec,
                                                   double alpha, double delta,
                                                   double k_lo, double k_hi,
                                                   double k_step,
                                                   int points_per_dim) {
  spec.validate();
  if (delta < 0.0) throw ValidationError("avar experiment: delta must be >= 0");
  if (!(k_step > 0.0))
    throw ValidationError("avar experiment: strike step must be positive");
  const ScenarioTree tree = gbm_tree(spec);
  const PathMeasure pm = to_path_measure(tree);
  const CostSpec c = CostSpec::sqdist(tree.horizon);
  const double hw =
      delta > 0.0 ? default_grid_half_width(Penalty::ball(delta)) : 0.0;
  const CandidateGrids grids =
      make_grids(tree, hw, delta > 0.0 ? points_per_dim : 1, true);
  AvarParams params;
  params.alpha = alpha;
  params.penalty = Penalty::ball(delta);
  params.grids = grids;

  std::vector<AvarExperimentRow> rows;
  for (double k = k_lo; k <= k_hi + 1e-9; k += k_step) {
    const PathFunctional f = PathFunctional::custom([k](const Path& p) {
      return std::max(p.back()[0] - p.front()[0] + 1.0 - k, 0.0);
    });
    AvarExperimentRow row;
    row.strike = k;
    row.standard = avar_standard(pm, f, alpha);
    row.causal = avar_robust(tree, f, c, params, DroMode::Causal).value;
    row.classical = avar_robust(tree, f, c, params, DroMode::Classical).value;
    rows.push_back(row);
  }
  return rows;
}

std::string avar_experiment_csv(const std::vector<AvarExperimentRow>& rows) {
  std::string s = "strike,standard,causal,classical\n";
  for (const auto& r : rows)
    s += format_value(r.strike) + "," + format_value(r.standard) + "," +
         format_value(r.causal) + "," + format_value(r.classical) + "\n";
  return s;
}

}  // namespace treedro
