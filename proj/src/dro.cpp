#include "treedro/dro.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace treedro {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// golden-section maximization of a smooth 1-D function on [lo, hi]
double golden_max(const std::function<double(double)>& phi, double lo, double hi,
                  double best_seen) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c1 = b - invphi * (b - a), c2 = a + invphi * (b - a);
  double f1 = phi(c1), f2 = phi(c2);
  for (int it = 0; it < 120 && (b - a) > 1e-10 * (1.0 + std::fabs(a) + std::fabs(b));
       ++it) {
    if (f1 >= f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - invphi * (b - a);
      f1 = phi(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + invphi * (b - a);
      f2 = phi(c2);
    }
  }
  return std::max({best_seen, f1, f2, phi(0.5 * (a + b))});
}

// max_y { f_n(y) - lambda c_n(x, y) } over the step grid, optionally polished
// between the sorted 1-D neighbours of the discrete argmax
double stage_max(const PathFunctional& f, const GroundCost& gc, int n, int N,
                 double lambda, const Vec& x, const std::vector<Vec>& Y,
                 bool refine, const std::vector<double>& sorted_axis) {
  double best = kNegInf;
  std::size_t bestk = 0;
  for (std::size_t k = 0; k < Y.size(); ++k) {
    const double v = f.stage_eval(n, N, Y[k]) - lambda * gc.eval(x, Y[k]);
    if (v > best) {
      best = v;
      bestk = k;
    }
  }
  if (refine && x.size() == 1) {
    const double y0 = Y[bestk][0];
    auto it = std::lower_bound(sorted_axis.begin(), sorted_axis.end(), y0);
    double lo = y0, hi = y0;
    if (it != sorted_axis.begin()) lo = *(it - 1);
    if (it + 1 != sorted_axis.end()) hi = *(it + 1);
    if (hi > lo) {
      auto phi = [&](double y) {
        Vec yv{y};
        return f.stage_eval(n, N, yv) - lambda * gc.eval(x, yv);
      };
      best = golden_max(phi, lo, hi, best);
    }
  }
  return best;
}

// shared separable fast path: adapted and anticipative evaluators coincide
double separable_value(const ScenarioTree& t, const PathFunctional& f,
                       const CostSpec& c, double lambda,
                       const CandidateGrids& grids, bool refine) {
  const int N = t.horizon;
  double total = 0.0;
  for (int n = 1; n <= N; ++n) {
    const auto& Y = grids.steps[n - 1];
    const GroundCost& gc = c.step(n);
    std::vector<double> axis;
    if (refine && t.dims[n - 1] == 1) {
      axis.reserve(Y.size());
      for (const Vec& y : Y) axis.push_back(y[0]);
      std::sort(axis.begin(), axis.end());
    }
    for (int idx : t.nodes_at_step(n)) {
      const double jp = t.joint_prob(idx);
      total += jp * stage_max(f, gc, n, N, lambda, t.nodes[idx].value, Y, refine,
                              axis);
    }
  }
  return total;
}

long general_work_bound(const ScenarioTree& t, const CandidateGrids& grids) {
  long pipe = 1, work = 0;
  for (int n = 1; n <= t.horizon; ++n) {
    const long ys = static_cast<long>(grids.steps[n - 1].size());
    if (pipe > (1L << 56) / std::max(ys, 1L)) return 1L << 56;
    pipe *= ys;
    const long nodes = static_cast<long>(t.nodes_at_step(n).size());
    work += nodes * pipe;
    if (work < 0 || work > (1L << 56)) return 1L << 56;
  }
  return work;
}

void check_refine_supported(const PathFunctional& f, const CostSpec& c,
                            bool refine) {
  if (refine && !(f.stage_additive() && c.is_separable()))
    throw ValidationError(
        "grid refinement requires a stage-additive payoff and separable cost");
}

}  // namespace

void CandidateGrids::validate(int horizon, const std::vector<int>& dims) const {
  if (static_cast<int>(steps.size()) != horizon)
    throw ValidationError("candidate grids: need one value set per step");
  for (int n = 0; n < horizon; ++n) {
    if (steps[n].empty())
      throw ValidationError("candidate grids: empty set at step " +
                            std::to_string(n + 1));
    for (const Vec& v : steps[n])
      if (static_cast<int>(v.size()) != dims[n])
        throw ValidationError("candidate grids: dims mismatch at step " +
                              std::to_string(n + 1));
  }
}

long CandidateGrids::path_count() const {
  long c = 1;
  for (const auto& s : steps) {
    const long k = static_cast<long>(s.size());
    if (k == 0) return 0;
    if (c > (1L << 50) / k) return 1L << 50;
    c *= k;
  }
  return c;
}

std::vector<Path> CandidateGrids::all_paths(long cap) const {
  const long total = path_count();
  if (total > cap)
    throw CapExceededError("candidate grid spans " + std::to_string(total) +
                           " paths, cap " + std::to_string(cap));
  std::vector<Path> out;
  out.reserve(static_cast<std::size_t>(total));
  Path cur(steps.size());
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == steps.size()) {
      out.push_back(cur);
      return;
    }
    for (const Vec& v : steps[k]) {
      cur[k] = v;
      rec(k + 1);
    }
  };
  if (!steps.empty()) rec(0);
  return out;
}

CandidateGrids make_grids(const ScenarioTree& mu, double half_width,
                          int points_per_dim, bool cover_support) {
  if (half_width < 0.0) throw ValidationError("grid half-width must be >= 0");
  if (points_per_dim < 1) throw ValidationError("grid needs >= 1 point per dim");
  CandidateGrids g;
  g.steps.resize(mu.horizon);
  for (int n = 1; n <= mu.horizon; ++n) {
    const int d = mu.dims[n - 1];
    std::vector<Vec> support;
    for (int idx : mu.nodes_at_step(n)) {
      const Vec& v = mu.nodes[idx].value;
      bool seen = false;
      for (const Vec& s : support) {
        bool close = true;
        for (int k = 0; k < d; ++k)
          if (std::fabs(s[k] - v[k]) > 1e-9) {
            close = false;
            break;
          }
        if (close) {
          seen = true;
          break;
        }
      }
      if (!seen) support.push_back(v);
    }
    Vec lo(d, std::numeric_limits<double>::infinity());
    Vec hi(d, -std::numeric_limits<double>::infinity());
    for (const Vec& v : support)
      for (int k = 0; k < d; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
    std::vector<std::vector<double>> axes(d);
    for (int k = 0; k < d; ++k) {
      const double a = lo[k] - half_width, b = hi[k] + half_width;
      if (points_per_dim == 1) {
        axes[k] = {0.5 * (a + b)};
      } else {
        for (int i = 0; i < points_per_dim; ++i)
          axes[k].push_back(a + (b - a) * i / (points_per_dim - 1));
      }
    }
    std::vector<Vec>& out = g.steps[n - 1];
    if (cover_support) out = support;
    std::vector<int> pos(d, 0);
    for (;;) {
      Vec v(d);
      for (int k = 0; k < d; ++k) v[k] = axes[k][pos[k]];
      bool dup = false;
      for (const Vec& s : out) {
        bool close = true;
        for (int k = 0; k < d; ++k)
          if (std::fabs(s[k] - v[k]) > 1e-9) {
            close = false;
            break;
          }
        if (close) {
          dup = true;
          break;
        }
      }
      if (!dup) out.push_back(v);
      int k = d - 1;
      while (k >= 0 && ++pos[k] == static_cast<int>(axes[k].size())) {
        pos[k] = 0;
        --k;
      }
      if (k < 0) break;
    }
  }
  return g;
}

double default_grid_half_width(const Penalty& L) {
  switch (L.kind) {
    case Penalty::Kind::Ball:
      return 3.0 * std::sqrt(L.param);
    case Penalty::Kind::Linear:
      return 3.0 / std::sqrt(L.param);
    case Penalty::Kind::Quadratic:
      return 3.0 * std::sqrt(L.param);
  }
  return 1.0;
}

double nested_dual_value(const ScenarioTree& mu, const PathFunctional& f,
                         const CostSpec& c, double lambda,
                         const CandidateGrids& grids, bool refine,
                         long work_cap) {
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  grids.validate(mu.horizon, mu.dims);
  check_refine_supported(f, c, refine);
  if (f.stage_additive() && c.is_separable())
    return separable_value(mu, f, c, lambda, grids, refine);

  if (general_work_bound(mu, grids) > work_cap)
    throw CapExceededError("nested evaluation too large for the work cap");
  const int N = mu.horizon;
  std::vector<Path> hist(mu.nodes.size());
  for (int leaf : mu.leaves()) hist[leaf] = mu.history(leaf);

  Path ypfx;
  ypfx.reserve(N);
  std::function<double(int)> rec = [&](int node) -> double {
    const int step = mu.nodes[node].step;
    double best = kNegInf;
    for (const Vec& y : grids.steps[step - 1]) {
      ypfx.push_back(y);
      double v;
      if (step == N) {
        v = f.eval(ypfx) - lambda * c.eval(hist[node], ypfx);
      } else {
        v = 0.0;
        for (int ch : mu.children[node]) v += mu.nodes[ch].prob * rec(ch);
      }
      ypfx.pop_back();
      best = std::max(best, v);
    }
    return best;
  };
  double total = 0.0;
  for (int r : mu.roots) total += mu.nodes[r].prob * rec(r);
  return total;
}

double classical_dual_value(const ScenarioTree& mu, const PathFunctional& f,
                            const CostSpec& c, double lambda,
                            const CandidateGrids& grids, bool refine,
                            long work_cap) {
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  grids.validate(mu.horizon, mu.dims);
  check_refine_supported(f, c, refine);
  if (f.stage_additive() && c.is_separable())
    return separable_value(mu, f, c, lambda, grids, refine);

  const PathMeasure pm = to_path_measure(mu);
  const long leaves = static_cast<long>(pm.paths.size());
  const long ypaths = grids.path_count();
  if (leaves > 0 && ypaths > work_cap / leaves)
    throw CapExceededError("classical evaluation too large for the work cap");
  const std::vector<Path> ys = grids.all_paths(work_cap);
  std::vector<double> fy(ys.size());
  for (std::size_t j = 0; j < ys.size(); ++j) fy[j] = f.eval(ys[j]);
  double total = 0.0;
  for (std::size_t i = 0; i < pm.paths.size(); ++i) {
    double best = kNegInf;
    for (std::size_t j = 0; j < ys.size(); ++j)
      best = std::max(best, fy[j] - lambda * c.eval(pm.paths[i], ys[j]));
    total += pm.weights[i] * best;
  }
  return total;
}

std::string report_to_json(const DualSolveReport& rep) {
  nlohmann::json j;
  j["value"] = rep.value;
  j["lambda_star"] = rep.lambda_star;
  if (rep.gamma_star) j["gamma_star"] = *rep.gamma_star;
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& [lam, d] : rep.probes) probes.push_back({lam, d});
  j["probes"] = probes;
  j["iterations"] = rep.iterations;
  j["bracket"] = {rep.bracket_lo, rep.bracket_hi};
  j["on_cap"] = rep.on_cap;
  if (rep.oracle_gap) j["oracle_gap"] = *rep.oracle_gap;
  return j.dump(2);
}

DualSolveReport solve_penalized(const ScenarioTree& mu, const PathFunctional& f,
                                const CostSpec& c, const Penalty& L,
                                const CandidateGrids& grids, DroMode mode,
                                const DualSolveOptions& opts) {
  grids.validate(mu.horizon, mu.dims);
  auto D = [&](double lam) {
    return mode == DroMode::Causal
               ? nested_dual_value(mu, f, c, lam, grids, opts.refine)
               : classical_dual_value(mu, f, c, lam, grids, opts.refine);
  };
  double cap = opts.lambda_cap;
  const ExtReal dom = L.lambda_domain_max();
  const bool domain_capped = dom.finite() && dom.v < cap;
  if (domain_capped) cap = dom.v;
  auto h = [&](double lam) -> ExtReal {
    const ExtReal conj = conjugate(L, lam);
    if (conj.inf) return ExtReal::infinity();
    return ExtReal(conj.v + D(lam));
  };
  const MinimizeResult res = minimize_convex(h, 0.0, cap, opts.line);
  if (!res.found_finite)
    throw UnboundedError("penalized dual: objective infinite at every probe");
  if (res.on_cap && !domain_capped)
    throw UnboundedError(
        "penalized dual: objective still decreasing at the lambda cap; the "
        "payoff's growth is not controlled by the transport cost");
  DualSolveReport rep;
  rep.value = res.value;
  rep.lambda_star = res.x;
  rep.iterations = res.evals;
  rep.bracket_lo = res.bracket_lo;
  rep.bracket_hi = res.bracket_hi;
  rep.on_cap = res.on_cap;
  rep.probes.reserve(res.probes.size());
  for (const auto& [lam, hv] : res.probes)
    rep.probes.emplace_back(lam, hv - conjugate(L, lam).v);
  return rep;
}

std::vector<std::pair<double, double>> radius_curve(
    const ScenarioTree& mu, const PathFunctional& f, const CostSpec& c,
    const std::vector<double>& deltas, const CandidateGrids& grids, DroMode mode,
    const DualSolveOptions& opts) {
  std::vector<std::pair<double, double>> out;
  out.reserve(deltas.size());
  for (double d : deltas) {
    const DualSolveReport rep =
        solve_penalized(mu, f, c, Penalty::ball(d), grids, mode, opts);
    out.emplace_back(d, rep.value);
  }
  return out;
}

std::string radius_curve_csv(const std::vector<std::pair<double, double>>& curve) {
  std::string s = "delta,value\n";
  for (const auto& [d, v] : curve)
    s += format_value(d) + "," + format_value(v) + "\n";
  return s;
}

}  // namespace treedro
