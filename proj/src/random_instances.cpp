#include "treedro/random_instances.hpp"

#include <algorithm>
#include <cmath>

namespace treedro {

namespace {

// k distinct lattice values v/8, v integer
std::vector<double> distinct_lattice(Rng& rng, int k, int lo, int hi) {
  std::vector<int> pool;
  for (int v = lo; v <= hi; ++v) pool.push_back(v);
  std::vector<double> out;
  for (int i = 0; i < k; ++i) {
    const int j = rng.uniform_int(0, static_cast<int>(pool.size()) - 1);
    out.push_back(pool[j] / 8.0);
    pool.erase(pool.begin() + j);
  }
  return out;
}

std::vector<double> random_probs(Rng& rng, int k) {
  std::vector<double> w(k);
  double total = 0.0;
  for (double& x : w) {
    x = 0.15 + rng.u01();
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

// clamped piecewise-linear interpolation through (xs, vs); flat beyond the
// ends, so suprema stay finite at every lambda
std::function<double(double)> pw_linear(std::vector<double> xs,
                                        std::vector<double> vs) {
  return [xs = std::move(xs), vs = std::move(vs)](double x) {
    if (x <= xs.front()) return vs.front();
    if (x >= xs.back()) return vs.back();
    std::size_t i = 1;
    while (xs[i] < x) ++i;
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return vs[i - 1] + t * (vs[i] - vs[i - 1]);
  };
}

}  // namespace

RandomInstance random_plain_instance(Rng& rng, int horizon, int max_branch,
                                     int alphabet_size, int dims) {
  if (dims < 1) throw ValidationError("random_plain_instance: dims must be >= 1");
  RandomInstance inst;
  // alphabet entries have distinct first coordinates; the rest are free draws
  std::vector<std::vector<Vec>> alpha(horizon);
  for (int n = 0; n < horizon; ++n) {
    const std::vector<double> first = distinct_lattice(rng, alphabet_size, -20, 20);
    for (double v : first) {
      Vec entry{v};
      for (int d = 1; d < dims; ++d)
        entry.push_back(rng.uniform_int(-20, 20) / 8.0);
      alpha[n].push_back(std::move(entry));
    }
  }

  ScenarioTree& t = inst.tree;
  t.horizon = horizon;
  t.dims.assign(horizon, dims);

  // grow level by level; each sibling group picks distinct alphabet entries
  std::vector<int> frontier;  // node indices of the previous step
  for (int n = 1; n <= horizon; ++n) {
    std::vector<int> next;
    const auto& values = alpha[n - 1];
    const int max_k = std::min(max_branch, static_cast<int>(values.size()));
    auto grow = [&](int parent_index) {
      const int k = rng.uniform_int(1, max_k);
      std::vector<int> picks;
      {
        std::vector<int> pool(values.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int>(i);
        for (int i = 0; i < k; ++i) {
          const int j = rng.uniform_int(0, static_cast<int>(pool.size()) - 1);
          picks.push_back(pool[j]);
          pool.erase(pool.begin() + j);
        }
      }
      const std::vector<double> probs = random_probs(rng, k);
      for (int i = 0; i < k; ++i) {
        TreeNode nd;
        nd.id = static_cast<int>(t.nodes.size());
        nd.parent = parent_index;
        nd.step = n;
        nd.value = values[picks[i]];
        nd.prob = probs[i];
        t.nodes.push_back(nd);
        next.push_back(nd.id);
      }
    };
    if (n == 1) {
      grow(-1);
    } else {
      for (int p : frontier) grow(p);
    }
    frontier = std::move(next);
  }
  t.finalize();

  inst.alphabets = std::move(alpha);
  for (auto& level : inst.alphabets)
    std::sort(level.begin(), level.end(),
              [](const Vec& a, const Vec& b) { return a[0] < b[0]; });
  return inst;
}

PathFunctional random_payoff(Rng& rng) {
  const double K = rng.uniform(0.3, 1.5);
  switch (rng.uniform_int(0, 3)) {
    case 0:
      return PathFunctional::lookback_call(K);
    case 1:
      return PathFunctional::calendar_spread(K);
    case 2:
      return PathFunctional::terminal_quadratic();
    default:
      return PathFunctional::sum_quadratic();
  }
}

CostSpec random_cost(Rng& rng, int horizon) {
  return rng.u01() < 0.75 ? CostSpec::sqdist(horizon) : CostSpec::dist(horizon);
}

ControlProblem random_mdp(Rng& rng, int horizon, int n_states, int n_actions) {
  ControlProblem pb;
  pb.horizon = horizon;
  pb.state_grids.resize(horizon);
  for (auto& g : pb.state_grids) {
    g = distinct_lattice(rng, n_states, -12, 12);
    std::sort(g.begin(), g.end());
  }
  for (int n = 0; n + 1 < horizon; ++n) {
    pb.actions.push_back(distinct_lattice(rng, n_actions, -8, 8));

    const int atoms = rng.uniform_int(1, 2);
    std::vector<double> w = distinct_lattice(rng, atoms, -6, 6);
    std::vector<double> p = random_probs(rng, atoms);
    std::vector<std::pair<double, double>> nz;
    for (int i = 0; i < atoms; ++i) nz.emplace_back(w[i], p[i]);
    pb.noise.push_back(nz);

    Dynamics dyn;
    dyn.A = rng.uniform(-1.25, 1.25);
    dyn.B = rng.uniform(-1.25, 1.25);
    pb.dynamics.push_back(dyn);

    const double cu = rng.uniform(0.1, 1.5), cx = rng.uniform(0.0, 1.0);
    pb.stage_cost.push_back(
        [cu, cx](double x, double u) { return cu * u * u + cx * x * x; });
  }
  pb.obs_cost.resize(horizon);
  for (int n = 0; n < horizon; ++n) {
    if (rng.u01() < 0.5) {
      pb.obs_cost[n] = ObsCost::quadratic();
    } else {
      std::vector<double> xs{-4.0, -1.5, 0.0, 1.5, 4.0};
      std::vector<double> vs(xs.size());
      for (double& v : vs) v = rng.uniform(-2.0, 2.0);
      pb.obs_cost[n] = ObsCost::custom(pw_linear(xs, vs));
    }
  }
  {
    const int k = rng.uniform_int(1, std::min(2, n_states));
    std::vector<double> p = random_probs(rng, k);
    for (int i = 0; i < k; ++i) pb.initial.emplace_back(pb.state_grids[0][i], p[i]);
  }
  pb.validate();
  return pb;
}

StagePayoffs random_stage_payoffs(Rng& rng, int horizon) {
  StagePayoffs sp;
  for (int n = 0; n < horizon; ++n) {
    const double a = rng.uniform(-1.0, 1.5);
    const double b = rng.uniform(-1.0, 1.0);
    const double c = rng.uniform(-0.5, 1.5);
    sp.fns.push_back([a, b, c](const Path& hist) {
      const double x = hist.back()[0];
      return a * x * x + b * x + c;
    });
  }
  return sp;
}

}  // namespace treedro
