#include "treedro/transport.hpp"

#include "treedro/lp.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

namespace treedro {

namespace {

bool validate_one_direction(const PathMeasure& A, const PathMeasure& B,
                            const std::vector<std::tuple<int, int, double>>& ent,
                            double tol) {
  const int N = A.horizon;
  const int PA = static_cast<int>(A.paths.size());
  for (int n = 1; n <= N - 1; ++n) {
    int ng = 0, nc = 0;
    const std::vector<int> ga = group_paths_by_prefix(A.paths, n, 1e-9, &ng);
    const std::vector<int> cb = group_paths_by_prefix(B.paths, n, 1e-9, &nc);

    std::vector<double> M(static_cast<std::size_t>(PA) * nc, 0.0);
    for (const auto& [p, q, m] : ent)
      M[static_cast<std::size_t>(p) * nc + cb[q]] += m;

    std::vector<std::vector<int>> members(ng);
    for (int i = 0; i < PA; ++i) members[ga[i]].push_back(i);
    for (const auto& g : members) {
      for (std::size_t u = 0; u < g.size(); ++u) {
        for (std::size_t v = u + 1; v < g.size(); ++v) {
          const double wu = A.weights[g[u]], wv = A.weights[g[v]];
          for (int c = 0; c < nc; ++c) {
            const double r = M[static_cast<std::size_t>(g[u]) * nc + c] * wv -
                             M[static_cast<std::size_t>(g[v]) * nc + c] * wu;
            if (std::fabs(r) > tol) return false;
          }
        }
      }
    }
  }
  return true;
}

std::vector<int> leaf_to_path_index(const ScenarioTree& t, const PathMeasure& pm) {
  std::map<std::vector<double>, int> by_flat;
  for (std::size_t i = 0; i < pm.paths.size(); ++i) {
    std::vector<double> flat;
    for (const Vec& v : pm.paths[i]) flat.insert(flat.end(), v.begin(), v.end());
    by_flat[flat] = static_cast<int>(i);
  }
  std::vector<int> out(t.nodes.size(), -1);
  for (int leaf : t.leaves()) {
    std::vector<double> flat;
    for (const Vec& v : t.history(leaf)) flat.insert(flat.end(), v.begin(), v.end());
    auto it = by_flat.find(flat);
    if (it == by_flat.end())
      throw ValidationError("bicausal transport: tree leaf lost its source path");
    out[leaf] = it->second;
  }
  return out;
}

}  // namespace

Coupling ot_classic(const PathMeasure& mu, const PathMeasure& nu,
                    const CostSpec& cost, int max_side) {
  mu.validate();
  nu.validate();
  if (mu.horizon != nu.horizon)
    throw ValidationError("transport: horizons differ");
  const int P = static_cast<int>(mu.paths.size());
  const int Q = static_cast<int>(nu.paths.size());
  if (P > max_side || Q > max_side)
    throw CapExceededError("classical transport cap: " + std::to_string(P) + "x" +
                           std::to_string(Q) + " exceeds " +
                           std::to_string(max_side) + " paths per side");
  std::vector<double> C(static_cast<std::size_t>(P) * Q);
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < Q; ++q)
      C[static_cast<std::size_t>(p) * Q + q] = cost.eval(mu.paths[p], nu.paths[q]);
  auto sol = solve_transport_min(mu.weights, nu.weights, C);
  Coupling out;
  out.mu = mu;
  out.nu = nu;
  out.entries = sol.flows;
  out.cost = sol.value;
  return out;
}

Coupling ot_bicausal(const PathMeasure& mu, const PathMeasure& nu,
                     const CostSpec& cost) {
  mu.validate();
  nu.validate();
  if (mu.horizon != nu.horizon)
    throw ValidationError("transport: horizons differ");
  const int N = mu.horizon;
  const ScenarioTree ta = tree_from_paths(mu);
  const ScenarioTree tb = tree_from_paths(nu);
  const std::vector<int> leaf2mu = leaf_to_path_index(ta, mu);
  const std::vector<int> leaf2nu = leaf_to_path_index(tb, nu);

  // histories for leaf-level cost evaluation
  std::vector<Path> hist_a(ta.nodes.size()), hist_b(tb.nodes.size());
  for (int leaf : ta.leaves()) hist_a[leaf] = ta.history(leaf);
  for (int leaf : tb.leaves()) hist_b[leaf] = tb.history(leaf);

  // per node pair (a, b): optimal coupling of their child distributions,
  // entries as (child node of a, child node of b, conditional mass)
  std::unordered_map<std::uint64_t, std::vector<std::tuple<int, int, double>>>
      pair_flows;
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };

  // backward sweep: C holds values for the step below, indexed by position
  std::vector<double> C_next;
  std::vector<int> posa_next(ta.nodes.size(), -1), posb_next(tb.nodes.size(), -1);
  std::vector<int> na_next, nb_next;

  for (int n = N; n >= 1; --n) {
    const std::vector<int> na = ta.nodes_at_step(n);
    const std::vector<int> nb = tb.nodes_at_step(n);
    std::vector<double> C(static_cast<std::size_t>(na.size()) * nb.size());
    for (std::size_t i = 0; i < na.size(); ++i) {
      for (std::size_t j = 0; j < nb.size(); ++j) {
        const int a = na[i], b = nb[j];
        double val;
        if (n == N) {
          val = cost.eval(hist_a[a], hist_b[b]);
        } else {
          const std::vector<int>& ca = ta.children[a];
          const std::vector<int>& cb = tb.children[b];
          std::vector<double> sup(ca.size()), dem(cb.size());
          for (std::size_t u = 0; u < ca.size(); ++u) sup[u] = ta.nodes[ca[u]].prob;
          for (std::size_t v = 0; v < cb.size(); ++v) dem[v] = tb.nodes[cb[v]].prob;
          std::vector<double> cc(ca.size() * cb.size());
          for (std::size_t u = 0; u < ca.size(); ++u)
            for (std::size_t v = 0; v < cb.size(); ++v)
              cc[u * cb.size() + v] =
                  C_next[static_cast<std::size_t>(posa_next[ca[u]]) * nb_next.size() +
                         posb_next[cb[v]]];
          auto sol = solve_transport_min(sup, dem, cc);
          val = sol.value;
          auto& fl = pair_flows[key(a, b)];
          fl.reserve(sol.flows.size());
          for (const auto& [u, v, m] : sol.flows)
            fl.emplace_back(ca[u], cb[v], m);
        }
        C[i * nb.size() + j] = val;
      }
    }
    C_next = std::move(C);
    na_next = na;
    nb_next = nb;
    std::fill(posa_next.begin(), posa_next.end(), -1);
    std::fill(posb_next.begin(), posb_next.end(), -1);
    for (std::size_t i = 0; i < na.size(); ++i) posa_next[na[i]] = static_cast<int>(i);
    for (std::size_t j = 0; j < nb.size(); ++j) posb_next[nb[j]] = static_cast<int>(j);
  }

  // root coupling over the initial laws
  std::vector<double> sup(ta.roots.size()), dem(tb.roots.size());
  for (std::size_t u = 0; u < ta.roots.size(); ++u) sup[u] = ta.nodes[ta.roots[u]].prob;
  for (std::size_t v = 0; v < tb.roots.size(); ++v) dem[v] = tb.nodes[tb.roots[v]].prob;
  std::vector<double> rc(sup.size() * dem.size());
  for (std::size_t u = 0; u < sup.size(); ++u)
    for (std::size_t v = 0; v < dem.size(); ++v)
      rc[u * dem.size() + v] =
          C_next[static_cast<std::size_t>(posa_next[ta.roots[u]]) * nb_next.size() +
                 posb_next[tb.roots[v]]];
  auto root_sol = solve_transport_min(sup, dem, rc);

  // push masses down through the per-pair couplings
  std::map<std::pair<int, int>, double> leaf_mass;
  std::vector<std::tuple<int, int, double>> stack;
  for (const auto& [u, v, m] : root_sol.flows)
    stack.emplace_back(ta.roots[u], tb.roots[v], m);
  while (!stack.empty()) {
    auto [a, b, w] = stack.back();
    stack.pop_back();
    if (ta.is_leaf(a)) {
      leaf_mass[{leaf2mu[a], leaf2nu[b]}] += w;
      continue;
    }
    for (const auto& [cu, cv, m] : pair_flows.at(key(a, b)))
      stack.emplace_back(cu, cv, w * m);
  }

  Coupling out;
  out.mu = mu;
  out.nu = nu;
  out.cost = root_sol.value;
  for (const auto& [pq, m] : leaf_mass)
    if (m > 0.0) out.entries.emplace_back(pq.first, pq.second, m);
  return out;
}

bool validate_causal(const Coupling& pi, Direction dir, double tol) {
  if (dir == Direction::Forward)
    return validate_one_direction(pi.mu, pi.nu, pi.entries, tol);
  std::vector<std::tuple<int, int, double>> flipped;
  flipped.reserve(pi.entries.size());
  for (const auto& [p, q, m] : pi.entries) flipped.emplace_back(q, p, m);
  return validate_one_direction(pi.nu, pi.mu, flipped, tol);
}

void coupling_to_csv(const Coupling& pi, std::ostream& os) {
  os << "mu_path_index,nu_path_index,weight\n";
  for (const auto& [p, q, m] : pi.entries)
    os << p << "," << q << "," << format_value(m) << "\n";
}

}  // namespace treedro
