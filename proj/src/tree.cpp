#include "treedro/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

namespace treedro {

std::string format_value(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// ScenarioTree structure
// ---------------------------------------------------------------------------

void ScenarioTree::finalize() {
  const int n = static_cast<int>(nodes.size());
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  if (static_cast<int>(dims.size()) != horizon)
    throw ValidationError("dims length != horizon");
  if (n == 0) throw ValidationError("empty tree");

  std::map<int, int> seen;
  for (int i = 0; i < n; ++i) {
    if (!seen.emplace(nodes[i].id, i).second)
      throw ValidationError("duplicate node id " + std::to_string(nodes[i].id));
  }

  children.assign(n, {});
  roots.clear();
  for (int i = 0; i < n; ++i) {
    const TreeNode& nd = nodes[i];
    if (nd.step < 1 || nd.step > horizon)
      throw ValidationError("node id " + std::to_string(nd.id) +
                            ": step out of range");
    if (static_cast<int>(nd.value.size()) != dims[nd.step - 1])
      throw ValidationError("node id " + std::to_string(nd.id) +
                            ": value dimension mismatch");
    if (!(nd.prob > 0.0) || !std::isfinite(nd.prob))
      throw ValidationError("node id " + std::to_string(nd.id) +
                            ": prob must be > 0");
    if (nd.parent < 0) {
      if (nd.step != 1)
        throw ValidationError("node id " + std::to_string(nd.id) +
                              ": no parent but step != 1");
      roots.push_back(i);
    } else {
      if (nd.parent >= n)
        throw ValidationError("node id " + std::to_string(nd.id) +
                              ": dangling parent");
      if (nodes[nd.parent].step + 1 != nd.step)
        throw ValidationError("node id " + std::to_string(nd.id) +
                              ": step != parent step + 1");
      children[nd.parent].push_back(i);
    }
  }
  if (roots.empty()) throw ValidationError("tree has no root nodes");

  auto check_group = [](const std::vector<int>& group,
                        const std::vector<TreeNode>& nodes, const char* what) {
    double s = 0.0;
    for (int i : group) s += nodes[i].prob;
    if (std::fabs(s - 1.0) > 1e-12)
      throw ValidationError(std::string(what) + " probabilities sum " +
                            format_value(s) + " != 1");
  };
  check_group(roots, nodes, "root");
  for (int i = 0; i < n; ++i) {
    if (nodes[i].step < horizon) {
      if (children[i].empty())
        throw ValidationError("node id " + std::to_string(nodes[i].id) +
                              ": interior node without children");
      check_group(children[i], nodes, "sibling");
    } else if (!children[i].empty()) {
      throw ValidationError("node id " + std::to_string(nodes[i].id) +
                            ": leaf at final step has children");
    }
  }
}

int ScenarioTree::index_of_id(int id) const {
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (nodes[i].id == id) return i;
  return -1;
}

Path ScenarioTree::history(int idx) const {
  Path p;
  for (int i = idx; i >= 0; i = nodes[i].parent) p.push_back(nodes[i].value);
  std::reverse(p.begin(), p.end());
  return p;
}

double ScenarioTree::joint_prob(int idx) const {
  double w = 1.0;
  for (int i = idx; i >= 0; i = nodes[i].parent) w *= nodes[i].prob;
  return w;
}

std::vector<int> ScenarioTree::nodes_at_step(int step) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (nodes[i].step == step) out.push_back(i);
  return out;
}

ScenarioTree ScenarioTree::subtree(int root_idx) const {
  ScenarioTree s;
  s.horizon = horizon - nodes[root_idx].step + 1;
  s.dims.assign(dims.begin() + (nodes[root_idx].step - 1), dims.end());
  // BFS keeps parent-before-child ordering
  std::vector<int> order{root_idx};
  std::vector<int> new_index(nodes.size(), -1);
  for (std::size_t k = 0; k < order.size(); ++k) {
    new_index[order[k]] = static_cast<int>(k);
    for (int c : children[order[k]]) order.push_back(c);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    const TreeNode& src = nodes[order[k]];
    TreeNode nd;
    nd.id = static_cast<int>(k);
    nd.step = src.step - nodes[root_idx].step + 1;
    nd.value = src.value;
    nd.prob = (order[k] == root_idx) ? 1.0 : src.prob;
    nd.parent = (order[k] == root_idx) ? -1 : new_index[src.parent];
    s.nodes.push_back(nd);
  }
  s.finalize();
  return s;
}

// ---------------------------------------------------------------------------
// JSON I/O
// ---------------------------------------------------------------------------

ScenarioTree load_tree(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("tree JSON parse error: ") + e.what());
  }
  ScenarioTree t;
  try {
    t.horizon = j.at("horizon").get<int>();
    t.dims = j.at("dims").get<std::vector<int>>();
    std::map<int, int> id_to_index;
    const auto& arr = j.at("nodes");
    if (!arr.is_array()) throw ValidationError("\"nodes\" must be an array");
    int k = 0;
    for (const auto& nj : arr) {
      TreeNode nd;
      nd.id = nj.at("id").get<int>();
      nd.step = nj.at("step").get<int>();
      nd.value = nj.at("value").get<Vec>();
      nd.prob = nj.at("prob").get<double>();
      nd.parent = -2;  // resolved below
      if (nj.at("parent").is_null()) nd.parent = -1;
      t.nodes.push_back(nd);
      id_to_index[nd.id] = k++;
    }
    // resolve parent ids to indices in a second pass (any node order accepted)
    k = 0;
    for (const auto& nj : arr) {
      if (!nj.at("parent").is_null()) {
        const int pid = nj.at("parent").get<int>();
        auto it = id_to_index.find(pid);
        if (it == id_to_index.end())
          throw ValidationError("node id " + std::to_string(t.nodes[k].id) +
                                ": dangling parent id " + std::to_string(pid));
        t.nodes[k].parent = it->second;
      }
      ++k;
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("tree JSON schema violation: ") +
                          e.what());
  }
  t.finalize();
  return t;
}

std::string save_tree(const ScenarioTree& t) {
  nlohmann::json j;
  j["horizon"] = t.horizon;
  j["dims"] = t.dims;
  j["nodes"] = nlohmann::json::array();
  for (const TreeNode& nd : t.nodes) {
    nlohmann::json nj;
    nj["id"] = nd.id;
    nj["parent"] =
        nd.parent < 0 ? nlohmann::json(nullptr) : nlohmann::json(t.nodes[nd.parent].id);
    nj["step"] = nd.step;
    nj["value"] = nd.value;
    nj["prob"] = nd.prob;
    j["nodes"].push_back(nj);
  }
  return j.dump();
}

// ---------------------------------------------------------------------------
// flattening and kernels
// ---------------------------------------------------------------------------

PathMeasure to_path_measure(const ScenarioTree& t) {
  PathMeasure pm;
  pm.horizon = t.horizon;
  pm.dims = t.dims;
  for (int leaf : t.leaves()) {
    pm.paths.push_back(t.history(leaf));
    pm.weights.push_back(t.joint_prob(leaf));
  }
  pm.validate();
  return pm;
}

void PathMeasure::validate() const {
  if (paths.size() != weights.size() || paths.empty())
    throw ValidationError("path measure: empty or mismatched atoms");
  double s = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ValidationError("path measure: weight <= 0");
    s += w;
  }
  if (std::fabs(s - 1.0) > 1e-12)
    throw ValidationError("path measure: weights sum " + format_value(s) +
                          " != 1");
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (std::size_t k = i + 1; k < paths.size(); ++k)
      if (paths[i] == paths[k])
        throw ValidationError("path measure: duplicate path atoms");
}

std::vector<std::pair<Vec, double>> kernel(const ScenarioTree& t, int node_id) {
  const int idx = t.index_of_id(node_id);
  if (idx < 0)
    throw ValidationError("kernel: unknown node id " + std::to_string(node_id));
  if (t.is_leaf(idx))
    throw ValidationError("kernel: node id " + std::to_string(node_id) +
                          " is a leaf");
  std::vector<std::pair<Vec, double>> out;
  for (int c : t.children[idx])
    out.emplace_back(t.nodes[c].value, t.nodes[c].prob);
  return out;
}

// ---------------------------------------------------------------------------
// canonical nested-distribution representation
// ---------------------------------------------------------------------------

namespace {

int compare_vec(const Vec& a, const Vec& b, double tol) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::fabs(a[i] - b[i]) <= tol) continue;
    return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

NestedDistribution build_nested(const ScenarioTree& t, int idx, double tol) {
  NestedDistribution nd;
  nd.value = t.nodes[idx].value;
  for (int c : t.children[idx])
    nd.children.emplace_back(build_nested(t, c, tol), t.nodes[c].prob);
  // canonical order, then merge structurally equal children (weights add)
  std::sort(nd.children.begin(), nd.children.end(),
            [tol](const auto& x, const auto& y) {
              return compare_nested(x.first, y.first, tol) < 0;
            });
  std::vector<std::pair<NestedDistribution, double>> merged;
  for (auto& ch : nd.children) {
    if (!merged.empty() &&
        compare_nested(merged.back().first, ch.first, tol) == 0)
      merged.back().second += ch.second;
    else
      merged.push_back(std::move(ch));
  }
  nd.children = std::move(merged);
  return nd;
}

}  // namespace

int compare_nested(const NestedDistribution& a, const NestedDistribution& b,
                   double tol) {
  if (int c = compare_vec(a.value, b.value, tol)) return c;
  if (a.children.size() != b.children.size())
    return a.children.size() < b.children.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (int c = compare_nested(a.children[i].first, b.children[i].first, tol))
      return c;
    const double wa = a.children[i].second, wb = b.children[i].second;
    if (std::fabs(wa - wb) > 1e-12) return wa < wb ? -1 : 1;
  }
  return 0;
}

bool nested_equal(const NestedDistribution& a, const NestedDistribution& b,
                  double tol) {
  return compare_nested(a, b, tol) == 0;
}

NestedDistribution canonicalize(const ScenarioTree& t, double tol) {
  // virtual pre-root carrying the initial law; its value slot stays empty
  NestedDistribution root;
  for (int r : t.roots)
    root.children.emplace_back(build_nested(t, r, tol), t.nodes[r].prob);
  std::sort(root.children.begin(), root.children.end(),
            [tol](const auto& x, const auto& y) {
              return compare_nested(x.first, y.first, tol) < 0;
            });
  std::vector<std::pair<NestedDistribution, double>> merged;
  for (auto& ch : root.children) {
    if (!merged.empty() &&
        compare_nested(merged.back().first, ch.first, tol) == 0)
      merged.back().second += ch.second;
    else
      merged.push_back(std::move(ch));
  }
  root.children = std::move(merged);
  return root;
}

bool is_plain(const ScenarioTree& t, double tol) {
  for (int step = 1; step <= t.horizon; ++step) {
    const std::vector<int> at = t.nodes_at_step(step);
    std::vector<Path> hists;
    hists.reserve(at.size());
    for (int i : at) hists.push_back(t.history(i));
    // group nodes by value-history within tol; members must carry
    // information-equivalent subtrees
    std::vector<int> group_of(at.size(), -1);
    std::vector<std::size_t> reps;
    for (std::size_t k = 0; k < at.size(); ++k) {
      for (std::size_t g = 0; g < reps.size(); ++g) {
        const Path& a = hists[k];
        const Path& b = hists[reps[g]];
        bool same = true;
        for (std::size_t n = 0; n < a.size() && same; ++n)
          same = compare_vec(a[n], b[n], tol) == 0;
        if (same) {
          group_of[k] = static_cast<int>(g);
          break;
        }
      }
      if (group_of[k] < 0) {
        group_of[k] = static_cast<int>(reps.size());
        reps.push_back(k);
      }
    }
    for (std::size_t k = 0; k < at.size(); ++k) {
      const std::size_t rep = reps[group_of[k]];
      if (rep == k) continue;
      NestedDistribution a = canonicalize(t.subtree(at[k]), tol);
      NestedDistribution b = canonicalize(t.subtree(at[rep]), tol);
      if (!nested_equal(a, b, tol)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// rebuild from flat paths
// ---------------------------------------------------------------------------

namespace {

void build_from_group(const PathMeasure& pm, const std::vector<int>& group,
                      double group_weight, int step, int parent_index,
                      ScenarioTree& t) {
  // split `group` (paths sharing a prefix of length step-1) by step value
  std::vector<std::vector<int>> parts;
  for (int p : group) {
    bool placed = false;
    for (auto& part : parts) {
      if (pm.paths[part.front()][step - 1] == pm.paths[p][step - 1]) {
        part.push_back(p);
        placed = true;
        break;
      }
    }
    if (!placed) parts.push_back({p});
  }
  for (const auto& part : parts) {
    double w = 0.0;
    for (int p : part) w += pm.weights[p];
    TreeNode nd;
    nd.id = static_cast<int>(t.nodes.size());
    nd.parent = parent_index;
    nd.step = step;
    nd.value = pm.paths[part.front()][step - 1];
    nd.prob = w / group_weight;
    t.nodes.push_back(nd);
    const int idx = nd.id;
    if (step < pm.horizon) build_from_group(pm, part, w, step + 1, idx, t);
  }
}

}  // namespace

ScenarioTree tree_from_paths(const PathMeasure& pm) {
  pm.validate();
  ScenarioTree t;
  t.horizon = pm.horizon;
  t.dims = pm.dims;
  std::vector<int> all(pm.paths.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  build_from_group(pm, all, 1.0, 1, -1, t);
  t.finalize();
  return t;
}

std::vector<int> group_paths_by_prefix(const std::vector<Path>& paths, int n,
                                       double tol, int* count) {
  const int P = static_cast<int>(paths.size());
  std::vector<int> gid(P, -1);
  std::vector<int> reps;
  for (int i = 0; i < P; ++i) {
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const Path& a = paths[i];
      const Path& b = paths[reps[r]];
      bool same = true;
      for (int s = 0; s < n && same; ++s) {
        if (a[s].size() != b[s].size()) {
          same = false;
          break;
        }
        for (std::size_t d = 0; d < a[s].size(); ++d) {
          if (std::fabs(a[s][d] - b[s][d]) > tol) {
            same = false;
            break;
          }
        }
      }
      if (same) {
        gid[i] = static_cast<int>(r);
        break;
      }
    }
    if (gid[i] < 0) {
      gid[i] = static_cast<int>(reps.size());
      reps.push_back(i);
    }
  }
  *count = static_cast<int>(reps.size());
  return gid;
}

}  // namespace treedro
