#pragma once

// Finite-support laws of N-step processes: scenario trees (filtered laws),
// flat path measures, disintegration kernels, plainness test and canonical
// nested-distribution representation, JSON I/O.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treedro/common.hpp"

namespace treedro {

struct TreeNode {
  int id = 0;
  int parent = -1;  // node index (not id); -1 for step-1 roots
  int step = 1;     // 1-based
  Vec value;
  double prob = 1.0;  // conditional on the parent (unconditional for roots)
};

// Rooted forest: several step-1 roots carry the initial law. Nodes are
// addressed by index into `nodes`; ids are only I/O handles.
class ScenarioTree {
 public:
  int horizon = 0;
  std::vector<int> dims;  // dims[n-1] = d_n
  std::vector<TreeNode> nodes;

  // derived, filled by finalize()
  std::vector<std::vector<int>> children;
  std::vector<int> roots;

  void finalize();  // builds children/roots and validates all invariants

  int index_of_id(int id) const;  // -1 if absent
  bool is_leaf(int idx) const { return nodes[idx].step == horizon; }

  // root-to-node value history x_{1:step}
  Path history(int idx) const;
  // product of conditional probs from root to node
  double joint_prob(int idx) const;
  std::vector<int> nodes_at_step(int step) const;
  std::vector<int> leaves() const { return nodes_at_step(horizon); }

  // the subtree hanging off `root_idx`, reindexed, root prob set to 1
  ScenarioTree subtree(int root_idx) const;
};

struct PathMeasure {
  int horizon = 0;
  std::vector<int> dims;
  std::vector<Path> paths;
  std::vector<double> weights;

  void validate() const;  // weights > 0 summing to 1, paths distinct
};

// Recursive (value, law-of-future) object; children canonically sorted and
// deduplicated, so two filtered laws are information-equivalent iff their
// canonical forms compare equal.
struct NestedDistribution {
  Vec value;
  std::vector<std::pair<NestedDistribution, double>> children;
};

// --- operations -------------------------------------------------------------

ScenarioTree load_tree(const std::string& json_text);
std::string save_tree(const ScenarioTree& t);

PathMeasure to_path_measure(const ScenarioTree& t);

// distribution over child values of a node, addressed by node id
std::vector<std::pair<Vec, double>> kernel(const ScenarioTree& t, int node_id);

bool is_plain(const ScenarioTree& t, double tol = 1e-9);

NestedDistribution canonicalize(const ScenarioTree& t, double tol = 1e-9);

// three-way comparison defining the canonical order; 0 means equal within tol
int compare_nested(const NestedDistribution& a, const NestedDistribution& b,
                   double tol = 1e-9);
bool nested_equal(const NestedDistribution& a, const NestedDistribution& b,
                  double tol = 1e-9);

// Rebuild a tree from flat paths by grouping common prefixes (exact value
// equality). Inverse of to_path_measure up to atom order.
ScenarioTree tree_from_paths(const PathMeasure& pm);

// Groups paths by their first n steps (coordinates compared within tol);
// returns a group id per path in input order and writes the group count.
std::vector<int> group_paths_by_prefix(const std::vector<Path>& paths, int n,
                                       double tol, int* count);

}  // namespace treedro
