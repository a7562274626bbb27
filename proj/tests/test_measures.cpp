#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "treedro/common.hpp"
#include "treedro/minimize.hpp"
#include "treedro/payoff.hpp"
#include "treedro/penalty.hpp"
#include "treedro/random_instances.hpp"
#include "treedro/tree.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

using namespace treedro;

namespace {

// value-labelled binary trees used throughout
ScenarioTree nu1_tree() {
  ScenarioTree t;
  t.horizon = 2;
  t.dims = {1, 1};
  t.nodes = {{0, -1, 1, {0.0}, 1.0},
             {1, 0, 2, {1.0}, 0.5},
             {2, 0, 2, {-1.0}, 0.5}};
  t.finalize();
  return t;
}

// root 0 splits into two value-0 middles whose grandchild laws differ
ScenarioTree coin_toss_tree(double spread_b) {
  ScenarioTree t;
  t.horizon = 3;
  t.dims = {1, 1, 1};
  t.nodes = {{0, -1, 1, {0.0}, 1.0},
             {1, 0, 2, {0.0}, 0.5},
             {2, 0, 2, {0.0}, 0.5},
             {3, 1, 3, {1.0}, 0.5},
             {4, 1, 3, {-1.0}, 0.5},
             {5, 2, 3, {spread_b}, 0.5},
             {6, 2, 3, {-spread_b}, 0.5}};
  t.finalize();
  return t;
}

void expect_validation(const std::function<void()>& fn, const std::string& part) {
  bool hit = false;
  try {
    fn();
  } catch (const ValidationError& e) {
    hit = true;
    INFO("message: " << e.what());
    CHECK(std::string(e.what()).find(part) != std::string::npos);
  }
  CHECK(hit);
}

bool same_atoms(const PathMeasure& a, const PathMeasure& b) {
  if (a.paths.size() != b.paths.size()) return false;
  std::vector<bool> used(b.paths.size(), false);
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < b.paths.size() && !found; ++j) {
      if (used[j] || a.paths[i] != b.paths[j]) continue;
      if (std::fabs(a.weights[i] - b.weights[j]) > 1e-12) continue;
      used[j] = true;
      found = true;
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace

// --- scenario trees and JSON ------------------------------------------------

TEST_CASE("chain tree loads and flattens to a single unit-weight path") {
  const std::string doc = R"({
    "horizon": 3, "dims": [1, 1, 1],
    "nodes": [
      {"id": 10, "parent": null, "step": 1, "value": [1.0], "prob": 1.0},
      {"id": 11, "parent": 10, "step": 2, "value": [2.0], "prob": 1.0},
      {"id": 12, "parent": 11, "step": 3, "value": [4.0], "prob": 1.0}
    ]})";
  ScenarioTree t = load_tree(doc);
  CHECK(t.horizon == 3);
  CHECK(t.nodes.size() == 3);
  PathMeasure pm = to_path_measure(t);
  REQUIRE(pm.paths.size() == 1);
  CHECK(pm.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pm.paths[0] == Path{{1.0}, {2.0}, {4.0}});
  // a chain's kernels are point masses
  auto k = kernel(t, 10);
  REQUIRE(k.size() == 1);
  CHECK(k[0].first == Vec{2.0});
  CHECK(k[0].second == doctest::Approx(1.0));
}

TEST_CASE("root probabilities that do not sum to one are rejected by name") {
  const std::string doc = R"({
    "horizon": 1, "dims": [1],
    "nodes": [{"id": 0, "parent": null, "step": 1, "value": [0.0], "prob": 0.999}]})";
  expect_validation([&] { load_tree(doc); }, "root probabilities sum 0.999 != 1");
}

TEST_CASE("sibling probability and parent-link violations name the node") {
  ScenarioTree t = nu1_tree();
  t.nodes[2].prob = 0.4;
  expect_validation([&] { t.finalize(); }, "probabilities sum 0.9 != 1");

  const std::string dangling = R"({
    "horizon": 2, "dims": [1, 1],
    "nodes": [
      {"id": 0, "parent": null, "step": 1, "value": [0.0], "prob": 1.0},
      {"id": 1, "parent": 7, "step": 2, "value": [1.0], "prob": 1.0}
    ]})";
  expect_validation([&] { load_tree(dangling); }, "1");

  const std::string bad_step = R"({
    "horizon": 2, "dims": [1, 1],
    "nodes": [
      {"id": 0, "parent": null, "step": 1, "value": [0.0], "prob": 1.0},
      {"id": 1, "parent": 0, "step": 1, "value": [1.0], "prob": 1.0}
    ]})";
  CHECK_THROWS_AS(load_tree(bad_step), ValidationError);
}

TEST_CASE("two-point tree: paths, kernel and canonical form") {
  ScenarioTree t = nu1_tree();
  PathMeasure pm = to_path_measure(t);
  REQUIRE(pm.paths.size() == 2);
  CHECK(same_atoms(pm, PathMeasure{2, {1, 1}, {{{0.0}, {1.0}}, {{0.0}, {-1.0}}}, {0.5, 0.5}}));

  auto k = kernel(t, 0);
  REQUIRE(k.size() == 2);
  double p_plus = 0.0, p_minus = 0.0;
  for (auto& [v, p] : k) (v[0] > 0 ? p_plus : p_minus) = p;
  CHECK(p_plus == doctest::Approx(0.5));
  CHECK(p_minus == doctest::Approx(0.5));

  expect_validation([&] { kernel(t, 1); }, "is a leaf");
  expect_validation([&] { kernel(t, 99); }, "unknown node id 99");

  NestedDistribution nd = canonicalize(t);
  REQUIRE(nd.children.size() == 1);  // one root value
  const NestedDistribution& root = nd.children[0].first;
  CHECK(root.value == Vec{0.0});
  REQUIRE(root.children.size() == 2);
  CHECK(root.children[0].second == doctest::Approx(0.5));
}

TEST_CASE("save/load round trip preserves the nested distribution") {
  Rng rng(404);
  for (int rep = 0; rep < 10; ++rep) {
    auto inst = random_plain_instance(rng, 3, 3, 4, rep % 2 + 1);
    ScenarioTree back = load_tree(save_tree(inst.tree));
    CHECK(back.horizon == inst.tree.horizon);
    CHECK(back.nodes.size() == inst.tree.nodes.size());
    CHECK(nested_equal(canonicalize(back), canonicalize(inst.tree)));
  }
}

TEST_CASE("uniform binary two-step tree flattens to four quarter paths") {
  ScenarioTree t;
  t.horizon = 2;
  t.dims = {1, 1};
  t.nodes = {{0, -1, 1, {0.0}, 0.5}, {1, -1, 1, {1.0}, 0.5},
             {2, 0, 2, {0.0}, 0.5}, {3, 0, 2, {1.0}, 0.5},
             {4, 1, 2, {0.0}, 0.5}, {5, 1, 2, {1.0}, 0.5}};
  t.finalize();
  PathMeasure pm = to_path_measure(t);
  REQUIRE(pm.paths.size() == 4);
  for (double w : pm.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("flatten and rebuild is the identity on atoms") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = random_plain_instance(rng, 1 + rep % 4, 3, 5);
    PathMeasure pm = to_path_measure(inst.tree);
    pm.validate();
    ScenarioTree rebuilt = tree_from_paths(pm);
    PathMeasure again = to_path_measure(rebuilt);
    CHECK(same_atoms(pm, again));
  }
}

TEST_CASE("path measure validation rejects bad weights and duplicates") {
  PathMeasure pm{2, {1, 1}, {{{0.0}, {1.0}}, {{0.0}, {1.0}}}, {0.5, 0.5}};
  expect_validation([&] { pm.validate(); }, "duplicate");
  pm.paths[1] = {{0.0}, {2.0}};
  pm.weights = {0.5, 0.4};
  expect_validation([&] { pm.validate(); }, "sum");
  pm.weights = {1.5, -0.5};
  expect_validation([&] { pm.validate(); }, "weight");
}

// --- plainness and canonical forms -------------------------------------------

TEST_CASE("identical value histories with different subtree laws break plainness") {
  // fair first coin: value stays 0 while the branch decides the final spread
  ScenarioTree hidden = coin_toss_tree(2.0);
  CHECK_FALSE(is_plain(hidden));

  ScenarioTree merged = coin_toss_tree(1.0);
  CHECK(is_plain(merged));

  // the duplicate branches collapse to the plain three-step chain law
  ScenarioTree plain;
  plain.horizon = 3;
  plain.dims = {1, 1, 1};
  plain.nodes = {{0, -1, 1, {0.0}, 1.0},
                 {1, 0, 2, {0.0}, 1.0},
                 {2, 1, 3, {1.0}, 0.5},
                 {3, 1, 3, {-1.0}, 0.5}};
  plain.finalize();
  CHECK(nested_equal(canonicalize(merged), canonicalize(plain)));
  CHECK_FALSE(nested_equal(canonicalize(hidden), canonicalize(plain)));
}

TEST_CASE("trees with injective sibling values are plain") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = random_plain_instance(rng, 1 + rep % 4, 3, 5, rep % 2 + 1);
    CHECK(is_plain(inst.tree));
  }
}

TEST_CASE("canonicalize ignores node ids and sibling order") {
  ScenarioTree t = coin_toss_tree(2.0);
  NestedDistribution base = canonicalize(t);

  ScenarioTree relabeled = t;
  for (auto& nd : relabeled.nodes) nd.id = 1000 - nd.id;
  relabeled.children.clear();
  relabeled.roots.clear();
  relabeled.finalize();
  CHECK(nested_equal(canonicalize(relabeled), base));

  // reverse the node list; parent indices must be remapped
  ScenarioTree reversed;
  reversed.horizon = t.horizon;
  reversed.dims = t.dims;
  const int n = static_cast<int>(t.nodes.size());
  for (int i = n - 1; i >= 0; --i) {
    TreeNode nd = t.nodes[i];
    if (nd.parent >= 0) nd.parent = n - 1 - nd.parent;
    reversed.nodes.push_back(nd);
  }
  reversed.finalize();
  CHECK(nested_equal(canonicalize(reversed), base));
}

TEST_CASE("plain trees have one canonical branch per distinct root value") {
  Rng rng(3003);
  for (int rep = 0; rep < 10; ++rep) {
    auto inst = random_plain_instance(rng, 3, 3, 4);
    REQUIRE(is_plain(inst.tree));
    std::set<double> root_values;
    for (int r : inst.tree.roots) root_values.insert(inst.tree.nodes[r].value[0]);
    CHECK(canonicalize(inst.tree).children.size() == root_values.size());
  }
}

// --- penalties ----------------------------------------------------------------

TEST_CASE("penalty conjugates at the textbook anchor points") {
  Penalty ball = Penalty::ball(0.09);
  CHECK(conjugate(ball, 2.0).v == doctest::Approx(0.18).epsilon(1e-15));
  CHECK(conjugate(ball, 0.0).v == doctest::Approx(0.0));
  CHECK(ball.eval(0.05).v == 0.0);
  CHECK(ball.eval(0.09 + 1e-6).inf);
  CHECK(ball.lambda_domain_max().inf);

  Penalty lin = Penalty::linear(1.5);
  CHECK(conjugate(lin, 2.0).inf);
  CHECK(conjugate(lin, 1.5).v == doctest::Approx(0.0));
  CHECK(conjugate(lin, 0.7).v == doctest::Approx(0.0));
  CHECK(lin.eval(2.0).v == doctest::Approx(3.0));
  CHECK(lin.lambda_domain_max().v == doctest::Approx(1.5));

  Penalty quad = Penalty::quadratic(1.0);
  CHECK(conjugate(quad, 3.0).v == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(quad.eval(2.0).v == doctest::Approx(2.0));  // t^2 / (2 beta)
  CHECK(quad.lambda_domain_max().inf);

  CHECK_THROWS_AS(Penalty::ball(-0.1), ValidationError);
  CHECK_THROWS_AS(Penalty::linear(0.0), ValidationError);
  CHECK_THROWS_AS(Penalty::quadratic(-2.0), ValidationError);
}

// --- payoffs -------------------------------------------------------------------

TEST_CASE("payoff families evaluate as documented") {
  Path up{{1.0}, {1.3}};
  Path down{{1.0}, {0.8}};

  auto lb = PathFunctional::lookback_call(1.1);
  CHECK(lb.eval(up) == doctest::Approx(0.2));    // (1.3 - 1.0 + 1 - 1.1)^+
  CHECK(lb.eval(down) == doctest::Approx(0.0));  // clipped at zero

  auto cs = PathFunctional::calendar_spread(0.9);
  CHECK(cs.eval(up) == doctest::Approx(0.4 - 0.1));
  CHECK(cs.eval(down) == doctest::Approx(0.0 - 0.1));
  CHECK(cs.stage_additive());

  auto tq = PathFunctional::terminal_quadratic();
  CHECK(tq.eval({{3.0}, {-2.0}}) == doctest::Approx(4.0));
  auto sq = PathFunctional::sum_quadratic();
  CHECK(sq.eval({{3.0}, {-2.0}}) == doctest::Approx(13.0));
  CHECK(sq.eval({{1.0, 2.0}, {0.0, -1.0}}) == doctest::Approx(6.0));

  // stage terms of a stage-additive payoff sum to the path value
  for (const auto& f : {cs, tq, sq}) {
    REQUIRE(f.stage_additive());
    double s = 0.0;
    for (int n = 1; n <= 2; ++n) s += f.stage_eval(n, 2, up[n - 1]);
    CHECK(s == doctest::Approx(f.eval(up)).epsilon(1e-14));
  }
}

TEST_CASE("tabulated payoffs cover their table and nothing else") {
  auto f = PathFunctional::tabulated({{{0.0}, {1.0}}, {{0.0}, {-1.0}}}, {5.0, 7.0});
  CHECK(f.eval({{0.0}, {1.0}}) == doctest::Approx(5.0));
  CHECK(f.eval({{0.0}, {-1.0 + 1e-12}}) == doctest::Approx(7.0));
  CHECK_THROWS_AS(f.eval({{0.0}, {2.0}}), ValidationError);
}

TEST_CASE("shifted payoffs translate values and keep stage structure") {
  Path p{{1.0}, {1.4}};
  auto f = PathFunctional::calendar_spread(1.0).shifted(2.5);
  CHECK(f.eval(p) == doctest::Approx(PathFunctional::calendar_spread(1.0).eval(p) + 2.5));
  REQUIRE(f.stage_additive());
  double s = 0.0;
  for (int n = 1; n <= 2; ++n) s += f.stage_eval(n, 2, p[n - 1]);
  CHECK(s == doctest::Approx(f.eval(p)).epsilon(1e-14));

  auto g = PathFunctional::lookback_call(1.0).shifted(-1.0).shifted(0.25);
  CHECK(g.eval(p) == doctest::Approx(0.4 - 0.75));
}

// --- convex minimizer -----------------------------------------------------------

TEST_CASE("minimize_convex finds interior, boundary and capped minima") {
  auto quad = [](double x) -> ExtReal { return (x - 3.0) * (x - 3.0) + 1.0; };
  auto res = minimize_convex(quad, 0.0, 100.0);
  CHECK(res.found_finite);
  CHECK_FALSE(res.on_cap);
  CHECK(res.x == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(res.value == doctest::Approx(1.0).epsilon(1e-9));

  // minimum at the left end of the domain
  auto incr = [](double x) -> ExtReal { return 2.0 * x + 5.0; };
  res = minimize_convex(incr, 0.0, 50.0);
  CHECK(res.x == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(res.value == doctest::Approx(5.0).epsilon(1e-8));

  // still decreasing at the cap
  auto decr = [](double x) -> ExtReal { return -x; };
  res = minimize_convex(decr, 0.0, 8.0);
  CHECK(res.on_cap);
  CHECK(res.x == doctest::Approx(8.0));

  // infinite on the left part of the domain
  auto partial = [](double x) -> ExtReal {
    if (x < 2.0) return ExtReal::infinity();
    return (x - 5.0) * (x - 5.0);
  };
  res = minimize_convex(partial, 0.0, 100.0);
  CHECK(res.found_finite);
  CHECK(res.x == doctest::Approx(5.0).epsilon(1e-6));

  // minimum hidden right at the finite/infinite boundary
  auto edge = [](double x) -> ExtReal {
    if (x > 4.0) return ExtReal::infinity();
    return -x;
  };
  res = minimize_convex(edge, 0.0, 100.0);
  CHECK(res.found_finite);
  CHECK(res.x == doctest::Approx(4.0).epsilon(1e-5));

  auto nowhere = [](double) -> ExtReal { return ExtReal::infinity(); };
  res = minimize_convex(nowhere, 0.0, 10.0);
  CHECK_FALSE(res.found_finite);

  auto flat = [](double) -> ExtReal { return 7.0; };
  res = minimize_convex(flat, 0.0, 1e8);
  CHECK(res.found_finite);
  CHECK_FALSE(res.on_cap);
  CHECK(res.value == doctest::Approx(7.0));
}
