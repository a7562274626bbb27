#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "treedro/common.hpp"
#include "treedro/cost.hpp"
#include "treedro/oracles.hpp"
#include "treedro/penalty.hpp"
#include "treedro/random_instances.hpp"
#include "treedro/stopping.hpp"
#include "treedro/transport.hpp"
#include "treedro/tree.hpp"

#include <cmath>
#include <string>

using namespace treedro;

namespace {

ScenarioTree two_point_tree(double spread) {
  ScenarioTree t;
  t.horizon = 2;
  t.dims = {1, 1};
  t.nodes = {{0, -1, 1, {0.0}, 1.0},
             {1, 0, 2, {spread}, 0.5},
             {2, 0, 2, {-spread}, 0.5}};
  t.finalize();
  return t;
}

StagePayoffs demo_payoffs() {
  StagePayoffs f;
  f.fns = {[](const Path&) { return 1.0; },
           [](const Path& h) { return h.back()[0] * h.back()[0] - 1.0; }};
  return f;
}

ScenarioTree chain(std::vector<double> vals) {
  ScenarioTree t;
  t.horizon = static_cast<int>(vals.size());
  t.dims.assign(t.horizon, 1);
  for (int i = 0; i < t.horizon; ++i)
    t.nodes.push_back({i, i - 1, i + 1, {vals[static_cast<std::size_t>(i)]}, 1.0});
  t.finalize();
  return t;
}

}  // namespace

TEST_CASE("snell on a single path is the running maximum") {
  ScenarioTree t = chain({1.0, 5.0, 2.0, 3.0});
  auto f = StagePayoffs::terminal_state(4, [](double x) { return x; });
  auto env = snell(t, f);
  CHECK(env.value == doctest::Approx(5.0));
  CHECK(env.stop[1] == 1);
  CHECK(enumerate_stopping(t, f).value == env.value);
}

TEST_CASE("snell picks the right side of the stop/continue boundary") {
  auto f = demo_payoffs();
  auto e1 = snell(two_point_tree(1.0), f);
  CHECK(e1.value == doctest::Approx(1.0));
  CHECK(e1.stop[0] == 1);
  auto e2 = snell(two_point_tree(2.0), f);
  CHECK(e2.value == doctest::Approx(3.0));
  CHECK(e2.stop[0] == 0);
}

TEST_CASE("snell equals exhaustive stopping enumeration exactly") {
  Rng rng(71);
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = random_plain_instance(rng, 1 + rep % 4, 3, 5);
    auto f = random_stage_payoffs(rng, inst.tree.horizon);
    auto env = snell(inst.tree, f);
    auto en = enumerate_stopping(inst.tree, f);
    CHECK(env.value == en.value);  // shared summation order, bitwise
  }
}

TEST_CASE("snell ties prefer stopping") {
  // payoff equals continuation value everywhere
  ScenarioTree t = two_point_tree(1.0);
  StagePayoffs f;
  f.fns = {[](const Path&) { return 0.0; }, [](const Path&) { return 0.0; }};
  auto env = snell(t, f);
  CHECK(env.stop[0] == 1);
}

TEST_CASE("mixing filtered laws can beat mixing plain laws") {
  auto rep = relaxation_demo();
  CHECK(rep.j_nu1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.j_nu2 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rep.j_plain_mixture == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(rep.j_augmented == doctest::Approx(2.0).epsilon(1e-12));

  // the coin-augmented tree averages the component values exactly
  CHECK(rep.j_augmented == 0.5 * (rep.j_nu1 + rep.j_nu2));
  CHECK(rep.j_plain_mixture < rep.j_augmented);
  CHECK_FALSE(is_plain(rep.augmented));
  CHECK(is_plain(rep.mixture));

  // the demo's trees really are the advertised laws
  auto f = demo_payoffs();
  CHECK(snell(rep.nu1, f).value == doctest::Approx(rep.j_nu1));
  CHECK(enumerate_stopping(rep.augmented, f).value == doctest::Approx(rep.j_augmented));
}

TEST_CASE("bicausal cost table prices subtrees against candidates") {
  ScenarioTree mu = chain({1.0, 2.0, 3.0});
  CandidateFamily fam;
  fam.trees.push_back(mu.subtree(mu.roots[0]));
  fam.labels.push_back("self");
  const double eps = 0.25;
  ScenarioTree shifted = mu;
  for (auto& nd : shifted.nodes) nd.value[0] += eps;
  shifted.children.clear();
  shifted.roots.clear();
  shifted.finalize();
  fam.trees.push_back(shifted);
  fam.labels.push_back("shifted");

  auto c = CostSpec::sqdist(3);
  auto table = bicausal_cost_table(mu, fam, c);
  REQUIRE(table.C.size() == 1);
  REQUIRE(table.C[0].size() == 2);
  CHECK(table.C[0][0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(table.C[0][1] == doctest::Approx(3.0 * eps * eps).epsilon(1e-10));

  // bicausal couplings are a subset of all couplings
  Rng rng(72);
  for (int rep = 0; rep < 5; ++rep) {
    auto a = random_plain_instance(rng, 2, 2, 3).tree;
    auto b = random_plain_instance(rng, 2, 2, 3).tree;
    CandidateFamily fb;
    fb.trees.push_back(b);
    fb.labels.push_back("other");
    auto tab = bicausal_cost_table(a, fb, CostSpec::sqdist(2));
    for (std::size_t r = 0; r < tab.C.size(); ++r) {
      auto sub = to_path_measure(a.subtree(a.roots[r]));
      const double classic = ot_classic(sub, to_path_measure(b), CostSpec::sqdist(2)).cost;
      CHECK(tab.C[r][0] + 1e-10 >= classic);
    }
  }
}

TEST_CASE("candidate generation keeps the required trees and dedups the rest") {
  ScenarioTree mu = two_point_tree(1.0);
  auto fam0 = make_candidates(mu, 0.0);
  CHECK(fam0.trees.size() == 1);  // the single root subtree; offsets collapse at zero

  auto fam = make_candidates(mu, 0.09);
  CHECK(fam.trees.size() > 1);
  REQUIRE(fam.labels.size() == fam.trees.size());
  CHECK(fam.labels[0] == "mu-root-0");
  // no two candidates are information-equivalent
  for (std::size_t i = 0; i < fam.trees.size(); ++i)
    for (std::size_t j = i + 1; j < fam.trees.size(); ++j)
      CHECK_FALSE(nested_equal(canonicalize(fam.trees[i]), canonicalize(fam.trees[j])));

  // user extras ride along even when equivalent trees already exist
  auto fam_extra = make_candidates(mu, 0.09, {two_point_tree(3.0)});
  CHECK(fam_extra.trees.size() >= 2);
  bool has_user = false;
  for (auto& l : fam_extra.labels) has_user = has_user || l.rfind("user-", 0) == 0;
  CHECK(has_user);

  CHECK_THROWS_AS(make_candidates(mu, 0.09, {}, 0), CapExceededError);
  ScenarioTree wrong = chain({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(make_candidates(mu, 0.09, {wrong}), ValidationError);
}

TEST_CASE("zero-radius robust stopping is the nominal Snell value") {
  Rng rng(73);
  for (int rep = 0; rep < 5; ++rep) {
    auto inst = random_plain_instance(rng, 2 + rep % 2, 2, 4);
    auto f = random_stage_payoffs(rng, inst.tree.horizon);
    auto fam = make_candidates(inst.tree, 0.0);
    auto rep_dual = robust_stopping_dual(inst.tree, f, fam, CostSpec::sqdist(inst.tree.horizon),
                                         Penalty::ball(0.0));
    CHECK(rep_dual.value == doctest::Approx(snell(inst.tree, f).value).epsilon(1e-8));
  }
}

TEST_CASE("the stopping dual matches its restricted primal LP") {
  Rng rng(74);
  for (int rep = 0; rep < 5; ++rep) {
    auto inst = random_plain_instance(rng, 2, 2, 4);
    auto f = random_stage_payoffs(rng, inst.tree.horizon);
    const double delta = 0.02 + 0.04 * rep;
    auto fam = make_candidates(inst.tree, delta, {two_point_tree(1.5)});
    auto c = CostSpec::sqdist(2);
    auto dual = robust_stopping_dual(inst.tree, f, fam, c, Penalty::ball(delta));
    const double primal = stopping_restricted_primal(inst.tree, f, fam, c, delta);
    INFO("rep " << rep << " delta " << delta);
    CHECK(dual.value == doctest::Approx(primal).epsilon(1e-6));
    CHECK(dual.value + 1e-9 >= primal);
  }
}

TEST_CASE("the dual dominates single-candidate plain selections") {
  Rng rng(75);
  auto inst = random_plain_instance(rng, 2, 2, 4);
  auto f = random_stage_payoffs(rng, 2);
  const double delta = 0.1;
  auto fam = make_candidates(inst.tree, delta);
  auto c = CostSpec::sqdist(2);
  auto dual = robust_stopping_dual(inst.tree, f, fam, c, Penalty::ball(delta));

  // plain primal: pick one candidate for the whole tree if it fits the budget
  auto pm = to_path_measure(inst.tree);
  double best = -1e300;
  for (const auto& w : fam.trees) {
    const double d = ot_bicausal(pm, to_path_measure(w), c).cost;
    if (d <= delta + 1e-12) best = std::max(best, snell(w, f).value);
  }
  CHECK(dual.value + 1e-8 >= best);
}

TEST_CASE("robust stopping grows with the radius and the candidate family") {
  Rng rng(76);
  auto inst = random_plain_instance(rng, 2, 2, 4);
  auto f = random_stage_payoffs(rng, 2);
  auto c = CostSpec::sqdist(2);

  double prev = -1e300;
  for (double delta : {0.0, 0.05, 0.2, 0.8}) {
    auto fam = make_candidates(inst.tree, 0.2);  // fixed family, varying budget
    const double v = robust_stopping_dual(inst.tree, f, fam, c, Penalty::ball(delta)).value;
    CHECK(v >= prev - 1e-9);
    prev = v;
  }

  const double delta = 0.1;
  auto small = make_candidates(inst.tree, delta);
  auto big = make_candidates(inst.tree, delta, {two_point_tree(1.25), two_point_tree(0.75)});
  const double v_small = robust_stopping_dual(inst.tree, f, small, c, Penalty::ball(delta)).value;
  const double v_big = robust_stopping_dual(inst.tree, f, big, c, Penalty::ball(delta)).value;
  CHECK(v_big + 1e-9 >= v_small);
}

TEST_CASE("stopping reports serialize with labels and costs") {
  ScenarioTree mu = two_point_tree(1.0);
  auto f = demo_payoffs();
  auto fam = make_candidates(mu, 0.04);
  auto rep = robust_stopping_dual(mu, f, fam, CostSpec::sqdist(2), Penalty::ball(0.04));
  const std::string js = stopping_report_to_json(rep, fam);
  CHECK(js.find("\"value\"") != std::string::npos);
  CHECK(js.find("\"lambda_star\"") != std::string::npos);
  CHECK(js.find("\"snell_values\"") != std::string::npos);
  CHECK(js.find("mu-root-0") != std::string::npos);
  CHECK(rep.argmax_candidate.size() == mu.roots.size());
}
