#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "treedro/common.hpp"
#include "treedro/cost.hpp"
#include "treedro/dro.hpp"
#include "treedro/oracles.hpp"
#include "treedro/payoff.hpp"
#include "treedro/penalty.hpp"
#include "treedro/random_instances.hpp"
#include "treedro/tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace treedro;

namespace {

double expectation(const ScenarioTree& t, const PathFunctional& f) {
  double s = 0.0;
  for (int leaf : t.leaves()) s += t.joint_prob(leaf) * f.eval(t.history(leaf));
  return s;
}

CandidateGrids grids_from_alphabets(const RandomInstance& inst) {
  CandidateGrids g;
  g.steps = inst.alphabets;
  return g;
}

}  // namespace

TEST_CASE("adapted evaluator matches the causal coupling LP") {
  Rng rng(31);
  for (int rep = 0; rep < 6; ++rep) {
    auto inst = random_plain_instance(rng, 2, 2, 3);
    auto f = random_payoff(rng);
    auto c = random_cost(rng, 2);
    auto grids = grids_from_alphabets(inst);

    CouplingConstraintSet cons;
    cons.mode = CouplingMode::Causal;
    cons.mu = to_path_measure(inst.tree);
    cons.candidates = grids.all_paths();

    for (double lambda : {0.0, 0.5, 5.0, 500.0}) {
      const double fast = nested_dual_value(inst.tree, f, c, lambda, grids);
      const double lp = lp_transport_max_gain(cons, c, f, lambda).first;
      INFO("rep " << rep << " lambda " << lambda);
      CHECK(fast == doctest::Approx(lp).epsilon(1e-6));
    }
  }
}

TEST_CASE("anticipative choices can only help") {
  Rng rng(32);
  for (int rep = 0; rep < 8; ++rep) {
    auto inst = random_plain_instance(rng, 1 + rep % 3, 2, 3);
    auto f = random_payoff(rng);
    auto c = random_cost(rng, inst.tree.horizon);
    auto grids = grids_from_alphabets(inst);
    for (double lambda : {0.0, 1.0, 10.0}) {
      const double nested = nested_dual_value(inst.tree, f, c, lambda, grids);
      const double classical = classical_dual_value(inst.tree, f, c, lambda, grids);
      CHECK(classical >= nested - 1e-10);
      if (inst.tree.horizon == 1)
        CHECK(classical == doctest::Approx(nested).epsilon(1e-12));
    }
  }
}

TEST_CASE("a huge multiplier freezes the evaluators at the expectation") {
  Rng rng(33);
  auto inst = random_plain_instance(rng, 3, 2, 3);
  auto f = random_payoff(rng);
  auto c = CostSpec::sqdist(3);
  auto grids = make_grids(inst.tree, 0.5, 5);
  const double base = expectation(inst.tree, f);
  CHECK(nested_dual_value(inst.tree, f, c, 1e9, grids) == doctest::Approx(base).epsilon(1e-7));
  CHECK(classical_dual_value(inst.tree, f, c, 1e9, grids) == doctest::Approx(base).epsilon(1e-7));
}

TEST_CASE("stage-separable payoffs close the adapted/anticipative gap") {
  Rng rng(34);
  for (int rep = 0; rep < 4; ++rep) {
    auto inst = random_plain_instance(rng, 3, 2, 3);
    auto f = PathFunctional::calendar_spread(0.8 + 0.2 * rep);
    auto c = CostSpec::sqdist(3);
    auto grids = make_grids(inst.tree, 1.0, 7);
    for (double lambda : {0.3, 2.0, 20.0}) {
      const double nested = nested_dual_value(inst.tree, f, c, lambda, grids);
      const double classical = classical_dual_value(inst.tree, f, c, lambda, grids);
      CHECK(nested == doctest::Approx(classical).epsilon(1e-9));
    }
  }
}

TEST_CASE("at multiplier zero the classical evaluator is the grid maximum") {
  Rng rng(35);
  auto inst = random_plain_instance(rng, 2, 2, 3);
  auto f = random_payoff(rng);
  auto c = CostSpec::sqdist(2);
  auto grids = make_grids(inst.tree, 0.5, 5);
  double best = -1e300;
  for (const Path& p : grids.all_paths()) best = std::max(best, f.eval(p));
  CHECK(classical_dual_value(inst.tree, f, c, 0.0, grids) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("zero-radius ball penalization returns the plain expectation") {
  Rng rng(36);
  for (int rep = 0; rep < 4; ++rep) {
    auto inst = random_plain_instance(rng, 2, 2, 3);
    auto f = random_payoff(rng);
    auto c = random_cost(rng, 2);
    auto grids = grids_from_alphabets(inst);
    auto rep0 = solve_penalized(inst.tree, f, c, Penalty::ball(0.0), grids, DroMode::Causal);
    CHECK(rep0.value == doctest::Approx(expectation(inst.tree, f)).epsilon(1e-7));
  }
}

TEST_CASE("penalized solver agrees with the primal ball LP") {
  Rng rng(37);
  for (int rep = 0; rep < 6; ++rep) {
    auto inst = random_plain_instance(rng, 2, 2, 3);
    auto f = random_payoff(rng);
    auto c = random_cost(rng, 2);
    auto grids = grids_from_alphabets(inst);
    for (double delta : {0.01, 0.1, 1.0}) {
      auto dual = solve_penalized(inst.tree, f, c, Penalty::ball(delta), grids, DroMode::Causal);
      const double primal = primal_dro_ball(inst.tree, f, c, delta,
                                            CouplingMode::Causal, grids.all_paths());
      INFO("rep " << rep << " delta " << delta);
      CHECK(dual.value == doctest::Approx(primal).epsilon(1e-6));
      CHECK(dual.value + 1e-9 >= primal);  // weak duality
    }
  }
}

TEST_CASE("linear penalties cap the multiplier domain at kappa") {
  Rng rng(38);
  auto inst = random_plain_instance(rng, 2, 2, 3);
  auto f = random_payoff(rng);
  auto c = CostSpec::sqdist(2);
  auto grids = grids_from_alphabets(inst);
  auto rep = solve_penalized(inst.tree, f, c, Penalty::linear(2.5), grids, DroMode::Causal);
  CHECK(rep.lambda_star <= 2.5 + 1e-9);
  // quadratic growth against linear penalties stays bounded on a fixed grid
  CHECK(std::isfinite(rep.value));
}

TEST_CASE("a budget below the cheapest transport onto the grid is unbounded") {
  Rng rng(39);
  auto inst = random_plain_instance(rng, 2, 2, 3);
  auto f = PathFunctional::terminal_quadratic();
  auto c = CostSpec::sqdist(2);
  // support lives in [-2.5, 2.5], so every grid path costs at least ~56;
  // a tiny ball budget keeps the dual decreasing past any multiplier cap
  CandidateGrids grids;
  grids.steps = {{{10.0}}, {{10.0}}};
  CHECK_THROWS_AS(
      solve_penalized(inst.tree, f, c, Penalty::ball(0.01), grids, DroMode::Causal),
      UnboundedError);
  // a domain-capped penalty on the same instance stays finite: the multiplier
  // search stops at kappa and reports the grid value there
  auto rep = solve_penalized(inst.tree, f, c, Penalty::linear(3.0), grids,
                             DroMode::Causal);
  CHECK(std::isfinite(rep.value));
  CHECK(rep.lambda_star <= 3.0 + 1e-9);
}

TEST_CASE("the inner dual value is nonincreasing and midpoint-convex in lambda") {
  Rng rng(40);
  auto inst = random_plain_instance(rng, 2, 2, 3);
  auto f = random_payoff(rng);
  auto c = random_cost(rng, 2);
  auto grids = grids_from_alphabets(inst);
  const std::vector<double> ls = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> ds;
  for (double l : ls) ds.push_back(nested_dual_value(inst.tree, f, c, l, grids));
  for (std::size_t i = 1; i < ds.size(); ++i) CHECK(ds[i] <= ds[i - 1] + 1e-12);
  for (std::size_t i = 0; i + 2 < ls.size(); i += 2) {
    const double mid = nested_dual_value(inst.tree, f, c, 0.5 * (ls[i] + ls[i + 2]), grids);
    CHECK(mid <= 0.5 * (ds[i] + ds[i + 2]) + 1e-9);
  }
}

TEST_CASE("the radius curve is nondecreasing, concave and round-trips to CSV") {
  Rng rng(41);
  auto inst = random_plain_instance(rng, 2, 2, 3);
  auto f = random_payoff(rng);
  auto c = CostSpec::sqdist(2);
  auto grids = grids_from_alphabets(inst);
  const std::vector<double> deltas = {0.0, 0.1, 0.2, 0.4, 0.6, 0.8};
  auto curve = radius_curve(inst.tree, f, c, deltas, grids, DroMode::Causal);
  REQUIRE(curve.size() == deltas.size());
  for (std::size_t i = 1; i < curve.size(); ++i)
    CHECK(curve[i].second >= curve[i - 1].second - 1e-9);
  for (std::size_t i = 0; i + 2 < curve.size(); i += 2)
    CHECK(curve[i + 1].second >= 0.5 * (curve[i].second + curve[i + 2].second) - 1e-8);

  const std::string csv = radius_curve_csv(curve);
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "delta,value");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.find(',') != std::string::npos);
    CHECK(line.find("nan") == std::string::npos);
    ++rows;
  }
  CHECK(rows == static_cast<int>(deltas.size()));
}

TEST_CASE("candidate grids validate shapes and cap path explosions") {
  CandidateGrids g;
  g.steps = {{{0.0}, {1.0}}, {{0.0}, {1.0}, {2.0}}};
  g.validate(2, {1, 1});
  CHECK(g.path_count() == 6);
  CHECK(g.all_paths().size() == 6);
  CHECK_THROWS_AS(g.all_paths(5), CapExceededError);
  CHECK_THROWS_AS(g.validate(3, {1, 1, 1}), ValidationError);
  CHECK_THROWS_AS(g.validate(2, {1, 2}), ValidationError);
  CandidateGrids empty;
  empty.steps = {{{0.0}}, {}};
  CHECK_THROWS_AS(empty.validate(2, {1, 1}), ValidationError);
}

TEST_CASE("support-covering grids include every tree value") {
  Rng rng(42);
  auto inst = random_plain_instance(rng, 3, 3, 4);
  auto grids = make_grids(inst.tree, 0.25, 9);
  grids.validate(3, inst.tree.dims);
  for (const auto& nd : inst.tree.nodes) {
    bool found = false;
    for (const Vec& y : grids.steps[nd.step - 1])
      if (y == nd.value) found = true;
    CHECK(found);
  }
}
