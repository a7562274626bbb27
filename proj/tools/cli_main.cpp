// treedro command line: transport values, penalized DRO reports, the AVaR
// option study, LQ control, grid control and robust stopping, plus a seeded
// random-instance generator. Exit codes: 0 ok, 1 resource cap or unbounded
// objective, 2 invalid input.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "treedro/avar.hpp"
#include "treedro/control.hpp"
#include "treedro/dro.hpp"
#include "treedro/oracles.hpp"
#include "treedro/random_instances.hpp"
#include "treedro/stopping.hpp"
#include "treedro/transport.hpp"

using namespace treedro;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

double num(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("bad number '" + s + "' in " + what);
  }
}

CostSpec parse_cost(const std::string& spec, int horizon) {
  if (spec == "sqdist") return CostSpec::sqdist(horizon);
  if (spec == "dist") return CostSpec::dist(horizon);
  if (spec.rfind("table:", 0) == 0) {
    const std::string path = spec.substr(6);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
      GroundCost g;
      g.kind = GroundCost::Table;
      g.xs = j.at("xs").get<std::vector<Vec>>();
      g.ys = j.at("ys").get<std::vector<Vec>>();
      g.values = j.at("values").get<std::vector<std::vector<double>>>();
      g.tol = j.value("tol", 1e-9);
      return CostSpec::separable_uniform(g, horizon);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("cost table " + path + ": " + e.what());
    }
  }
  throw ValidationError("unknown cost '" + spec +
                        "' (want sqdist, dist or table:PATH)");
}

PathFunctional parse_payoff(const std::string& spec) {
  const auto parts = split(spec, ':');
  const std::string& name = parts[0];
  const double param = parts.size() > 1 ? num(parts[1], "--payoff") : 1.0;
  if (name == "lookback_call") return PathFunctional::lookback_call(param);
  if (name == "calendar_spread") return PathFunctional::calendar_spread(param);
  if (name == "terminal_quadratic") return PathFunctional::terminal_quadratic();
  if (name == "sum_quadratic") return PathFunctional::sum_quadratic();
  throw ValidationError(
      "unknown payoff '" + name +
      "' (want lookback_call[:K], calendar_spread[:K], terminal_quadratic, "
      "sum_quadratic)");
}

Penalty parse_penalty(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() == 2) {
    const double p = num(parts[1], "--penalty");
    if (parts[0] == "ball") return Penalty::ball(p);
    if (parts[0] == "linear") return Penalty::linear(p);
    if (parts[0] == "quad") return Penalty::quadratic(p);
  }
  throw ValidationError("unknown penalty '" + spec +
                        "' (want ball:DELTA, linear:KAPPA or quad:BETA)");
}

CandidateGrids parse_grid(const std::string& spec, const ScenarioTree& mu,
                          const Penalty& L) {
  if (spec == "auto")
    return make_grids(mu, default_grid_half_width(L));
  if (spec == "support") return make_grids(mu, 0.0, 1);
  const auto parts = split(spec, ':');
  if (parts.size() == 2) {
    const double hw = num(parts[0], "--grid");
    const int pts = static_cast<int>(num(parts[1], "--grid"));
    return make_grids(mu, hw, pts);
  }
  throw ValidationError("unknown grid '" + spec +
                        "' (want auto, support or HALFWIDTH:POINTS)");
}

std::vector<double> parse_range(const std::string& spec, const char* what) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3)
    throw ValidationError(std::string(what) + " wants LO:HI:STEP, got '" +
                          spec + "'");
  const double lo = num(parts[0], what), hi = num(parts[1], what),
               step = num(parts[2], what);
  if (!(step > 0.0) || hi < lo)
    throw ValidationError(std::string(what) + ": empty or descending range");
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
  } else {
    write_file(out_path, text);
  }
}

// --- subcommand bodies ------------------------------------------------------

int cmd_ot(const std::string& mu_path, const std::string& nu_path,
           const std::string& cost, const std::string& mode,
           const std::string& coupling_out) {
  const ScenarioTree mu = load_tree(read_file(mu_path));
  const ScenarioTree nu = load_tree(read_file(nu_path));
  const PathMeasure pmu = to_path_measure(mu), pnu = to_path_measure(nu);
  if (mu.horizon != nu.horizon)
    throw ValidationError("ot: trees have different horizons");
  const CostSpec c = parse_cost(cost, mu.horizon);
  Coupling pi;
  if (mode == "classic") {
    pi = ot_classic(pmu, pnu, c);
  } else if (mode == "bicausal") {
    pi = ot_bicausal(pmu, pnu, c);
  } else if (mode == "causal-lp") {
    CouplingConstraintSet cons;
    cons.mode = CouplingMode::Causal;
    cons.mu = pmu;
    cons.nu = pnu;
    pi = lp_transport_min_cost(cons, c).second;
  } else {
    throw ValidationError("unknown mode '" + mode +
                          "' (want classic, bicausal or causal-lp)");
  }
  std::cout << format_value(pi.cost) << "\n";
  if (!coupling_out.empty()) {
    std::ostringstream ss;
    coupling_to_csv(pi, ss);
    write_file(coupling_out, ss.str());
  }
  return 0;
}

int cmd_dro(const std::string& mu_path, const std::string& payoff,
            const std::string& penalty, const std::string& grid,
            const std::string& mode_name, bool oracle,
            const std::string& deltas, const std::string& out_path) {
  const ScenarioTree mu = load_tree(read_file(mu_path));
  const PathFunctional f = parse_payoff(payoff);
  const Penalty L = parse_penalty(penalty);
  const CostSpec c = CostSpec::sqdist(mu.horizon);
  const CandidateGrids grids = parse_grid(grid, mu, L);
  DroMode mode;
  if (mode_name == "causal") {
    mode = DroMode::Causal;
  } else if (mode_name == "classical") {
    mode = DroMode::Classical;
  } else {
    throw ValidationError("unknown mode '" + mode_name +
                          "' (want causal or classical)");
  }
  if (!deltas.empty()) {
    const auto curve = radius_curve(mu, f, c, parse_range(deltas, "--deltas"),
                                    grids, mode);
    emit(radius_curve_csv(curve), out_path);
    return 0;
  }
  DualSolveReport rep = solve_penalized(mu, f, c, L, grids, mode);
  if (oracle) {
    if (L.kind != Penalty::Kind::Ball)
      throw ValidationError("--oracle needs a ball penalty");
    const double primal = primal_dro_ball(
        mu, f, c, L.param,
        mode == DroMode::Causal ? CouplingMode::Causal : CouplingMode::Classical,
        grids.all_paths());
    rep.oracle_gap = rep.value - primal;
    emit(report_to_json(rep), out_path);
    std::cout << "primal " << format_value(primal) << "\n";
    std::cout << "gap " << format_value(*rep.oracle_gap) << "\n";
    return 0;
  }
  emit(report_to_json(rep), out_path);
  return 0;
}

int cmd_avar(double alpha, double sigma, int atoms, double radius,
             const std::string& strikes, int points, const std::string& out_path) {
  GbmSpec spec;
  spec.sigma = sigma;
  spec.atoms = atoms;
  const auto ks = parse_range(strikes, "--strikes");
  if (radius < 0.0) throw ValidationError("avar: radius must be >= 0");
  const double delta = radius * radius;
  const auto rows = run_avar_experiment(spec, alpha, delta, ks.front(),
                                        ks.back(),
                                        ks.size() > 1 ? ks[1] - ks[0] : 1.0,
                                        points);
  emit(avar_experiment_csv(rows), out_path);
  return 0;
}

int cmd_lq(double A, double B, int N, double x1, double vw, double delta,
           double cap) {
  LQSpec spec;
  spec.A = A;
  spec.B = B;
  spec.N = N;
  spec.x1 = x1;
  spec.vw = vw;
  spec.delta = delta;
  spec.lambda_cap = cap;
  const LqResult res = lq_solve(spec);
  nlohmann::json j;
  j["value"] = res.value;
  j["lambda_star"] = res.lambda_star;
  j["kappa"] = res.lambda_star / (res.lambda_star - 1.0);
  j["on_cap"] = res.on_cap;
  j["classical_value"] = res.classical_value;
  j["p"] = res.riccati.p;
  j["q"] = res.riccati.q;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_control(const std::string& problem_path, const std::string& cost,
                const std::string& penalty, bool oracle) {
  const ControlProblem pb = control_from_json(read_file(problem_path));
  const CostSpec c = parse_cost(cost, pb.horizon);
  const Penalty L = parse_penalty(penalty);
  const std::vector<std::vector<double>> ygrids = pb.state_grids;
  ControlOptions opts;
  opts.refine = false;  // keep the sup on the grid so the oracle check is exact
  const ControlSolveReport rep = solve_robust_control(pb, c, L, ygrids, opts);
  nlohmann::json j;
  j["value"] = rep.value;
  j["lambda_star"] = rep.lambda_star;
  j["on_cap"] = rep.on_cap;
  j["max_snap"] = rep.max_snap;
  j["policy"] = nlohmann::json::parse(policy_to_json(pb, rep.policy));
  std::cout << j.dump(2) << "\n";
  if (oracle) {
    if (L.kind != Penalty::Kind::Ball)
      throw ValidationError("--oracle needs a ball penalty");
    const ScenarioTree law = controlled_law(pb, rep.policy);
    const PathFunctional fsum = PathFunctional::custom(
        [&pb](const Path& p) {
          double s = 0.0;
          for (std::size_t n = 0; n < p.size(); ++n)
            s += pb.obs_cost[n].eval(p[n][0]);
          return s;
        },
        true,
        [&pb](int n, const Vec& v) { return pb.obs_cost[n - 1].eval(v[0]); });
    CandidateGrids grids;
    grids.steps.resize(pb.horizon);
    for (int n = 0; n < pb.horizon; ++n)
      for (double x : pb.state_grids[n]) grids.steps[n].push_back({x});
    const double primal =
        expected_control_cost(pb, rep.policy) +
        primal_dro_ball(law, fsum, c, L.param, CouplingMode::Causal,
                        grids.all_paths());
    std::cout << "primal " << format_value(primal) << "\n";
    std::cout << "gap " << format_value(rep.value - primal) << "\n";
  }
  return 0;
}

StagePayoffs parse_stage_payoff(const std::string& spec, int horizon) {
  const auto parts = split(spec, ':');
  if (parts[0] == "statequad") {
    const double a = parts.size() > 1 ? num(parts[1], "--payoff") : 1.0;
    const double b = parts.size() > 2 ? num(parts[2], "--payoff") : 0.0;
    const double cc = parts.size() > 3 ? num(parts[3], "--payoff") : 0.0;
    return StagePayoffs::terminal_state(
        horizon, [a, b, cc](double x) { return a * x * x + b * x + cc; });
  }
  throw ValidationError("unknown stopping payoff '" + spec +
                        "' (want statequad[:a[:b[:c]]])");
}

int cmd_stopping(bool demo, const std::string& mu_path,
                 const std::string& payoff, const std::string& cost,
                 double delta, const std::string& candidates_path,
                 bool primal) {
  if (demo) {
    const RelaxationReport rep = relaxation_demo();
    nlohmann::json j;
    j["j_nu1"] = rep.j_nu1;
    j["j_nu2"] = rep.j_nu2;
    j["j_plain_mixture"] = rep.j_plain_mixture;
    j["j_augmented"] = rep.j_augmented;
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  if (mu_path.empty())
    throw ValidationError("stopping: need --mu (or --demo)");
  const ScenarioTree mu = load_tree(read_file(mu_path));
  const StagePayoffs f = parse_stage_payoff(payoff, mu.horizon);
  const CostSpec c = parse_cost(cost, mu.horizon);
  std::vector<ScenarioTree> extra;
  if (!candidates_path.empty()) {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(read_file(candidates_path));
      if (!arr.is_array()) throw ValidationError("candidates file: want a JSON array");
      for (const auto& doc : arr) extra.push_back(load_tree(doc.dump()));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("candidates file: ") + e.what());
    }
  }
  const CandidateFamily fam = make_candidates(mu, delta, extra);
  const StoppingDualReport rep =
      robust_stopping_dual(mu, f, fam, c, Penalty::ball(delta));
  std::cout << stopping_report_to_json(rep, fam) << "\n";
  if (primal) {
    const double p = stopping_restricted_primal(mu, f, fam, c, delta);
    std::cout << "primal " << format_value(p) << "\n";
    std::cout << "gap " << format_value(rep.value - p) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized distributionally robust optimization on scenario trees"};
  app.require_subcommand(0, 1);

  std::vector<double> gen;
  app.add_option("--gen-random", gen,
                 "emit a random plain tree: HORIZON MAX_BRANCH DIMS SEED")
      ->expected(4);

  // ot
  auto* ot = app.add_subcommand("ot", "transport value between two trees");
  std::string ot_mu, ot_nu, ot_cost = "sqdist", ot_mode = "classic", ot_cout;
  ot->add_option("--mu", ot_mu, "first tree (JSON)")->required();
  ot->add_option("--nu", ot_nu, "second tree (JSON)")->required();
  ot->add_option("--cost", ot_cost, "sqdist | dist | table:PATH");
  ot->add_option("--mode", ot_mode, "classic | bicausal | causal-lp");
  ot->add_option("--coupling-out", ot_cout, "write the coupling as CSV");

  // dro
  auto* dro = app.add_subcommand("dro", "penalized robust value of a payoff");
  std::string dro_mu, dro_payoff, dro_penalty = "ball:0.1", dro_grid = "auto";
  std::string dro_mode = "causal", dro_deltas, dro_out;
  bool dro_oracle = false;
  dro->add_option("--mu", dro_mu, "baseline tree (JSON)")->required();
  dro->add_option("--payoff", dro_payoff, "payoff NAME[:param]")->required();
  dro->add_option("--penalty", dro_penalty, "ball:D | linear:K | quad:B");
  dro->add_option("--grid", dro_grid, "auto | support | HALFWIDTH:POINTS");
  dro->add_option("--mode", dro_mode, "causal | classical");
  dro->add_flag("--oracle", dro_oracle, "cross-check against the primal LP");
  dro->add_option("--deltas", dro_deltas, "ball radius sweep LO:HI:STEP (CSV)");
  dro->add_option("--out", dro_out, "write output to a file");

  // avar
  auto* avar = app.add_subcommand("avar", "robust AVaR option study (CSV)");
  double av_alpha = 0.95, av_sigma = 0.2, av_radius = 0.3;
  int av_atoms = 16, av_points = 25;
  std::string av_strikes = "0.5:1.5:0.05", av_out;
  avar->add_option("--alpha", av_alpha, "tail level in (0,1)");
  avar->add_option("--sigma", av_sigma, "volatility");
  avar->add_option("--atoms", av_atoms, "quantile atoms per step");
  avar->add_option("--radius", av_radius, "ball radius r (budget r^2)");
  avar->add_option("--strikes", av_strikes, "strike sweep LO:HI:STEP");
  avar->add_option("--points", av_points, "grid points per dimension");
  avar->add_option("--out", av_out, "write CSV to a file");

  // lq
  auto* lq = app.add_subcommand("lq", "closed-form robust LQ control");
  double lq_A = 1.0, lq_B = 1.0, lq_x1 = 0.0, lq_vw = 0.0, lq_delta = 0.0,
         lq_cap = 1e9;
  int lq_N = 2;
  lq->add_option("--A", lq_A, "state coefficient");
  lq->add_option("--B", lq_B, "control coefficient");
  lq->add_option("--N", lq_N, "horizon (>= 2)");
  lq->add_option("--x1", lq_x1, "initial state");
  lq->add_option("--vw", lq_vw, "noise variance per step");
  lq->add_option("--delta", lq_delta, "ball budget");
  lq->add_option("--cap", lq_cap, "lambda cap");

  // control
  auto* control = app.add_subcommand("control", "robust control on a grid MDP");
  std::string ct_problem, ct_cost = "sqdist", ct_penalty = "ball:0.1";
  bool ct_oracle = false;
  control->add_option("--problem", ct_problem, "problem description (JSON)")
      ->required();
  control->add_option("--cost", ct_cost, "sqdist | dist | table:PATH");
  control->add_option("--penalty", ct_penalty, "ball:D | linear:K | quad:B");
  control->add_flag("--oracle", ct_oracle,
                    "check the policy against the primal LP (ball only)");

  // stopping
  auto* stopping = app.add_subcommand("stopping", "robust optimal stopping");
  bool st_demo = false, st_primal = false;
  std::string st_mu, st_payoff = "statequad", st_cost = "sqdist", st_cands;
  double st_delta = 0.0;
  stopping->add_flag("--demo", st_demo, "run the relaxation demo");
  stopping->add_option("--mu", st_mu, "baseline tree (JSON)");
  stopping->add_option("--payoff", st_payoff, "statequad[:a[:b[:c]]]");
  stopping->add_option("--cost", st_cost, "sqdist | dist | table:PATH");
  stopping->add_option("--delta", st_delta, "ball budget");
  stopping->add_option("--candidates", st_cands,
                       "extra candidate trees (JSON array)");
  stopping->add_flag("--primal", st_primal,
                     "also solve the restricted primal LP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!gen.empty()) {
      const int horizon = static_cast<int>(gen[0]);
      const int branch = static_cast<int>(gen[1]);
      const int dims = static_cast<int>(gen[2]);
      Rng rng(static_cast<unsigned long long>(gen[3]));
      const RandomInstance inst =
          random_plain_instance(rng, horizon, branch, std::max(3, branch + 1), dims);
      std::cout << save_tree(inst.tree) << "\n";
      return 0;
    }
    if (ot->parsed())
      return cmd_ot(ot_mu, ot_nu, ot_cost, ot_mode, ot_cout);
    if (dro->parsed())
      return cmd_dro(dro_mu, dro_payoff, dro_penalty, dro_grid, dro_mode,
                     dro_oracle, dro_deltas, dro_out);
    if (avar->parsed())
      return cmd_avar(av_alpha, av_sigma, av_atoms, av_radius, av_strikes,
                      av_points, av_out);
    if (lq->parsed())
      return cmd_lq(lq_A, lq_B, lq_N, lq_x1, lq_vw, lq_delta, lq_cap);
    if (control->parsed())
      return cmd_control(ct_problem, ct_cost, ct_penalty, ct_oracle);
    if (stopping->parsed())
      return cmd_stopping(st_demo, st_mu, st_payoff, st_cost, st_delta,
                          st_cands, st_primal);
    std::cout << app.help();
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CapExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const UnboundedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
