#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "forma/formation.hpp"
#include "forma/horizon.hpp"
#include "forma/ipm.hpp"
#include "forma/problems.hpp"
#include "forma/scenario.hpp"
#include "forma/sim.hpp"

namespace forma::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt_num(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot read '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunFlags {
  std::string scenario;
  std::string out = "results";
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<int> horizon;
  std::optional<int> max_iters;
  std::optional<double> sigma;
  std::optional<double> tau;
  std::optional<double> xi;
  std::optional<double> mu0;
  std::optional<std::string> cone_sense;
  bool exact_hessian = false;
  bool no_missile_rows = false;
  bool single_shot = false;
  bool compare_no_jamming = false;
};

SimConfig sim_config(const RunFlags& f) {
  SimConfig c;
  if (f.dt) c.dt = *f.dt;
  if (f.duration) c.duration = *f.duration;
  if (f.horizon) c.horizon = *f.horizon;
  if (f.max_iters) c.solver.max_iters = *f.max_iters;
  if (f.sigma) c.solver.sigma = *f.sigma;
  if (f.tau) c.solver.tau = *f.tau;
  if (f.xi) c.solver.xi = *f.xi;
  if (f.mu0) c.mu0 = *f.mu0;
  if (f.exact_hessian) c.transcription.hessian = HessianMode::exact;
  c.transcription.missile_rows = !f.no_missile_rows;
  c.single_shot = f.single_shot;
  c.validate();
  c.solver.validate();
  return c;
}

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  SimConfig config;
  try {
    // Overrides are checked before the scenario is touched.
    config = sim_config(f);
    scenario = load_scenario(f.scenario);
    if (f.cone_sense) {
      scenario.formation.cone_sense = parse_cone_sense(*f.cone_sense);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }

  const RunResult result = run(scenario, config);
  std::vector<std::pair<std::string, double>> extra;
  if (f.compare_no_jamming) {
    SimConfig bare = config;
    bare.transcription.missile_rows = false;
    const RunResult baseline = run(scenario, bare);
    extra.emplace_back("p_m_no_jamming", baseline.metrics.p_m);
    extra.emplace_back("p_r_no_jamming", baseline.metrics.p_r);
  }

  try {
    fs::create_directories(f.out);
    std::ofstream csv(fs::path(f.out) / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(csv, result.trajectory);
    std::ofstream json(fs::path(f.out) / "metrics.json", std::ios::binary);
    json << metrics_json(result.metrics, result.flagged_failed, extra);
    if (!csv || !json) {
      throw std::runtime_error("write failed");
    }
  } catch (const std::exception& e) {
    err << "error: cannot write to '" << f.out << "': " << e.what() << "\n";
    return kInvalidInput;
  }

  const Metrics& m = result.metrics;
  out << "P_r=" << fmt_num("%.4f", m.p_r) << " P_m=" << fmt_num("%.4f", m.p_m)
      << " connectivity=" << fmt_num("%.4f", m.connectivity_fraction)
      << " failed=" << m.failed_steps << "/" << m.total_steps
      << " min_sep=" << fmt_num("%.2f", m.min_separation) << "m";
  for (const auto& [key, value] : extra) {
    out << " " << key << "=" << fmt_num("%.4f", value);
  }
  out << "\n";
  return result.flagged_failed ? kRunFlagged : kOk;
}

struct SolveFlags {
  std::string problem;
  std::optional<int> max_iters;
  double xi = kSolveTolerance;
};

int cmd_solve(const SolveFlags& f, std::ostream& out, std::ostream& err) {
  std::optional<ReferenceProblem> ref = find_reference_problem(f.problem);
  if (!ref) {
    if (!fs::is_regular_file(f.problem)) {
      err << "error: unknown problem '" << f.problem
          << "' (not a built-in name or a readable file)\n";
      return kInvalidInput;
    }
    try {
      ref = qp_from_json(read_file(f.problem));
    } catch (const std::exception& e) {
      err << "error: " << f.problem << ": " << e.what() << "\n";
      return kInvalidInput;
    }
  }

  SolverConfig config;
  config.xi = f.xi;
  if (f.max_iters) config.max_iters = *f.max_iters;
  try {
    config.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }

  out << "   k          mu       merit    residual     alpha_p\n";
  const auto row = [&](const IterationEvent& ev) {
    char line[128];
    std::snprintf(line, sizeof line, "%4d  %10.3e  %10.3e  %10.3e  %10.3e\n",
                  ev.k, ev.mu, ev.merit_after, ev.residual_inf, ev.alpha.u);
    out << line;
  };
  SolverResult res;
  try {
    res = solve(ref->problem, initial_iterate(ref->problem, ref->u0), config,
                row);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSolverFailure;
  }

  out << "status: " << to_string(res.status) << " after " << res.iterations
      << " iterations, residual " << fmt_num("%.3e", res.final_residual_inf)
      << "\nu = (";
  const Eigen::VectorXd& u = res.final_iterate.u;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    out << (j ? ", " : "") << fmt_num("%.9g", u[j]);
  }
  out << ")\n";
  switch (res.status) {
    case SolverStatus::converged:
      return kOk;
    case SolverStatus::max_iters:
      return kMaxIters;
    default:
      return kSolverFailure;
  }
}

struct GradFlags {
  std::string scenario;
  int points = 10;
  unsigned seed = 7;
  double spread = 0.05;
  std::optional<int> horizon;
  bool exact_hessian = false;
};

int cmd_check_grad(const GradFlags& f, std::ostream& out, std::ostream& err) {
  HorizonProblem hp;
  try {
    if (f.points < 1) {
      throw ConfigurationError("--points must be at least 1");
    }
    const Scenario scenario = load_scenario(f.scenario);
    HorizonOptions options;
    if (f.horizon) options.K = *f.horizon;
    if (f.exact_hessian) options.hessian = HessianMode::exact;
    options.validate();
    hp = build_nlp(scenario, options);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  const Eigen::VectorXd center =
      hp.rollout(hold_controls(hp.x0, load_scenario(f.scenario), hp.K));
  const auto points = check_points(center, f.points, f.spread, f.seed);
  const GradientSummary summary =
      check_gradients(hp.nlp, points, kGradientTolerance, out);
  return summary.ok ? kOk : kGradientMismatch;
}

struct MetricsFlags {
  std::string scenario;
  std::string trajectory;
  std::string out;
};

int cmd_metrics(const MetricsFlags& f, std::ostream& out, std::ostream& err) {
  try {
    const Scenario scenario = load_scenario(f.scenario);
    std::ifstream in(f.trajectory, std::ios::binary);
    if (!in) {
      throw ValidationError("cannot read '" + f.trajectory + "'");
    }
    Trajectory traj = read_trajectory_csv(in);
    if (traj.ids.size() != scenario.uavs.size()) {
      throw ValidationError("trajectory has " +
                            std::to_string(traj.ids.size()) +
                            " vehicles, scenario has " +
                            std::to_string(scenario.uavs.size()));
    }
    for (std::size_t i = 0; i < traj.ids.size(); ++i) {
      traj.initial.push_back(scenario.uavs[i].initial);
    }
    const Metrics m = compute_metrics(traj, scenario);
    const std::string text = metrics_json(m, false);
    if (f.out.empty()) {
      out << text;
    } else {
      std::ofstream file(f.out, std::ios::binary);
      file << text;
      if (!file) {
        throw ValidationError("cannot write '" + f.out + "'");
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  return kOk;
}

}  // namespace

std::vector<Eigen::VectorXd> check_points(const Eigen::VectorXd& center,
                                          int count, double spread,
                                          unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Eigen::VectorXd> points;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd p = center;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      p[j] += spread * (1.0 + std::abs(center[j])) * unit(rng);
    }
    points.push_back(std::move(p));
  }
  return points;
}

GradientSummary check_gradients(const NlpProblem& problem,
                                const std::vector<Eigen::VectorXd>& points,
                                double tolerance, std::ostream& out) {
  GradientSummary summary;
  for (const Eigen::VectorXd& p : points) {
    const FdCheckReport report = fd_check(problem, p, tolerance);
    for (const FdCheckEntry& e : report.entries) {
      auto it = std::find_if(
          summary.worst.begin(), summary.worst.end(),
          [&](const FdCheckEntry& w) { return w.callback == e.callback; });
      if (it == summary.worst.end()) {
        summary.worst.push_back(e);
      } else if (!e.failure.empty() || e.max_rel_error > it->max_rel_error) {
        if (it->failure.empty() || !e.failure.empty()) {
          *it = e;
        }
      }
    }
    ++summary.points;
  }

  summary.ok = true;
  out << "points checked: " << summary.points << "\n";
  for (const FdCheckEntry& e : summary.worst) {
    const bool bad = !e.failure.empty() || e.max_rel_error > tolerance;
    summary.ok = summary.ok && !bad;
    char line[160];
    std::snprintf(line, sizeof line, "%-16s worst rel error %.3e  %s",
                  e.callback.c_str(), e.max_rel_error, bad ? "FAIL" : "ok");
    out << line;
    if (!e.failure.empty()) {
      out << " (" << e.failure << ")";
    } else if (bad) {
      out << " at (" << e.worst_row << ", " << e.worst_col << ")";
    }
    out << "\n";
  }
  return summary;
}

void configure_logging() {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("forma");
    spdlog::set_default_logger(l);
    return l;
  }();
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("FORMA_LOG")) {
    const std::string v = env;
    if (v == "error") {
      level = spdlog::level::err;
    } else if (v == "debug") {
      level = spdlog::level::debug;
    } else if (v != "info" && !v.empty()) {
      logger->warn("FORMA_LOG='{}' not one of error|info|debug; using info",
                   v);
    }
  }
  logger->set_level(level);
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  configure_logging();

  CLI::App app{"Multi-UAV formation planning with a primal-dual interior "
               "point solver"};
  app.require_subcommand(1, 1);

  RunFlags rf;
  CLI::App* run_cmd = app.add_subcommand(
      "run", "Closed-loop receding-horizon simulation of a scenario");
  run_cmd->add_option("--scenario", rf.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--out", rf.out,
                      "Output directory for trajectory.csv and metrics.json")
      ->capture_default_str();
  run_cmd->add_option("--dt", rf.dt, "Control interval, s")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--duration", rf.duration, "Mission length, s")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--horizon", rf.horizon, "Horizon length, steps")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-iters", rf.max_iters,
                      "Iteration limit per horizon solve")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--sigma", rf.sigma, "Centering parameter");
  run_cmd->add_option("--tau", rf.tau, "Fraction-to-boundary parameter");
  run_cmd->add_option("--xi", rf.xi, "Convergence tolerance on the merit");
  run_cmd->add_option("--mu0", rf.mu0, "Initial barrier value per solve")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--cone-sense", rf.cone_sense,
                      "Missile cone sign convention")
      ->check(CLI::IsMember({"outside", "inside"}));
  run_cmd->add_flag("--exact-hessian", rf.exact_hessian,
                    "Use the exact Lagrangian Hessian instead of "
                    "Gauss-Newton");
  run_cmd->add_flag("--no-missile-rows", rf.no_missile_rows,
                    "Drop the missile jamming rows");
  run_cmd->add_flag("--single-shot", rf.single_shot,
                    "Solve one problem over the whole mission");
  run_cmd->add_flag("--compare-no-jamming", rf.compare_no_jamming,
                    "Also run without missile rows and report "
                    "p_m_no_jamming");

  SolveFlags sf;
  CLI::App* solve_cmd = app.add_subcommand(
      "solve", "Solve a built-in test problem or a QP document");
  solve_cmd->add_option("problem", sf.problem,
                        "Built-in name (qp-ineq, eq-only, mixed, ...) or "
                        "path to a QP JSON file")
      ->required();
  solve_cmd->add_option("--max-iters", sf.max_iters, "Iteration limit")
      ->check(CLI::PositiveNumber);
  solve_cmd->add_option("--xi", sf.xi, "Stopping tolerance, residual inf-norm")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GradFlags gf;
  CLI::App* grad_cmd = app.add_subcommand(
      "check-grad", "Finite-difference check of the horizon problem");
  grad_cmd->add_option("--scenario", gf.scenario, "Scenario JSON")
      ->required();
  grad_cmd->add_option("--points", gf.points, "Number of points")
      ->capture_default_str();
  grad_cmd->add_option("--seed", gf.seed, "Point generator seed")
      ->capture_default_str();
  grad_cmd->add_option("--horizon", gf.horizon, "Horizon length, steps")
      ->check(CLI::PositiveNumber);
  grad_cmd->add_flag("--exact-hessian", gf.exact_hessian,
                     "Check the exact Lagrangian Hessian");

  MetricsFlags mf;
  CLI::App* metrics_cmd = app.add_subcommand(
      "metrics", "Recompute metrics from a trajectory CSV");
  metrics_cmd->add_option("--scenario", mf.scenario, "Scenario JSON")
      ->required();
  metrics_cmd->add_option("--trajectory", mf.trajectory, "trajectory.csv")
      ->required();
  metrics_cmd->add_option("--out", mf.out, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInvalidInput;
  }

  if (*run_cmd) return cmd_run(rf, out, err);
  if (*solve_cmd) return cmd_solve(sf, out, err);
  if (*grad_cmd) return cmd_check_grad(gf, out, err);
  return cmd_metrics(mf, out, err);
}

}  // namespace forma::cli
