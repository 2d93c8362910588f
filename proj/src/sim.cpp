#include "forma/sim.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "forma/kkt.hpp"

namespace forma {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const char* status_label(const StepRecord& r) {
  return r.failed && r.status == SolverStatus::converged ? "error"
                                                         : to_string(r.status);
}

void parse_status(const std::string& text, StepRecord& r) {
  r.failed = text != "converged";
  for (SolverStatus s :
       {SolverStatus::converged, SolverStatus::max_iters,
        SolverStatus::regularization_failure,
        SolverStatus::line_search_failure}) {
    if (text == to_string(s)) {
      r.status = s;
      return;
    }
  }
  if (text == "error") {
    r.status = SolverStatus::converged;
    return;
  }
  throw ParseError("trajectory: unknown solver_status '" + text + "'");
}

double parse_double(const std::string& text, const std::string& what) {
  double x = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, x);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("trajectory: bad " + what + " '" + text + "'");
  }
  return x;
}

std::vector<Vec3> positions_of(const std::vector<UavState>& states) {
  std::vector<Vec3> p;
  p.reserve(states.size());
  for (const UavState& s : states) {
    p.push_back(s.p);
  }
  return p;
}

/// Result of one attempt at a horizon solve.
struct PlanOutcome {
  bool ok = false;
  SolverStatus status = SolverStatus::converged;
  int iterations = 0;
  double merit = kNan;
  double residual = kNan;
  bool fallback = false;
  std::vector<std::vector<ControlInput>> controls;
};

PlanOutcome plan_horizon(const Scenario& scenario,
                         const std::vector<UavState>& states, double t0,
                         const HorizonOptions& options,
                         const std::vector<std::vector<ControlInput>>& warm,
                         const SimConfig& config) {
  PlanOutcome out;
  try {
    const HorizonProblem hp = build_nlp(scenario, states, t0, options, warm);
    const Iterate v0 =
        initial_iterate(hp.nlp, hp.rollout(warm), config.mu0);
    const SolverResult res = solve(hp.nlp, v0, config.solver, config.on_iteration);
    out.status = res.status;
    out.iterations = res.iterations;
    out.residual = res.final_residual_inf;
    out.merit = merit(kkt_residual(hp.nlp, res.final_iterate, 0.0));
    out.ok = res.status == SolverStatus::converged;
    if (out.ok) {
      out.controls = hp.decode(res.final_iterate.u).controls;
    }
  } catch (const std::exception& e) {
    spdlog::warn("t={}: horizon solve aborted: {}", t0, e.what());
    out.ok = false;
  }
  return out;
}

}  // namespace

int SimConfig::steps() const {
  return static_cast<int>(std::llround(duration / dt));
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !(duration > 0.0)) {
    throw ConfigurationError("duration and dt must be positive");
  }
  if (std::abs(duration / dt - steps()) > 1e-9 * std::max(1.0, duration / dt)) {
    throw ConfigurationError("duration must be an integral multiple of dt");
  }
  if (horizon < 1) {
    throw ConfigurationError("horizon must be at least 1");
  }
  if (!(mu0 > 0.0)) {
    throw ConfigurationError("mu0 must be positive");
  }
  if (!(failure_fraction >= 0.0 && failure_fraction <= 1.0)) {
    throw ConfigurationError("failure_fraction must lie in [0, 1]");
  }
  solver.validate();
  HorizonOptions t = transcription;
  t.K = single_shot ? steps() : horizon;
  t.dt = dt;
  t.validate();
}

double StepConstraints::worst() const {
  return std::max({terrain, radar, missile_cone, missile_standoff, collision,
                   connectivity});
}

StepConstraints evaluate_constraints(const Scenario& scenario,
                                     const std::vector<UavState>& states) {
  StepConstraints c;
  const ThreatSet& th = scenario.threats;
  const FormationSpec& spec = scenario.formation;
  const int n = static_cast<int>(states.size());
  for (int i = 0; i < n; ++i) {
    for (const Mountain& m : th.mountains) {
      c.terrain = std::max(c.terrain, g_terrain(states[i], m));
    }
    for (const Radar& r : th.radars) {
      c.radar = std::max(c.radar, g_radar(states[i], r));
    }
    for (const Missile& m : th.missiles) {
      const int o = scenario.index_of(m.jammer_id);
      if (o == i) {
        continue;
      }
      try {
        const MissileValues v =
            g_missile(states[i].p, m, states[o].p, spec.cone_sense);
        c.missile_cone = std::max(c.missile_cone, v.cone);
        c.missile_standoff = std::max(c.missile_standoff, v.standoff);
      } catch (const DegenerateGeometryError&) {
        c.missile_cone = std::numeric_limits<double>::infinity();
      }
    }
    for (int j = i + 1; j < n; ++j) {
      c.collision =
          std::max(c.collision, g_collision(states[i].p, states[j].p, spec.d_min));
    }
  }
  for (auto [i, j] : spec.topology) {
    c.connectivity = std::max(
        c.connectivity, g_connectivity(states[i].p, states[j].p, spec.r_max));
  }
  return c;
}

CommGraph build_comm_graph(const std::vector<Vec3>& positions, double r_max) {
  CommGraph g;
  g.n = static_cast<int>(positions.size());
  for (int i = 0; i < g.n; ++i) {
    for (int j = i + 1; j < g.n; ++j) {
      if ((positions[i] - positions[j]).norm() <= r_max) {
        g.edges.emplace_back(i, j);
      }
    }
  }
  return g;
}

bool is_connected(const CommGraph& graph) {
  if (graph.n <= 1) {
    return true;
  }
  std::vector<std::vector<int>> adj(graph.n);
  for (auto [i, j] : graph.edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<bool> seen(graph.n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int w : adj[u]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == graph.n;
}

Metrics compute_metrics(const Trajectory& trajectory, const Scenario& scenario) {
  Metrics m;
  m.total_steps = static_cast<int>(trajectory.steps.size());
  m.min_separation = std::numeric_limits<double>::infinity();
  int radar_exposed = 0;
  int missile_exposed = 0;
  int connected = 0;
  const double d_min = scenario.formation.d_min;

  for (const StepRecord& step : trajectory.steps) {
    if (step.failed) {
      ++m.failed_steps;
    }
    const StepConstraints c = evaluate_constraints(scenario, step.states);
    if (c.radar > kExposureTolerance) {
      ++radar_exposed;
    }
    if (c.missile_cone > kExposureTolerance ||
        c.missile_standoff > kExposureTolerance) {
      ++missile_exposed;
    }
    m.worst.terrain = std::max(m.worst.terrain, c.terrain);
    m.worst.radar = std::max(m.worst.radar, c.radar);
    m.worst.missile_cone = std::max(m.worst.missile_cone, c.missile_cone);
    m.worst.missile_standoff =
        std::max(m.worst.missile_standoff, c.missile_standoff);
    m.worst.collision = std::max(m.worst.collision, c.collision);
    m.worst.connectivity = std::max(m.worst.connectivity, c.connectivity);

    const std::vector<Vec3> p = positions_of(step.states);
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = i + 1; j < p.size(); ++j) {
        m.min_separation = std::min(m.min_separation, (p[i] - p[j]).norm());
      }
    }
    const CommGraph g = build_comm_graph(p, scenario.formation.r_max);
    if (is_connected(g)) {
      ++connected;
    }
    std::vector<std::vector<Vec3>> neighbors(p.size());
    for (auto [i, j] : g.edges) {
      neighbors[i].push_back(p[j]);
      neighbors[j].push_back(p[i]);
    }
    std::vector<double> weights;
    for (std::size_t i = 0; i < p.size(); ++i) {
      weights.push_back(comm_weight(p[i], neighbors[i], d_min));
    }
    m.comm_weights.push_back(std::move(weights));
  }

  if (m.total_steps > 0) {
    m.p_r = static_cast<double>(radar_exposed) / m.total_steps;
    m.p_m = static_cast<double>(missile_exposed) / m.total_steps;
    m.connectivity_fraction = static_cast<double>(connected) / m.total_steps;
  }
  return m;
}

RunResult run(const Scenario& scenario, const SimConfig& config,
              const StepObserver& observer) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const int S = config.steps();
  const int N = scenario.size();
  const double dt = config.dt;

  RunResult result;
  Trajectory& traj = result.trajectory;
  std::vector<UavState> states;
  for (const UavSpec& u : scenario.uavs) {
    traj.ids.push_back(u.id);
    states.push_back(u.initial);
  }
  traj.initial = states;

  HorizonOptions options = config.transcription;
  options.K = config.single_shot ? S : config.horizon;
  options.dt = dt;

  std::vector<std::vector<ControlInput>> plan =
      hold_controls(states, scenario, options.K);
  std::vector<ControlInput> previous;
  for (const auto& p : plan) {
    previous.push_back(p.front());
  }

  PlanOutcome outcome;
  for (int k = 0; k < S; ++k) {
    const double t0 = k * dt;
    const bool solve_now = !config.single_shot || k == 0;
    if (solve_now) {
      outcome = plan_horizon(scenario, states, t0, options, plan, config);
      if (!outcome.ok && options.recovery_funnel &&
          !options.excuse_warm_violations) {
        // The strict problem may be infeasible (a vehicle already committed
        // to a violation it cannot see around); accept the warm start's
        // violations and try once more before holding the last control.
        HorizonOptions relaxed = options;
        relaxed.excuse_warm_violations = true;
        const int spent = outcome.iterations;
        outcome =
            plan_horizon(scenario, states, t0, relaxed, plan, config);
        outcome.iterations += spent;
        outcome.fallback = true;
        spdlog::debug("t={:.3f}: strict solve failed, relaxed solve {}", t0,
                      to_string(outcome.status));
      }
      if (outcome.ok) {
        plan = outcome.controls;
      }
    }

    StepRecord rec;
    rec.t = (k + 1) * dt;
    rec.status = outcome.status;
    rec.failed = !outcome.ok;
    rec.iterations = solve_now ? outcome.iterations : 0;
    rec.merit = outcome.merit;
    rec.residual = outcome.residual;
    rec.fallback = solve_now && outcome.fallback;

    for (int i = 0; i < N; ++i) {
      const UavLimits& lim = scenario.uavs[i].limits;
      const ControlInput u =
          outcome.ok ? clamp_control(plan[i].front(), lim, states[i].v)
                     : previous[i];
      rec.controls.push_back(u);
      previous[i] = u;
      states[i] = step_dynamics(states[i], u, dt);
      // Shift the plan; the last control is repeated.
      plan[i].erase(plan[i].begin());
      plan[i].push_back(plan[i].empty() ? u : plan[i].back());
    }
    rec.states = states;

    spdlog::debug("t={:.3f} status={} iters={} residual={:.3e}", rec.t,
                  status_label(rec), rec.iterations, rec.residual);
    if (observer) {
      observer(rec);
    }
    traj.steps.push_back(std::move(rec));
  }

  result.metrics = compute_metrics(traj, scenario);
  result.flagged_failed =
      S > 0 && static_cast<double>(result.metrics.failed_steps) / S >
                   config.failure_fraction;
  result.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return result;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << kTrajectoryHeader << '\n';
  for (const StepRecord& s : trajectory.steps) {
    for (std::size_t i = 0; i < s.states.size(); ++i) {
      const UavState& x = s.states[i];
      const ControlInput& u = s.controls[i];
      out << format_double(s.t) << ',' << trajectory.ids[i] << ','
          << format_double(x.p.x()) << ',' << format_double(x.p.y()) << ','
          << format_double(x.p.z()) << ',' << format_double(x.psi) << ','
          << format_double(x.v) << ',' << format_double(u.vz) << ','
          << format_double(u.omega) << ',' << status_label(s) << ','
          << format_double(s.merit) << '\n';
    }
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) {
    throw ParseError("trajectory: missing or unexpected header");
  }
  Trajectory traj;
  std::map<std::string, std::size_t> index;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      f.push_back(cell);
    }
    if (f.size() != 11) {
      throw ParseError("trajectory line " + std::to_string(line_no) +
                       ": expected 11 fields");
    }
    const double t = parse_double(f[0], "t");
    if (traj.steps.empty() || traj.steps.back().t != t) {
      traj.steps.emplace_back();
      traj.steps.back().t = t;
      parse_status(f[9], traj.steps.back());
      traj.steps.back().merit = parse_double(f[10], "merit");
    }
    StepRecord& s = traj.steps.back();
    if (!index.count(f[1])) {
      index[f[1]] = traj.ids.size();
      traj.ids.push_back(f[1]);
    }
    if (index[f[1]] != s.states.size()) {
      throw ParseError("trajectory line " + std::to_string(line_no) +
                       ": vehicles out of order");
    }
    UavState x;
    x.p = Vec3(parse_double(f[2], "x"), parse_double(f[3], "y"),
               parse_double(f[4], "z"));
    x.psi = parse_double(f[5], "psi_rad");
    x.v = parse_double(f[6], "v_mps");
    s.states.push_back(x);
    s.controls.push_back(
        {x.v, parse_double(f[8], "omega_radps"), parse_double(f[7], "vz_mps")});
  }
  return traj;
}

std::string metrics_json(const Metrics& m, bool flagged_failed,
                         const std::vector<std::pair<std::string, double>>&
                             extra) {
  const auto num = [](double x) -> nlohmann::json {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
  };
  nlohmann::ordered_json j;
  j["p_r"] = m.p_r;
  j["p_m"] = m.p_m;
  j["min_separation_m"] = num(m.min_separation);
  j["connectivity_fraction"] = m.connectivity_fraction;
  j["failed_steps"] = m.failed_steps;
  j["total_steps"] = m.total_steps;
  j["run_failed"] = flagged_failed;
  for (const auto& [key, value] : extra) {
    j[key] = num(value);
  }
  j["worst_constraint"] = {
      {"terrain_m", num(m.worst.terrain)},
      {"radar_m2", num(m.worst.radar)},
      {"missile_cone", num(m.worst.missile_cone)},
      {"missile_standoff_m", num(m.worst.missile_standoff)},
      {"collision_m", num(m.worst.collision)},
      {"connectivity_m", num(m.worst.connectivity)},
  };
  return j.dump(2) + "\n";
}

}  // namespace forma
