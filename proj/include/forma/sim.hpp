#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "forma/horizon.hpp"
#include "forma/ipm.hpp"
#include "forma/scenario.hpp"

namespace forma {

struct SimConfig {
  /// seconds
  double duration = 200.0;
  double dt = 1.0;
  /// Receding-horizon length in steps.
  int horizon = 10;
  /// Solve one problem spanning the whole mission and apply it open loop.
  bool single_shot = false;
  SolverConfig solver;
  /// K and dt are taken from the fields above.
  HorizonOptions transcription;
  /// Barrier value used to seed λ and s at every solve.
  double mu0 = 0.1;
  /// A run with more than this fraction of failed solves is flagged.
  double failure_fraction = 0.1;
  /// Called for every accepted interior-point step of every solve.
  IterationObserver on_iteration;

  /// Number of applied steps, duration / dt.
  int steps() const;
  /// Throws ConfigurationError (duration/dt not integral, horizon < 1, ...).
  void validate() const;
};

/// One applied control interval for the whole formation.
struct StepRecord {
  /// Mission time at the end of the interval.
  double t = 0.0;
  /// States reached at t.
  std::vector<UavState> states;
  /// Controls applied over (t − dt, t].
  std::vector<ControlInput> controls;
  SolverStatus status = SolverStatus::converged;
  bool failed = false;
  int iterations = 0;
  /// Final merit value of the solve (NaN when no solve ran).
  double merit = 0.0;
  double residual = 0.0;
  /// The strict horizon problem failed and this step used the re-solve in
  /// which every warm-start violation is tolerated. Not written to CSV.
  bool fallback = false;
};

struct Trajectory {
  std::vector<std::string> ids;
  std::vector<UavState> initial;
  std::vector<StepRecord> steps;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Largest physical constraint value of each family at one step (−∞ when a
/// family has no rows).
struct StepConstraints {
  double terrain = -kInf;
  double radar = -kInf;
  double missile_cone = -kInf;
  double missile_standoff = -kInf;
  double collision = -kInf;
  double connectivity = -kInf;

  double worst() const;
};

/**
 * Unrelaxed constraint values at one set of positions: g_terrain, g_radar,
 * g_missile for every vehicle other than the missile's jammer,
 * g_collision over all pairs and g_connectivity over the topology.
 */
StepConstraints evaluate_constraints(const Scenario& scenario,
                                     const std::vector<UavState>& states);

struct CommGraph {
  int n = 0;
  /// Unordered pairs (i, j), i < j.
  std::vector<std::pair<int, int>> edges;

  int e() const { return static_cast<int>(edges.size()); }
};

CommGraph build_comm_graph(const std::vector<Vec3>& positions, double r_max);

/// Traversal-based; a graph with one node is connected.
bool is_connected(const CommGraph& graph);

struct Metrics {
  double p_r = 0.0;
  double p_m = 0.0;
  double min_separation = 0.0;
  double connectivity_fraction = 0.0;
  int failed_steps = 0;
  int total_steps = 0;
  /// Largest value of each constraint family over the run.
  StepConstraints worst;
  /// Per step, per vehicle comm_weight over its graph neighbors.
  std::vector<std::vector<double>> comm_weights;
};

/// Exposure is a violation above this, in each row's physical units.
inline constexpr double kExposureTolerance = 1e-3;

/**
 * P_r / P_m count steps at which any vehicle violates g_radar / the
 * missile pair by more than kExposureTolerance.
 */
Metrics compute_metrics(const Trajectory& trajectory, const Scenario& scenario);

struct RunResult {
  Trajectory trajectory;
  Metrics metrics;
  bool flagged_failed = false;
  double seconds = 0.0;
};

using StepObserver = std::function<void(const StepRecord&)>;

/**
 * Receding-horizon closed loop: at each step build the horizon problem from
 * the current states, warm-start from the previous plan shifted by one step,
 * solve, apply the first control and advance with step_dynamics. A failed
 * solve is retried once with every warm-start violation tolerated; if that
 * fails too, the previous control is repeated.
 */
RunResult run(const Scenario& scenario, const SimConfig& config,
              const StepObserver& observer = {});

inline constexpr const char* kTrajectoryHeader =
    "t,uav_id,x,y,z,psi_rad,v_mps,vz_mps,omega_radps,solver_status,merit";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/**
 * Inverse of write_trajectory_csv. `initial` is not stored in the file and
 * is left empty. Throws ParseError on malformed input.
 */
Trajectory read_trajectory_csv(std::istream& in);

/// JSON object with p_r, p_m, min_separation_m, connectivity_fraction,
/// failed_steps, total_steps and the worst constraint values.
std::string metrics_json(const Metrics& metrics, bool flagged_failed,
                         const std::vector<std::pair<std::string, double>>&
                             extra = {});

}  // namespace forma
