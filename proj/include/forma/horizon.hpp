#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forma/nlp.hpp"
#include "forma/scenario.hpp"
#include "forma/uav.hpp"

namespace forma {

/**
 * Transcription knobs. Scales map physical quantities to the O(1) decision
 * variables and residual rows the solver sees; margins tighten each row in
 * physical units so that a solve stopped at the residual tolerance still
 * leaves the true constraint satisfied.
 */
struct HorizonOptions {
  int K = 10;
  double dt = 1.0;
  HessianMode hessian = HessianMode::gauss_newton;
  /// Include missile cone/standoff rows.
  bool missile_rows = true;

  // Variable scales.
  double position_scale = 1000.0;
  double speed_scale = 10.0;
  double yaw_rate_scale = 0.01;
  double climb_scale = 10.0;
  double heading_scale = 1.0;

  // Row scales: dynamics position rows (m), heading rows (rad), speed rows
  // (m/s); constraint rows measured in meters, and the cone row.
  double dyn_position_row = 10.0;
  double dyn_heading_row = 0.01;
  double dyn_speed_row = 1.0;
  double length_row = 10.0;
  double cone_row = 0.01;
  /// Tracking objective length unit (m); sets how finely a stopping
  /// tolerance resolves formation error.
  double objective_length = 1000.0;

  // Tightening, physical units.
  double terrain_margin = 20.0;
  double radar_margin = 25.0;
  double standoff_margin = 10.0;
  double cone_margin = 0.005;
  double collision_margin = 10.0;
  double connectivity_margin = 50.0;

  /// Terrain rows bind for a vehicle whose horizontal distance to the
  /// footprint at build time is within v_max·K·dt plus this buffer.
  double terrain_buffer = 500.0;

  /// Threat, terrain and pair rows violated by the warm start one step
  /// ahead are relaxed, along the whole horizon, to (1 − recovery_rate)
  /// times the warm start's violation.
  bool recovery_funnel = true;
  double recovery_rate = 0.0;
  /// Relax every row the warm start violates, not only those violated one
  /// step ahead. Always solvable from the warm start; used as a fallback.
  bool excuse_warm_violations = false;

  /// At the last step a radar row also demands one minimum-speed turning
  /// radius of clearance, so the plan never ends where a vehicle can no
  /// longer turn away in time.
  bool terminal_turn_clearance = true;

  void validate() const;
};

enum class RowKind {
  terrain,
  radar,
  missile_cone,
  missile_standoff,
  speed_min,
  speed_max,
  yaw_rate_max,
  yaw_rate_min,
  climb_max,
  climb_min,
  accel_max,
  decel_max,
  collision,
  connectivity,
};

const char* to_string(RowKind kind);

/// What one inequality row constrains.
struct RowInfo {
  RowKind kind = RowKind::terrain;
  /// Vehicle index (first vehicle for pair rows).
  int uav = 0;
  /// Horizon step 0..K−1; the row acts on the state at step + 1 (or on the
  /// control at step for bound rows).
  int step = 0;
  /// Threat index for threat rows, second vehicle for pair rows, else −1.
  int other = -1;
  /// True if the bound was relaxed by the recovery funnel.
  bool relaxed = false;
};

/// Controls u(0..K−1) and states x(1..K) per vehicle, physical units.
struct HorizonSolution {
  std::vector<std::vector<ControlInput>> controls;
  std::vector<std::vector<UavState>> states;
};

struct HorizonData;

/**
 * A horizon-K formation problem over N vehicles.
 *
 * Decision layout: for vehicle i and step t the block at (i·K + t)·8 holds
 * [v_cmd, ϖ, v_z](t) followed by [p_x, p_y, p_z, ψ, v](t + 1), each divided
 * by its variable scale. Equality rows (i·K + t)·5 + k enforce the Euler
 * step; ψ is left unwrapped inside the problem.
 */
struct HorizonProblem {
  static constexpr int kStateDim = 5;
  static constexpr int kControlDim = 3;
  static constexpr int kBlock = kStateDim + kControlDim;

  int n_uavs = 0;
  int K = 0;
  double dt = 0.0;
  double t0 = 0.0;
  std::vector<UavState> x0;
  std::vector<RowInfo> ineq_rows;
  /// Physical value = scaled value · var_scale.
  Eigen::VectorXd var_scale;
  NlpProblem nlp;
  std::shared_ptr<const HorizonData> data;

  int block(int uav, int t) const { return (uav * K + t) * kBlock; }

  Eigen::VectorXd encode(const HorizonSolution& solution) const;
  HorizonSolution decode(const Eigen::VectorXd& y) const;

  /// Scaled decision vector obtained by integrating `controls` from x0.
  Eigen::VectorXd rollout(
      const std::vector<std::vector<ControlInput>>& controls) const;

  /// Number of inequality rows of each kind.
  int count(RowKind kind) const;
};

/**
 * Direct transcription from the given initial states at mission time t0.
 *
 * `warm_controls` (default: hold_controls) is the plan the recovery
 * relaxation is measured against; it is not stored.
 *
 * Throws ConfigurationError on infeasible bounds (v_min > v_max) or bad
 * options and StructuralError if x0 does not match the roster.
 */
HorizonProblem build_nlp(const Scenario& scenario,
                         const std::vector<UavState>& x0, double t0,
                         const HorizonOptions& options,
                         const std::vector<std::vector<ControlInput>>&
                             warm_controls = {});

/// Same, starting from the scenario's initial states at t = 0.
HorizonProblem build_nlp(const Scenario& scenario,
                         const HorizonOptions& options);

/// Integrates controls from x0 without wrapping ψ.
std::vector<UavState> integrate(const UavState& x0,
                                const std::vector<ControlInput>& controls,
                                double dt);

/// Warm-start controls: hold the current speed, no turn, no climb.
std::vector<std::vector<ControlInput>> hold_controls(
    const std::vector<UavState>& x0, const Scenario& scenario, int K);

}  // namespace forma
