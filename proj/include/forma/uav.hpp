#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace forma {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Kinematic state of one vehicle. Positions in meters, heading in radians.
struct UavState {
  Vec3 p = Vec3::Zero();
  double psi = 0.0;
  double v = 0.0;
};

/// Commanded speed (m/s), yaw rate (rad/s) and climb rate (m/s).
struct ControlInput {
  double v = 0.0;
  double omega = 0.0;
  double vz = 0.0;
};

enum class UavRole { reconnaissance, radar_interference, missile_interference };

const char* to_string(UavRole role);

/// Throws std::invalid_argument on an unknown name.
UavRole parse_role(const std::string& name);

struct UavLimits {
  double v_min = 0.0;
  double v_max = 0.0;
  /// Largest per-step change of commanded speed.
  double dv_max = 0.0;
  /// rad/s
  double yaw_rate_max = 0.0;
  double vz_max = 0.0;
};

/// Wraps an angle into (−π, π].
double normalize_angle(double a);

/**
 * Forward-Euler step of the planar unicycle with a climb channel:
 *
 *   p_x += v cos ψ Δt,  p_y += v sin ψ Δt,  p_z += v_z Δt,  ψ += ϖ Δt,
 *
 * where v is the commanded speed, which also becomes the new state speed.
 * The heading is normalized afterwards. Bounds are not enforced here.
 */
UavState step_dynamics(const UavState& state, const ControlInput& control,
                       double dt);

/// Projects a control onto the limits, using `current_speed` for the
/// per-step speed-change bound.
ControlInput clamp_control(const ControlInput& control, const UavLimits& limits,
                           double current_speed);

/// True if the horizontal point lies inside (or on) the polygon.
bool point_in_polygon(const Vec2& point, const std::vector<Vec2>& polygon);

/// Horizontal distance from a point to the polygon (0 inside).
double distance_to_polygon(const Vec2& point, const std::vector<Vec2>& polygon);

}  // namespace forma
