#include "forma/uav.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace forma {

const char* to_string(UavRole role) {
  switch (role) {
    case UavRole::reconnaissance:
      return "reconnaissance";
    case UavRole::radar_interference:
      return "radar_interference";
    case UavRole::missile_interference:
      return "missile_interference";
  }
  return "unknown";
}

UavRole parse_role(const std::string& name) {
  if (name == "reconnaissance") {
    return UavRole::reconnaissance;
  }
  if (name == "radar_interference") {
    return UavRole::radar_interference;
  }
  if (name == "missile_interference") {
    return UavRole::missile_interference;
  }
  throw std::invalid_argument("unknown role '" + name + "'");
}

double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) {
    a += two_pi;
  } else if (a > std::numbers::pi) {
    a -= two_pi;
  }
  return a;
}

UavState step_dynamics(const UavState& state, const ControlInput& control,
                       double dt) {
  UavState next;
  next.p.x() = state.p.x() + control.v * std::cos(state.psi) * dt;
  next.p.y() = state.p.y() + control.v * std::sin(state.psi) * dt;
  next.p.z() = state.p.z() + control.vz * dt;
  next.psi = normalize_angle(state.psi + control.omega * dt);
  next.v = control.v;
  return next;
}

ControlInput clamp_control(const ControlInput& control, const UavLimits& limits,
                           double current_speed) {
  ControlInput out;
  const double lo = std::max(limits.v_min, current_speed - limits.dv_max);
  const double hi = std::min(limits.v_max, current_speed + limits.dv_max);
  out.v = lo <= hi ? std::clamp(control.v, lo, hi)
                   : std::clamp(control.v, limits.v_min, limits.v_max);
  out.omega =
      std::clamp(control.omega, -limits.yaw_rate_max, limits.yaw_rate_max);
  out.vz = std::clamp(control.vz, -limits.vz_max, limits.vz_max);
  return out;
}

bool point_in_polygon(const Vec2& point, const std::vector<Vec2>& polygon) {
  return polygon.size() >= 3 && distance_to_polygon(point, polygon) == 0.0;
}

double distance_to_polygon(const Vec2& point, const std::vector<Vec2>& polygon) {
  const std::size_t n = polygon.size();
  if (n == 0) {
    return std::numeric_limits<double>::infinity();
  }

  // Even-odd crossing test, then the nearest edge distance if outside.
  bool inside = false;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[j];
    if ((a.y() > point.y()) != (b.y() > point.y())) {
      const double x_cross =
          a.x() + (point.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (point.x() < x_cross) {
        inside = !inside;
      }
    }
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t =
        len2 > 0.0 ? std::clamp((point - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (a + t * ab - point).norm());
  }
  return inside || best == 0.0 ? 0.0 : best;
}

}  // namespace forma
