#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forma/uav.hpp"

namespace forma {

// Every g_* below follows one rule: the constraint holds iff the value ≤ 0.

struct Radar {
  Vec3 position = Vec3::Zero();
  /// meters
  double detection_radius = 0.0;
};

struct Missile {
  Vec3 position = Vec3::Zero();
  /// Full interference aperture θ in radians.
  double aperture = 0.0;
  std::string jammer_id;
};

struct Mountain {
  std::vector<Vec2> footprint;
  double height = 0.0;
};

struct ThreatSet {
  std::vector<Radar> radars;
  std::vector<Missile> missiles;
  std::vector<Mountain> mountains;
};

/// Which side of the aperture cone a protected vehicle must be on.
enum class ConeSense {
  /// CS − cos(θ/2) ≤ 0: angularly separated from the jammer.
  outside,
  /// cos(θ/2) − CS ≤ 0: inside the jamming cone.
  inside,
};

const char* to_string(ConeSense sense);
ConeSense parse_cone_sense(const std::string& name);

class DegenerateGeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Value used off the footprint so the row can never bind.
inline constexpr double kTerrainOffFootprint = 1e5;

/// h − p_z over the footprint, h − p_z − kTerrainOffFootprint elsewhere.
double g_terrain(const UavState& state, const Mountain& mountain);

/// R² − ‖p − p_r‖²
double g_radar(const UavState& state, const Radar& radar);

struct MissileValues {
  /// CS − cos(θ/2) (outside sense) or its negation (inside sense).
  double cone = 0.0;
  /// −(‖p_i − p_m‖ − ‖p_o − p_m‖)
  double standoff = 0.0;
  /// Cosine between p_i − p_m and p_o − p_m.
  double cosine = 0.0;
};

/// Throws DegenerateGeometryError if either vehicle sits on the missile.
MissileValues g_missile(const Vec3& uav_pos, const Missile& missile,
                        const Vec3& jammer_pos,
                        ConeSense sense = ConeSense::outside);

/// d_min − ‖p_i − p_j‖
double g_collision(const Vec3& p_i, const Vec3& p_j, double d_min);

/// ‖p_i − p_j‖ − R_max
double g_connectivity(const Vec3& p_i, const Vec3& p_j, double r_max);

/**
 * Σ_j 1 / ((‖p_i − p_j‖ − d_min)·‖p_i − p_j‖). Diagnostic only; returns
 * +∞ if any neighbor is at or inside d_min.
 */
double comm_weight(const Vec3& p_i, const std::vector<Vec3>& neighbors,
                   double d_min);

// Second-order pieces used by the horizon transcription.

/// Value, gradient and Hessian of a scalar function of one position.
struct PointTerm {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

/// Same for a function of two positions (a, b).
struct PairTerm {
  double value = 0.0;
  Vec3 grad_a = Vec3::Zero();
  Vec3 grad_b = Vec3::Zero();
  Eigen::Matrix3d hess_aa = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d hess_ab = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d hess_bb = Eigen::Matrix3d::Zero();
};

/// ‖p − c‖² about a fixed center.
PointTerm squared_distance_term(const Vec3& p, const Vec3& c);

/// ‖a − b‖; throws DegenerateGeometryError when a = b.
PairTerm distance_term(const Vec3& a, const Vec3& b);

/**
 * Cosine of the angle at `apex` between a − apex and b − apex.
 * Throws DegenerateGeometryError if a or b coincides with the apex.
 */
PairTerm cosine_term(const Vec3& a, const Vec3& b, const Vec3& apex);

/// ‖a − apex‖ − ‖b − apex‖
PairTerm distance_difference_term(const Vec3& a, const Vec3& b,
                                  const Vec3& apex);

}  // namespace forma
