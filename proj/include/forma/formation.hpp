#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "forma/constraints.hpp"
#include "forma/uav.hpp"

namespace forma {

/// Inconsistent formation or scenario parameters.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Constant-velocity straight line followed by the virtual leader.
struct LeaderPath {
  Vec3 origin = Vec3::Zero();
  /// m/s along `direction`.
  double speed = 0.0;
  /// Unit vector.
  Vec3 direction = Vec3::UnitX();

  Vec3 position(double t) const { return origin + speed * t * direction; }
  Vec3 velocity() const { return speed * direction; }
};

/// Where an interference vehicle should sit relative to its threat.
struct JammerTarget {
  Vec3 threat = Vec3::Zero();
  /// If positive, the target is kept at least this far from the threat.
  double keep_out = 0.0;
};

struct FormationMember {
  std::string id;
  UavRole role = UavRole::reconnaissance;
  /// Displacement from the virtual leader.
  Vec3 offset = Vec3::Zero();
  /// ω for this vehicle's role cost.
  double weight = 0.0;
  /// Control weighting M (symmetric positive definite).
  Eigen::Matrix3d control_weight = Eigen::Matrix3d::Identity();
  /// Set for interference roles with an assignment.
  std::optional<JammerTarget> jam;
};

struct FormationSpec {
  LeaderPath leader;
  std::vector<FormationMember> members;
  double d_min = 40.0;
  double r_max = 10000.0;
  /// Pairs (i, j), i < j, that must stay within r_max.
  std::vector<std::pair<int, int>> topology;
  /// Fraction of the way from the protected centroid to the threat.
  double jammer_standoff_fraction = 0.5;
  ConeSense cone_sense = ConeSense::outside;

  /// Throws ConfigurationError on a broken invariant.
  void validate() const;
};

/// Every unordered pair of n vehicles.
std::vector<std::pair<int, int>> complete_topology(int n);

/**
 * Vertices A, B, C, D, C′, D′ of two regular tetrahedra of the given edge
 * length sharing the edge AB: A at the origin, AB along x before the yaw
 * rotation, and C′D′ the mirror of CD through the x axis.
 */
std::array<Vec3, 6> double_tetrahedron_offsets(double edge, double yaw = 0.0);

/**
 * Target position of every member at time t.
 *
 * Reconnaissance members track leader + offset. Interference members with a
 * JammerTarget sit on the segment from the reconnaissance centroid to the
 * threat at jammer_standoff_fraction, pushed back out to keep_out if that
 * point is too close. Members without one track leader + offset.
 */
std::vector<Vec3> reference_positions(double t, const FormationSpec& spec);

/**
 * Σₜ ‖target(t) − p(t)‖² + u(t)ᵀ M u(t).
 *
 * Throws StructuralError unless all three sequences have the same length.
 */
double cost_role(const std::vector<Vec3>& trajectory,
                 const std::vector<ControlInput>& controls,
                 const std::vector<Vec3>& targets, const Eigen::Matrix3d& M);

/// Per-vehicle values grouped by role, indexed by static_cast<int>(UavRole).
using RoleGroups = std::array<std::vector<double>, 3>;

/**
 * Σ over roles and members of ω·F.
 *
 * Throws StructuralError if a cost group and its weight group differ in
 * size, ConfigurationError if a weight is negative or the weights do not
 * sum to 1 within 1e-9.
 */
double scalarize(const RoleGroups& costs, const RoleGroups& weights);

inline constexpr double kWeightSumTolerance = 1e-9;

}  // namespace forma
