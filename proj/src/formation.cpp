#include "forma/formation.hpp"

#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "forma/nlp.hpp"

namespace forma {

void FormationSpec::validate() const {
  if (members.empty()) {
    throw ConfigurationError("formation has no members");
  }
  if (!(d_min > 0.0)) {
    throw ConfigurationError("d_min must be positive");
  }
  if (!(r_max > d_min)) {
    throw ConfigurationError("r_max must exceed d_min");
  }
  if (!(jammer_standoff_fraction >= 0.0 && jammer_standoff_fraction <= 1.0)) {
    throw ConfigurationError("jammer_standoff_fraction must lie in [0, 1]");
  }
  if (!(leader.speed >= 0.0) ||
      std::abs(leader.direction.norm() - 1.0) > 1e-9) {
    throw ConfigurationError(
        "leader path needs a non-negative speed and a unit direction");
  }

  double sum = 0.0;
  std::set<std::string> ids;
  for (const FormationMember& m : members) {
    if (!ids.insert(m.id).second) {
      throw ConfigurationError("duplicate member id '" + m.id + "'");
    }
    if (!(m.weight >= 0.0)) {
      throw ConfigurationError("negative weight for '" + m.id + "'");
    }
    sum += m.weight;
    const Eigen::Matrix3d& M = m.control_weight;
    if (!M.isApprox(M.transpose(), 1e-12)) {
      throw ConfigurationError("control weight of '" + m.id +
                               "' is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(M);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
      throw ConfigurationError("control weight of '" + m.id +
                               "' is not positive definite");
    }
    if (m.jam && m.role == UavRole::reconnaissance) {
      throw ConfigurationError("reconnaissance member '" + m.id +
                               "' cannot have a jamming assignment");
    }
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw ConfigurationError("weights sum to " + std::to_string(sum) +
                             ", expected 1");
  }

  const int n = static_cast<int>(members.size());
  std::set<std::pair<int, int>> seen;
  for (auto [i, j] : topology) {
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw ConfigurationError("topology edge (" + std::to_string(i) + ", " +
                               std::to_string(j) + ") is invalid");
    }
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second) {
      throw ConfigurationError("duplicate topology edge");
    }
  }
}

std::vector<std::pair<int, int>> complete_topology(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      edges.emplace_back(i, j);
    }
  }
  return edges;
}

std::array<Vec3, 6> double_tetrahedron_offsets(double edge, double yaw) {
  const double h_face = edge * std::sqrt(3.0) / 2.0;
  const Vec3 a(0.0, 0.0, 0.0);
  const Vec3 b(edge, 0.0, 0.0);
  const Vec3 c(edge / 2.0, h_face, 0.0);
  // Apex above the centroid of ABC.
  const Vec3 d(edge / 2.0, h_face / 3.0, edge * std::sqrt(2.0 / 3.0));
  const auto mirror = [](const Vec3& p) { return Vec3(p.x(), -p.y(), -p.z()); };

  const Eigen::Matrix3d R =
      Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  return {R * a, R * b, R * c, R * d, R * mirror(c), R * mirror(d)};
}

std::vector<Vec3> reference_positions(double t, const FormationSpec& spec) {
  const Vec3 leader = spec.leader.position(t);

  Vec3 centroid = Vec3::Zero();
  int n_recon = 0;
  for (const FormationMember& m : spec.members) {
    if (m.role == UavRole::reconnaissance) {
      centroid += leader + m.offset;
      ++n_recon;
    }
  }
  centroid = n_recon > 0 ? Vec3(centroid / n_recon) : leader;

  std::vector<Vec3> targets;
  targets.reserve(spec.members.size());
  for (const FormationMember& m : spec.members) {
    if (m.role == UavRole::reconnaissance || !m.jam) {
      targets.push_back(leader + m.offset);
      continue;
    }
    const JammerTarget& jam = *m.jam;
    Vec3 p = centroid + spec.jammer_standoff_fraction * (jam.threat - centroid);
    if (jam.keep_out > 0.0 && (p - jam.threat).norm() < jam.keep_out) {
      Vec3 away = centroid - jam.threat;
      const double len = away.norm();
      away = len > 0.0 ? Vec3(away / len) : Vec3::UnitZ();
      p = jam.threat + jam.keep_out * away;
    }
    targets.push_back(p);
  }
  return targets;
}

double cost_role(const std::vector<Vec3>& trajectory,
                 const std::vector<ControlInput>& controls,
                 const std::vector<Vec3>& targets, const Eigen::Matrix3d& M) {
  if (trajectory.size() != controls.size() ||
      trajectory.size() != targets.size()) {
    throw StructuralError("cost_role: trajectory, controls and targets differ "
                          "in length");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const Vec3 u(controls[t].v, controls[t].omega, controls[t].vz);
    total += (targets[t] - trajectory[t]).squaredNorm() + u.dot(M * u);
  }
  return total;
}

double scalarize(const RoleGroups& costs, const RoleGroups& weights) {
  double sum = 0.0;
  double value = 0.0;
  for (std::size_t r = 0; r < costs.size(); ++r) {
    if (costs[r].size() != weights[r].size()) {
      throw StructuralError("scalarize: cost and weight groups differ in size");
    }
    for (std::size_t i = 0; i < costs[r].size(); ++i) {
      if (!(weights[r][i] >= 0.0)) {
        throw ConfigurationError("scalarize: negative weight");
      }
      sum += weights[r][i];
      value += weights[r][i] * costs[r][i];
    }
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw ConfigurationError("scalarize: weights sum to " +
                             std::to_string(sum) + ", expected 1");
  }
  return value;
}

}  // namespace forma
