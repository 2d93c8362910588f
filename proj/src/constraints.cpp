#include "forma/constraints.hpp"

#include <cmath>

namespace forma {

namespace {

using Eigen::Matrix3d;

double checked_norm(const Vec3& d, const char* what) {
  const double n = d.norm();
  if (!(n > 0.0)) {
    throw DegenerateGeometryError(what);
  }
  return n;
}

}  // namespace

const char* to_string(ConeSense sense) {
  return sense == ConeSense::outside ? "outside" : "inside";
}

ConeSense parse_cone_sense(const std::string& name) {
  if (name == "outside") {
    return ConeSense::outside;
  }
  if (name == "inside") {
    return ConeSense::inside;
  }
  throw std::invalid_argument("unknown cone sense '" + name +
                              "' (expected outside or inside)");
}

double g_terrain(const UavState& state, const Mountain& mountain) {
  const double base = mountain.height - state.p.z();
  return point_in_polygon(state.p.head<2>(), mountain.footprint)
             ? base
             : base - kTerrainOffFootprint;
}

double g_radar(const UavState& state, const Radar& radar) {
  return radar.detection_radius * radar.detection_radius -
         (state.p - radar.position).squaredNorm();
}

MissileValues g_missile(const Vec3& uav_pos, const Missile& missile,
                        const Vec3& jammer_pos, ConeSense sense) {
  const Vec3 a = uav_pos - missile.position;
  const Vec3 b = jammer_pos - missile.position;
  const double na = checked_norm(a, "vehicle coincides with the missile");
  const double nb = checked_norm(b, "jammer coincides with the missile");

  MissileValues out;
  out.cosine = a.dot(b) / (na * nb);
  const double edge = std::cos(0.5 * missile.aperture);
  out.cone = sense == ConeSense::outside ? out.cosine - edge : edge - out.cosine;
  out.standoff = -(na - nb);
  return out;
}

double g_collision(const Vec3& p_i, const Vec3& p_j, double d_min) {
  return d_min - (p_i - p_j).norm();
}

double g_connectivity(const Vec3& p_i, const Vec3& p_j, double r_max) {
  return (p_i - p_j).norm() - r_max;
}

double comm_weight(const Vec3& p_i, const std::vector<Vec3>& neighbors,
                   double d_min) {
  double sum = 0.0;
  for (const Vec3& p_j : neighbors) {
    const double d = (p_i - p_j).norm();
    if (d <= d_min) {
      return std::numeric_limits<double>::infinity();
    }
    sum += 1.0 / ((d - d_min) * d);
  }
  return sum;
}

PointTerm squared_distance_term(const Vec3& p, const Vec3& c) {
  PointTerm t;
  const Vec3 d = p - c;
  t.value = d.squaredNorm();
  t.grad = 2.0 * d;
  t.hess = 2.0 * Matrix3d::Identity();
  return t;
}

PairTerm distance_term(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  const double n = checked_norm(d, "distance between coincident points");
  const Vec3 u = d / n;
  const Matrix3d P = (Matrix3d::Identity() - u * u.transpose()) / n;

  PairTerm t;
  t.value = n;
  t.grad_a = u;
  t.grad_b = -u;
  t.hess_aa = P;
  t.hess_ab = -P;
  t.hess_bb = P;
  return t;
}

PairTerm cosine_term(const Vec3& a, const Vec3& b, const Vec3& apex) {
  const Vec3 da = a - apex;
  const Vec3 db = b - apex;
  const double na = checked_norm(da, "point coincides with the cone apex");
  const double nb = checked_norm(db, "point coincides with the cone apex");
  const Vec3 ua = da / na;
  const Vec3 ub = db / nb;
  const double cs = ua.dot(ub);
  const Matrix3d I = Matrix3d::Identity();

  PairTerm t;
  t.value = cs;
  t.grad_a = (ub - cs * ua) / na;
  t.grad_b = (ua - cs * ub) / nb;
  t.hess_aa = (-(ub * ua.transpose() + ua * ub.transpose()) +
               3.0 * cs * ua * ua.transpose() - cs * I) /
              (na * na);
  t.hess_bb = (-(ua * ub.transpose() + ub * ua.transpose()) +
               3.0 * cs * ub * ub.transpose() - cs * I) /
              (nb * nb);
  t.hess_ab = (I - ub * ub.transpose() - ua * ua.transpose() +
               cs * ua * ub.transpose()) /
              (na * nb);
  return t;
}

PairTerm distance_difference_term(const Vec3& a, const Vec3& b,
                                  const Vec3& apex) {
  const PairTerm ta = distance_term(a, apex);
  const PairTerm tb = distance_term(b, apex);
  PairTerm t;
  t.value = ta.value - tb.value;
  t.grad_a = ta.grad_a;
  t.grad_b = -tb.grad_a;
  t.hess_aa = ta.hess_aa;
  t.hess_bb = -tb.hess_aa;
  return t;
}

}  // namespace forma
