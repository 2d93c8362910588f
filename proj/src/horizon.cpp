#include "forma/horizon.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "forma/constraints.hpp"
#include "forma/formation.hpp"

namespace forma {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Slots inside one decision block.
enum Slot : int { kV = 0, kOmega, kVz, kPx, kPy, kPz, kPsi, kSpeed };

enum class Nonlinear { none, radar, cone, standoff, distance };

/**
 * One scaled inequality row: c0 + Σ coef·y[col] + c1·f(p_a, p_b), with f
 * chosen by `nl` and evaluated on physical positions.
 */
struct Row {
  RowInfo info;
  double c0 = 0.0;
  std::vector<std::pair<int, double>> lin;
  Nonlinear nl = Nonlinear::none;
  int ia = -1;
  int ib = -1;
  Vec3 center = Vec3::Zero();
  double c1 = 0.0;
};

}  // namespace

struct HorizonData {
  int N = 0;
  int K = 0;
  double dt = 0.0;
  HorizonOptions opt;
  std::vector<UavState> x0;
  VectorXd scale;
  std::vector<Row> rows;
  /// Constant objective Hessian and the pieces of F.
  MatrixXd obj_hess;
  VectorXd obj_lin;
  double obj_const = 0.0;
};

namespace {

Vec3 position(const HorizonData& d, const VectorXd& y, int idx) {
  return y.segment<3>(idx) * d.opt.position_scale;
}

double row_value(const HorizonData& d, const Row& r, const VectorXd& y) {
  double v = r.c0;
  for (const auto& [col, coef] : r.lin) {
    v += coef * y[col];
  }
  switch (r.nl) {
    case Nonlinear::none:
      break;
    case Nonlinear::radar:
      v += r.c1 * (position(d, y, r.ia) - r.center).squaredNorm();
      break;
    case Nonlinear::cone: {
      const Vec3 a = position(d, y, r.ia) - r.center;
      const Vec3 b = position(d, y, r.ib) - r.center;
      const double na = a.norm();
      const double nb = b.norm();
      if (!(na > 0.0 && nb > 0.0)) {
        throw DegenerateGeometryError("vehicle coincides with a missile");
      }
      v += r.c1 * a.dot(b) / (na * nb);
      break;
    }
    case Nonlinear::standoff:
      v += r.c1 * ((position(d, y, r.ia) - r.center).norm() -
                   (position(d, y, r.ib) - r.center).norm());
      break;
    case Nonlinear::distance:
      v += r.c1 * (position(d, y, r.ia) - position(d, y, r.ib)).norm();
      break;
  }
  return v;
}

/// Physical derivatives of the nonlinear part of a row.
PairTerm nonlinear_term(const HorizonData& d, const Row& r, const VectorXd& y) {
  PairTerm t;
  switch (r.nl) {
    case Nonlinear::none:
      break;
    case Nonlinear::radar: {
      const PointTerm p = squared_distance_term(position(d, y, r.ia), r.center);
      t.value = p.value;
      t.grad_a = p.grad;
      t.hess_aa = p.hess;
      break;
    }
    case Nonlinear::cone:
      t = cosine_term(position(d, y, r.ia), position(d, y, r.ib), r.center);
      break;
    case Nonlinear::standoff:
      t = distance_difference_term(position(d, y, r.ia), position(d, y, r.ib),
                                   r.center);
      break;
    case Nonlinear::distance:
      t = distance_term(position(d, y, r.ia), position(d, y, r.ib));
      break;
  }
  return t;
}

VectorXd ineq_values(const HorizonData& d, const VectorXd& y) {
  VectorXd g(static_cast<Eigen::Index>(d.rows.size()));
  for (std::size_t k = 0; k < d.rows.size(); ++k) {
    g[static_cast<Eigen::Index>(k)] = row_value(d, d.rows[k], y);
  }
  return g;
}

MatrixXd ineq_jacobian(const HorizonData& d, const VectorXd& y) {
  MatrixXd J = MatrixXd::Zero(static_cast<Eigen::Index>(d.rows.size()),
                              y.size());
  const double ps = d.opt.position_scale;
  for (std::size_t k = 0; k < d.rows.size(); ++k) {
    const Row& r = d.rows[k];
    const auto row = static_cast<Eigen::Index>(k);
    for (const auto& [col, coef] : r.lin) {
      J(row, col) += coef;
    }
    if (r.nl == Nonlinear::none) {
      continue;
    }
    const PairTerm t = nonlinear_term(d, r, y);
    J.block<1, 3>(row, r.ia) += (r.c1 * ps) * t.grad_a.transpose();
    if (r.ib >= 0) {
      J.block<1, 3>(row, r.ib) += (r.c1 * ps) * t.grad_b.transpose();
    }
  }
  return J;
}

/// Indices of the previous state's slots, or −1 when it is the fixed x0.
int prev_block(const HorizonData& d, int i, int t) {
  return t == 0 ? -1 : (i * d.K + t - 1) * HorizonProblem::kBlock;
}

struct PrevState {
  double px, py, pz, psi, v;
  int base;  // −1 if fixed
};

PrevState prev_state(const HorizonData& d, const VectorXd& y, int i, int t) {
  const int b = prev_block(d, i, t);
  if (b < 0) {
    const UavState& s = d.x0[i];
    return {s.p.x(), s.p.y(), s.p.z(), s.psi, s.v, -1};
  }
  const VectorXd& sc = d.scale;
  return {y[b + kPx] * sc[b + kPx], y[b + kPy] * sc[b + kPy],
          y[b + kPz] * sc[b + kPz], y[b + kPsi] * sc[b + kPsi],
          y[b + kSpeed] * sc[b + kSpeed], b};
}

VectorXd eq_values(const HorizonData& d, const VectorXd& y) {
  const HorizonOptions& o = d.opt;
  const VectorXd x = y.cwiseProduct(d.scale);
  VectorXd h(d.N * d.K * HorizonProblem::kStateDim);
  for (int i = 0; i < d.N; ++i) {
    for (int t = 0; t < d.K; ++t) {
      const int b = (i * d.K + t) * HorizonProblem::kBlock;
      const int r = (i * d.K + t) * HorizonProblem::kStateDim;
      const PrevState p = prev_state(d, y, i, t);
      const double v = x[b + kV];
      h[r + 0] =
          (x[b + kPx] - p.px - v * std::cos(p.psi) * d.dt) / o.dyn_position_row;
      h[r + 1] =
          (x[b + kPy] - p.py - v * std::sin(p.psi) * d.dt) / o.dyn_position_row;
      h[r + 2] = (x[b + kPz] - p.pz - x[b + kVz] * d.dt) / o.dyn_position_row;
      h[r + 3] = (x[b + kPsi] - p.psi - x[b + kOmega] * d.dt) / o.dyn_heading_row;
      h[r + 4] = (x[b + kSpeed] - v) / o.dyn_speed_row;
    }
  }
  return h;
}

MatrixXd eq_jacobian(const HorizonData& d, const VectorXd& y) {
  const HorizonOptions& o = d.opt;
  const VectorXd& sc = d.scale;
  MatrixXd J = MatrixXd::Zero(d.N * d.K * HorizonProblem::kStateDim, y.size());
  for (int i = 0; i < d.N; ++i) {
    for (int t = 0; t < d.K; ++t) {
      const int b = (i * d.K + t) * HorizonProblem::kBlock;
      const int r = (i * d.K + t) * HorizonProblem::kStateDim;
      const PrevState p = prev_state(d, y, i, t);
      const double v = y[b + kV] * sc[b + kV];
      const double c = std::cos(p.psi);
      const double s = std::sin(p.psi);
      const double rp = o.dyn_position_row;

      J(r + 0, b + kPx) = sc[b + kPx] / rp;
      J(r + 0, b + kV) = -c * d.dt * sc[b + kV] / rp;
      J(r + 1, b + kPy) = sc[b + kPy] / rp;
      J(r + 1, b + kV) = -s * d.dt * sc[b + kV] / rp;
      J(r + 2, b + kPz) = sc[b + kPz] / rp;
      J(r + 2, b + kVz) = -d.dt * sc[b + kVz] / rp;
      J(r + 3, b + kPsi) = sc[b + kPsi] / o.dyn_heading_row;
      J(r + 3, b + kOmega) = -d.dt * sc[b + kOmega] / o.dyn_heading_row;
      J(r + 4, b + kSpeed) = sc[b + kSpeed] / o.dyn_speed_row;
      J(r + 4, b + kV) = -sc[b + kV] / o.dyn_speed_row;
      if (p.base >= 0) {
        const int q = p.base;
        J(r + 0, q + kPx) = -sc[q + kPx] / rp;
        J(r + 0, q + kPsi) = v * s * d.dt * sc[q + kPsi] / rp;
        J(r + 1, q + kPy) = -sc[q + kPy] / rp;
        J(r + 1, q + kPsi) = -v * c * d.dt * sc[q + kPsi] / rp;
        J(r + 2, q + kPz) = -sc[q + kPz] / rp;
        J(r + 3, q + kPsi) = -sc[q + kPsi] / o.dyn_heading_row;
      }
    }
  }
  return J;
}

double objective(const HorizonData& d, const VectorXd& y) {
  return 0.5 * y.dot(d.obj_hess * y) + d.obj_lin.dot(y) + d.obj_const;
}

MatrixXd lagrangian_hessian(const HorizonData& d, const VectorXd& y,
                            const VectorXd& lambda, const VectorXd& w,
                            HessianMode mode) {
  MatrixXd H = d.obj_hess;
  if (mode == HessianMode::gauss_newton) {
    return H;
  }

  const double ps = d.opt.position_scale;
  for (std::size_t k = 0; k < d.rows.size(); ++k) {
    const Row& r = d.rows[k];
    if (r.nl == Nonlinear::none) {
      continue;
    }
    const double m = lambda[static_cast<Eigen::Index>(k)] * r.c1 * ps * ps;
    if (m == 0.0) {
      continue;
    }
    const PairTerm t = nonlinear_term(d, r, y);
    H.block<3, 3>(r.ia, r.ia) += m * t.hess_aa;
    if (r.ib >= 0) {
      H.block<3, 3>(r.ib, r.ib) += m * t.hess_bb;
      H.block<3, 3>(r.ia, r.ib) += m * t.hess_ab;
      H.block<3, 3>(r.ib, r.ia) += m * t.hess_ab.transpose();
    }
  }

  // Curvature of v·cos ψ and v·sin ψ in the position rows.
  const VectorXd& sc = d.scale;
  const double rp = d.opt.dyn_position_row;
  for (int i = 0; i < d.N; ++i) {
    for (int t = 1; t < d.K; ++t) {
      const int b = (i * d.K + t) * HorizonProblem::kBlock;
      const int r = (i * d.K + t) * HorizonProblem::kStateDim;
      const int q = prev_block(d, i, t);
      const double psi = y[q + kPsi] * sc[q + kPsi];
      const double v = y[b + kV] * sc[b + kV];
      const double c = std::cos(psi);
      const double s = std::sin(psi);
      const double f = -d.dt / rp;
      const double vpsi =
          f * (w[r] * -s + w[r + 1] * c) * sc[b + kV] * sc[q + kPsi];
      const double psipsi =
          f * (w[r] * -v * c + w[r + 1] * -v * s) * sc[q + kPsi] * sc[q + kPsi];
      H(b + kV, q + kPsi) += vpsi;
      H(q + kPsi, b + kV) += vpsi;
      H(q + kPsi, q + kPsi) += psipsi;
    }
  }
  return H;
}

}  // namespace

void HorizonOptions::validate() const {
  if (K < 1) {
    throw ConfigurationError("horizon K must be at least 1");
  }
  if (!(dt > 0.0)) {
    throw ConfigurationError("dt must be positive");
  }
  for (double s : {position_scale, speed_scale, yaw_rate_scale, climb_scale,
                   heading_scale, dyn_position_row, dyn_heading_row,
                   dyn_speed_row, length_row, cone_row,
                   objective_length}) {
    if (!(s > 0.0)) {
      throw ConfigurationError("horizon scales must be positive");
    }
  }
  for (double m : {terrain_margin, radar_margin, standoff_margin, cone_margin,
                   collision_margin, connectivity_margin, terrain_buffer,
                   recovery_rate}) {
    if (!(m >= 0.0)) {
      throw ConfigurationError("horizon margins must be non-negative");
    }
  }
}

const char* to_string(RowKind kind) {
  switch (kind) {
    case RowKind::terrain:
      return "terrain";
    case RowKind::radar:
      return "radar";
    case RowKind::missile_cone:
      return "missile_cone";
    case RowKind::missile_standoff:
      return "missile_standoff";
    case RowKind::speed_min:
      return "speed_min";
    case RowKind::speed_max:
      return "speed_max";
    case RowKind::yaw_rate_max:
      return "yaw_rate_max";
    case RowKind::yaw_rate_min:
      return "yaw_rate_min";
    case RowKind::climb_max:
      return "climb_max";
    case RowKind::climb_min:
      return "climb_min";
    case RowKind::accel_max:
      return "accel_max";
    case RowKind::decel_max:
      return "decel_max";
    case RowKind::collision:
      return "collision";
    case RowKind::connectivity:
      return "connectivity";
  }
  return "unknown";
}

int HorizonProblem::count(RowKind kind) const {
  return static_cast<int>(
      std::count_if(ineq_rows.begin(), ineq_rows.end(),
                    [kind](const RowInfo& r) { return r.kind == kind; }));
}

Eigen::VectorXd HorizonProblem::encode(const HorizonSolution& solution) const {
  if (static_cast<int>(solution.controls.size()) != n_uavs ||
      static_cast<int>(solution.states.size()) != n_uavs) {
    throw StructuralError("encode: solution does not match the roster");
  }
  VectorXd x(n_uavs * K * kBlock);
  for (int i = 0; i < n_uavs; ++i) {
    if (static_cast<int>(solution.controls[i].size()) != K ||
        static_cast<int>(solution.states[i].size()) != K) {
      throw StructuralError("encode: solution does not span the horizon");
    }
    for (int t = 0; t < K; ++t) {
      const int b = block(i, t);
      const ControlInput& u = solution.controls[i][t];
      const UavState& s = solution.states[i][t];
      x.segment<kBlock>(b) << u.v, u.omega, u.vz, s.p.x(), s.p.y(), s.p.z(),
          s.psi, s.v;
    }
  }
  return x.cwiseQuotient(var_scale);
}

HorizonSolution HorizonProblem::decode(const Eigen::VectorXd& y) const {
  if (y.size() != n_uavs * K * kBlock) {
    throw StructuralError("decode: wrong decision vector length");
  }
  const VectorXd x = y.cwiseProduct(var_scale);
  HorizonSolution sol;
  sol.controls.assign(n_uavs, std::vector<ControlInput>(K));
  sol.states.assign(n_uavs, std::vector<UavState>(K));
  for (int i = 0; i < n_uavs; ++i) {
    for (int t = 0; t < K; ++t) {
      const int b = block(i, t);
      sol.controls[i][t] = {x[b + kV], x[b + kOmega], x[b + kVz]};
      UavState& s = sol.states[i][t];
      s.p = x.segment<3>(b + kPx);
      s.psi = x[b + kPsi];
      s.v = x[b + kSpeed];
    }
  }
  return sol;
}

std::vector<UavState> integrate(const UavState& x0,
                                const std::vector<ControlInput>& controls,
                                double dt) {
  std::vector<UavState> out;
  out.reserve(controls.size());
  UavState s = x0;
  for (const ControlInput& u : controls) {
    UavState next = step_dynamics(s, u, dt);
    next.psi = s.psi + u.omega * dt;
    out.push_back(next);
    s = next;
  }
  return out;
}

Eigen::VectorXd HorizonProblem::rollout(
    const std::vector<std::vector<ControlInput>>& controls) const {
  if (static_cast<int>(controls.size()) != n_uavs) {
    throw StructuralError("rollout: controls do not match the roster");
  }
  HorizonSolution sol;
  sol.controls = controls;
  for (int i = 0; i < n_uavs; ++i) {
    sol.states.push_back(integrate(x0[i], controls[i], dt));
  }
  return encode(sol);
}

std::vector<std::vector<ControlInput>> hold_controls(
    const std::vector<UavState>& x0, const Scenario& scenario, int K) {
  std::vector<std::vector<ControlInput>> out;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const UavLimits& l = scenario.uavs[i].limits;
    const ControlInput u{std::clamp(x0[i].v, l.v_min, l.v_max), 0.0, 0.0};
    out.emplace_back(static_cast<std::size_t>(K), u);
  }
  return out;
}

HorizonProblem build_nlp(const Scenario& scenario,
                         const std::vector<UavState>& x0, double t0,
                         const HorizonOptions& options,
                         const std::vector<std::vector<ControlInput>>&
                             warm_controls) {
  options.validate();
  const int N = scenario.size();
  const int K = options.K;
  if (static_cast<int>(x0.size()) != N) {
    throw StructuralError("build_nlp: initial states do not match the roster");
  }
  for (const UavSpec& u : scenario.uavs) {
    if (u.limits.v_min > u.limits.v_max) {
      throw ConfigurationError("UAV '" + u.id + "': v_min exceeds v_max");
    }
  }

  constexpr int B = HorizonProblem::kBlock;
  const int n = N * K * B;
  const double dt = options.dt;
  const double L = options.length_row;
  const double ps = options.position_scale;
  const FormationSpec& spec = scenario.formation;
  const ThreatSet& threats = scenario.threats;

  auto data = std::make_shared<HorizonData>();
  HorizonData& d = *data;
  d.N = N;
  d.K = K;
  d.dt = dt;
  d.opt = options;
  d.x0 = x0;

  d.scale.resize(n);
  for (int b = 0; b < n; b += B) {
    d.scale.segment<B>(b) << options.speed_scale, options.yaw_rate_scale,
        options.climb_scale, ps, ps, ps, options.heading_scale,
        options.speed_scale;
  }

  // Objective: Σᵢ ωᵢ Σₜ (‖target − p‖² + uᵀMu) / (K·ℓ²), a quadratic in y.
  d.obj_hess = MatrixXd::Zero(n, n);
  d.obj_lin = VectorXd::Zero(n);
  const double norm =
      1.0 / (K * options.objective_length * options.objective_length);
  for (int t = 0; t < K; ++t) {
    const std::vector<Vec3> targets =
        reference_positions(t0 + (t + 1) * dt, spec);
    for (int i = 0; i < N; ++i) {
      const FormationMember& m = spec.members[i];
      const double w = m.weight * norm;
      const int b = (i * K + t) * B;
      const Eigen::Vector3d us = d.scale.segment<3>(b);
      d.obj_hess.block<3, 3>(b, b) +=
          2.0 * w * us.asDiagonal() * m.control_weight * us.asDiagonal();
      d.obj_hess.block<3, 3>(b + kPx, b + kPx) +=
          2.0 * w * ps * ps * Eigen::Matrix3d::Identity();
      d.obj_lin.segment<3>(b + kPx) += -2.0 * w * ps * targets[i];
      d.obj_const += w * targets[i].squaredNorm();
    }
  }

  // Inequality rows, step by step.
  auto pos = [&](int i, int t) { return (i * K + t) * B + kPx; };
  auto col = [&](int i, int t, int slot) { return (i * K + t) * B + slot; };
  auto add = [&](Row r) { d.rows.push_back(std::move(r)); };

  // Terrain gating is decided once per vehicle and mountain.
  std::vector<std::vector<bool>> terrain_on(N);
  for (int i = 0; i < N; ++i) {
    const double reach =
        scenario.uavs[i].limits.v_max * K * dt + options.terrain_buffer;
    for (const Mountain& mtn : threats.mountains) {
      terrain_on[i].push_back(
          distance_to_polygon(x0[i].p.head<2>(), mtn.footprint) <= reach);
    }
  }

  for (int t = 0; t < K; ++t) {
    for (int i = 0; i < N; ++i) {
      const UavLimits& lim = scenario.uavs[i].limits;

      for (std::size_t k = 0; k < threats.mountains.size(); ++k) {
        const Mountain& mtn = threats.mountains[k];
        Row r;
        r.info = {RowKind::terrain, i, t, static_cast<int>(k), false};
        double z_req = mtn.height + options.terrain_margin;
        if (!terrain_on[i][k]) {
          z_req = mtn.height - kTerrainOffFootprint;
        }
        r.c0 = z_req / L;
        r.lin = {{col(i, t, kPz), -ps / L}};
        add(std::move(r));
      }

      for (std::size_t k = 0; k < threats.radars.size(); ++k) {
        const Radar& rad = threats.radars[k];
        Row r;
        r.info = {RowKind::radar, i, t, static_cast<int>(k), false};
        double R = rad.detection_radius + options.radar_margin;
        if (options.terminal_turn_clearance && t == K - 1) {
          R += lim.v_min / lim.yaw_rate_max;
        }
        r.nl = Nonlinear::radar;
        r.ia = pos(i, t);
        r.center = rad.position;
        r.c0 = R / (2.0 * L);
        r.c1 = -1.0 / (2.0 * R * L);
        add(std::move(r));
      }

      if (options.missile_rows) {
        for (std::size_t k = 0; k < threats.missiles.size(); ++k) {
          const Missile& ms = threats.missiles[k];
          const int o = scenario.index_of(ms.jammer_id);
          if (o == i) {
            continue;
          }
          const double edge = std::cos(0.5 * ms.aperture);

          Row cone;
          cone.info = {RowKind::missile_cone, i, t, static_cast<int>(k), false};
          cone.nl = Nonlinear::cone;
          cone.ia = pos(i, t);
          cone.ib = pos(o, t);
          cone.center = ms.position;
          if (spec.cone_sense == ConeSense::outside) {
            cone.c0 = -(edge - options.cone_margin) / options.cone_row;
            cone.c1 = 1.0 / options.cone_row;
          } else {
            cone.c0 = (edge + options.cone_margin) / options.cone_row;
            cone.c1 = -1.0 / options.cone_row;
          }
          add(std::move(cone));

          Row st;
          st.info = {RowKind::missile_standoff, i, t, static_cast<int>(k),
                     false};
          st.nl = Nonlinear::standoff;
          st.ia = pos(i, t);
          st.ib = pos(o, t);
          st.center = ms.position;
          st.c0 = options.standoff_margin / L;
          st.c1 = -1.0 / L;
          add(std::move(st));
        }
      }

      // Control and speed-change bounds.
      const double vs = options.speed_scale;
      const double ws = options.yaw_rate_scale;
      const double cs = options.climb_scale;
      const double sr = options.dyn_speed_row;
      const double yr = options.yaw_rate_scale;
      const int cv = col(i, t, kV);
      const int cw = col(i, t, kOmega);
      const int cz = col(i, t, kVz);
      auto bound = [&](RowKind kind, double c0,
                       std::vector<std::pair<int, double>> lin) {
        Row r;
        r.info = {kind, i, t, -1, false};
        r.c0 = c0;
        r.lin = std::move(lin);
        add(std::move(r));
      };
      bound(RowKind::speed_min, lim.v_min / sr, {{cv, -vs / sr}});
      bound(RowKind::speed_max, -lim.v_max / sr, {{cv, vs / sr}});
      bound(RowKind::yaw_rate_max, -lim.yaw_rate_max / yr, {{cw, ws / yr}});
      bound(RowKind::yaw_rate_min, -lim.yaw_rate_max / yr, {{cw, -ws / yr}});
      bound(RowKind::climb_max, -lim.vz_max / sr, {{cz, cs / sr}});
      bound(RowKind::climb_min, -lim.vz_max / sr, {{cz, -cs / sr}});
      if (t == 0) {
        bound(RowKind::accel_max, (-x0[i].v - lim.dv_max) / sr,
              {{cv, vs / sr}});
        bound(RowKind::decel_max, (x0[i].v - lim.dv_max) / sr,
              {{cv, -vs / sr}});
      } else {
        const int prev_speed = col(i, t - 1, kSpeed);
        bound(RowKind::accel_max, -lim.dv_max / sr,
              {{cv, vs / sr}, {prev_speed, -vs / sr}});
        bound(RowKind::decel_max, -lim.dv_max / sr,
              {{cv, -vs / sr}, {prev_speed, vs / sr}});
      }
    }

    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        Row r;
        r.info = {RowKind::collision, i, t, j, false};
        const double need = spec.d_min + options.collision_margin;
        r.nl = Nonlinear::distance;
        r.ia = pos(i, t);
        r.ib = pos(j, t);
        r.c0 = need / L;
        r.c1 = -1.0 / L;
        add(std::move(r));
      }
    }
    for (auto [i, j] : spec.topology) {
      Row r;
      r.info = {RowKind::connectivity, i, t, j, false};
      const double allow = spec.r_max - options.connectivity_margin;
      r.nl = Nonlinear::distance;
      r.ia = pos(i, t);
      r.ib = pos(j, t);
      r.c0 = -allow / L;
      r.c1 = 1.0 / L;
      add(std::move(r));
    }
  }

  HorizonProblem hp;
  hp.n_uavs = N;
  hp.K = K;
  hp.dt = dt;
  hp.x0 = x0;
  hp.var_scale = d.scale;

  // Threat and pair rows the warm start violates keep (1 − γ) of that
  // violation as an allowance, so the plan can only get better. Only rows
  // already violated one step ahead qualify: a violation the warm start
  // picks up later (e.g. from its repeated last control) is avoidable and
  // gets no allowance.
  if (options.recovery_funnel) {
    const Eigen::VectorXd y_ws =
        hp.rollout(warm_controls.empty() ? hold_controls(x0, scenario, K)
                                         : warm_controls);
    const std::size_t per_step = d.rows.size() / static_cast<std::size_t>(K);
    std::vector<char> inherited(per_step, 0);
    for (std::size_t idx = 0; idx < d.rows.size(); ++idx) {
      Row& r = d.rows[idx];
      const std::size_t k = idx % per_step;
      if (r.nl == Nonlinear::none && r.info.kind != RowKind::terrain) {
        continue;
      }
      const double g = row_value(d, r, y_ws);
      if (r.info.step == 0) {
        inherited[k] = g > 0.0;
      }
      // The terminal clearance is a lookahead safeguard, not a constraint
      // of the mission: it only has to be no worse than the warm start's.
      const bool terminal = options.terminal_turn_clearance &&
                            r.info.kind == RowKind::radar &&
                            r.info.step == K - 1;
      if ((inherited[k] || terminal || options.excuse_warm_violations) &&
          g > 0.0) {
        r.c0 -= (1.0 - options.recovery_rate) * g;
        r.info.relaxed = true;
      }
    }
  }

  hp.t0 = t0;
  for (const Row& r : d.rows) {
    hp.ineq_rows.push_back(r.info);
  }
  hp.data = data;

  NlpProblem& p = hp.nlp;
  p.n_vars = n;
  p.n_eq = N * K * HorizonProblem::kStateDim;
  p.n_ineq = static_cast<int>(d.rows.size());
  p.hessian_mode = options.hessian;
  std::shared_ptr<const HorizonData> cd = data;
  p.objective = [cd](const VectorXd& y) { return objective(*cd, y); };
  p.objective_grad = [cd](const VectorXd& y) -> VectorXd {
    return cd->obj_hess * y + cd->obj_lin;
  };
  p.eq_con = [cd](const VectorXd& y) { return eq_values(*cd, y); };
  p.eq_jac = [cd](const VectorXd& y) { return eq_jacobian(*cd, y); };
  p.ineq_con = [cd](const VectorXd& y) { return ineq_values(*cd, y); };
  p.ineq_jac = [cd](const VectorXd& y) { return ineq_jacobian(*cd, y); };
  p.lag_hessian = [cd](const VectorXd& y, const VectorXd& lambda,
                       const VectorXd& w, HessianMode mode) {
    return lagrangian_hessian(*cd, y, lambda, w, mode);
  };
  return hp;
}

HorizonProblem build_nlp(const Scenario& scenario,
                         const HorizonOptions& options) {
  std::vector<UavState> x0;
  for (const UavSpec& u : scenario.uavs) {
    x0.push_back(u.initial);
  }
  return build_nlp(scenario, x0, 0.0, options);
}

}  // namespace forma
