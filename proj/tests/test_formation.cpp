#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "forma/constraints.hpp"
#include "forma/fd_check.hpp"
#include "forma/formation.hpp"
#include "forma/horizon.hpp"
#include "forma/scenario.hpp"
#include "forma/uav.hpp"

#ifndef FORMA_SCENARIO_DIR
#error "FORMA_SCENARIO_DIR must point at the bundled scenarios"
#endif

using namespace forma;
using Eigen::Matrix3d;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

const std::string kBundledScenario =
    std::string(FORMA_SCENARIO_DIR) + "/paper_table1.json";

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::Vector4d q = random_vec(rng, 1.0).homogeneous();
  q.w() = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  return Eigen::Quaterniond(q.w(), q.x(), q.y(), q.z())
      .normalized()
      .toRotationMatrix();
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central differences of a scalar function of one position.
template <class F>
Vec3 fd_grad(F f, const Vec3& p) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-6 * (1.0 + std::abs(p[k]));
    Vec3 a = p, b = p;
    a[k] += h;
    b[k] -= h;
    g[k] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

template <class G>
Matrix3d fd_hess(G grad, const Vec3& p) {
  Matrix3d H;
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-5 * (1.0 + std::abs(p[k]));
    Vec3 a = p, b = p;
    a[k] += h;
    b[k] -= h;
    H.col(k) = (grad(a) - grad(b)) / (2.0 * h);
  }
  return H;
}

double max_rel(const Vec3& a, const Vec3& b) {
  double m = 0.0;
  for (int k = 0; k < 3; ++k) m = std::max(m, rel_err(a[k], b[k]));
  return m;
}

double max_rel(const Matrix3d& a, const Matrix3d& b) {
  double m = 0.0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m = std::max(m, rel_err(a(r, c), b(r, c)));
  return m;
}

// One vehicle, no threats, straight leader path along x.
const char* kLoneUav = R"({
  "uavs": [{"id": "A", "role": "reconnaissance", "position_m": [0, 0, 100],
            "v_min": 10, "v_max": 50, "dv_max": 5,
            "yaw_rate_max_deg": 5, "vz_max": 5}],
  "radars": [], "missiles": [], "mountains": [],
  "formation": {
    "leader_path": {"origin_m": [0, 0, 100], "velocity_mps": 20,
                    "direction": [1, 0, 0]},
    "offsets_m": {"A": [0, 0, 0]},
    "weights": {"reconnaissance": {"A": 1.0}},
    "d_min_m": 40, "r_max_m": 10000,
    "control_weight_diag": [0.01, 1, 0.01]
  },
  "assignments": {}
})";

}  // namespace

TEST_CASE("step_dynamics: axis-aligned, zero-speed and quarter-turn moves") {
  UavState s;
  s.p = Vec3(1.0, 2.0, 3.0);
  s.v = 10.0;
  UavState n = step_dynamics(s, ControlInput{10.0, 0.0, 0.0}, 1.0);
  CHECK(n.p.x() == doctest::Approx(11.0).epsilon(1e-15));
  CHECK(n.p.y() == 2.0);
  CHECK(n.p.z() == 3.0);
  CHECK(n.psi == 0.0);
  CHECK(n.v == 10.0);

  n = step_dynamics(s, ControlInput{0.0, 0.3, 0.0}, 1.0);
  CHECK((n.p - s.p).norm() == 0.0);
  CHECK(n.psi == doctest::Approx(0.3));

  s.psi = kPi / 2;
  n = step_dynamics(s, ControlInput{10.0, 0.0, 0.0}, 1.0);
  CHECK(std::abs(n.p.x() - 1.0) <= 1e-12);
  CHECK(n.p.y() == doctest::Approx(12.0));
}

TEST_CASE("step_dynamics keeps the heading in (-pi, pi]") {
  UavState s;
  s.psi = kPi - 0.01;
  const UavState n = step_dynamics(s, ControlInput{20.0, 0.05, 0.0}, 1.0);
  CHECK(n.psi > -kPi);
  CHECK(n.psi <= kPi);
  CHECK(n.psi == doctest::Approx(-kPi + 0.04));
  CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
}

TEST_CASE("clamp_control respects every bound") {
  const UavLimits lim{15.0, 80.0, 5.0, 2.0 * kPi / 180.0, 10.0};
  const ControlInput c = clamp_control({100.0, 1.0, -50.0}, lim, 40.0);
  CHECK(c.v == 45.0);
  CHECK(c.omega == doctest::Approx(lim.yaw_rate_max));
  CHECK(c.vz == -10.0);
  CHECK(clamp_control({0.0, 0.0, 0.0}, lim, 16.0).v == 15.0);
}

TEST_CASE("g_terrain examples") {
  Mountain m;
  m.footprint = {{-100, -100}, {100, -100}, {100, 100}, {-100, 100}};
  m.height = 1000.0;
  UavState s;
  s.p = Vec3(0, 0, 500);
  CHECK(g_terrain(s, m) == 500.0);
  s.p.z() = 1000.0;
  CHECK(g_terrain(s, m) == 0.0);
  s.p.z() = 1500.0;
  CHECK(g_terrain(s, m) == -500.0);
  // Off the footprint the row can never bind.
  s.p = Vec3(500, 0, 0);
  CHECK(g_terrain(s, m) == 1000.0 - kTerrainOffFootprint);
}

TEST_CASE("g_radar examples") {
  const Radar r{Vec3(500, 3000, 0), 5000.0};
  UavState s;
  s.p = r.position + Vec3(6000, 0, 0);
  CHECK(g_radar(s, r) == doctest::Approx(-11e6));
  s.p = r.position + Vec3(0, 3000, 4000);
  CHECK(std::abs(g_radar(s, r)) <= 1e-6);
  s.p = r.position;
  CHECK(g_radar(s, r) == 25e6);
}

TEST_CASE("g_missile examples") {
  const Missile m{Vec3(4000, 0, 0), 30.0 * kPi / 180.0, "J"};
  // Collinear, vehicle behind the jammer.
  MissileValues v = g_missile(Vec3(1000, 0, 0), m, Vec3(2000, 0, 0));
  CHECK(v.cosine == doctest::Approx(1.0));
  CHECK(v.cone == doctest::Approx(1.0 - std::cos(15.0 * kPi / 180.0)));
  CHECK(v.cone == doctest::Approx(0.0341).epsilon(1e-3));
  CHECK(v.standoff == doctest::Approx(-1000.0));

  v = g_missile(Vec3(4000, 3000, 0), m, Vec3(2000, 0, 0));
  CHECK(std::abs(v.cosine) <= 1e-15);
  CHECK(v.cone == doctest::Approx(-std::cos(15.0 * kPi / 180.0)));

  v = g_missile(Vec3(4000, 0, 2000), m, Vec3(2000, 0, 0));
  CHECK(std::abs(v.standoff) <= 1e-12);

  const MissileValues in =
      g_missile(Vec3(1000, 0, 0), m, Vec3(2000, 0, 0), ConeSense::inside);
  CHECK(in.cone == doctest::Approx(-(1.0 - std::cos(15.0 * kPi / 180.0))));

  CHECK_THROWS_AS(g_missile(m.position, m, Vec3(1, 0, 0)),
                  DegenerateGeometryError);
}

TEST_CASE("g_collision and g_connectivity examples") {
  CHECK(g_collision(Vec3(0, 0, 0), Vec3(100, 0, 0), 40.0) == -60.0);
  CHECK(g_collision(Vec3(0, 0, 0), Vec3(0, 40, 0), 40.0) == 0.0);
  CHECK(g_collision(Vec3(5, 5, 5), Vec3(5, 5, 5), 40.0) == 40.0);
  CHECK(g_connectivity(Vec3(0, 0, 0), Vec3(1000, 0, 0), 10000.0) == -9000.0);
  CHECK(g_connectivity(Vec3(0, 0, 0), Vec3(0, 0, 10000), 10000.0) == 0.0);
  CHECK(g_connectivity(Vec3(0, 0, 0), Vec3(12000, 0, 0), 10000.0) == 2000.0);
}

TEST_CASE("sign convention: satisfied geometry <= 0, violated > 0") {
  const Radar r{Vec3::Zero(), 100.0};
  UavState in, out;
  in.p = Vec3(50, 0, 0);
  out.p = Vec3(150, 0, 0);
  CHECK(g_radar(out, r) <= 0.0);
  CHECK(g_radar(in, r) > 0.0);

  Mountain m;
  m.footprint = {{-10, -10}, {10, -10}, {10, 10}, {-10, 10}};
  m.height = 50.0;
  UavState hi, lo;
  hi.p = Vec3(0, 0, 60);
  lo.p = Vec3(0, 0, 40);
  CHECK(g_terrain(hi, m) <= 0.0);
  CHECK(g_terrain(lo, m) > 0.0);

  CHECK(g_collision(Vec3::Zero(), Vec3(50, 0, 0), 40.0) <= 0.0);
  CHECK(g_collision(Vec3::Zero(), Vec3(30, 0, 0), 40.0) > 0.0);
  CHECK(g_connectivity(Vec3::Zero(), Vec3(50, 0, 0), 100.0) <= 0.0);
  CHECK(g_connectivity(Vec3::Zero(), Vec3(150, 0, 0), 100.0) > 0.0);

  const Missile ms{Vec3::Zero(), kPi / 6, "J"};
  // Farther than the jammer and well off its bearing: both parts hold.
  const MissileValues ok = g_missile(Vec3(0, 200, 0), ms, Vec3(100, 0, 0));
  CHECK(ok.cone <= 0.0);
  CHECK(ok.standoff <= 0.0);
  // Closer than the jammer on the same bearing: both fail.
  const MissileValues bad = g_missile(Vec3(50, 0, 0), ms, Vec3(100, 0, 0));
  CHECK(bad.cone > 0.0);
  CHECK(bad.standoff > 0.0);
}

TEST_CASE("pair and radar values are invariant under rigid motions") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix3d Q = random_rotation(rng);
    const Vec3 shift = random_vec(rng, 5000.0);
    const Vec3 a = random_vec(rng, 3000.0);
    const Vec3 b = random_vec(rng, 3000.0);
    const Radar r{random_vec(rng, 3000.0), 2500.0};
    UavState s, s2;
    s.p = a;
    s2.p = Q * a + shift;
    const Radar r2{Q * r.position + shift, r.detection_radius};

    CHECK(std::abs(g_collision(a, b, 40.0) -
                   g_collision(Q * a + shift, Q * b + shift, 40.0)) <= 1e-9);
    CHECK(std::abs(g_connectivity(a, b, 1e4) -
                   g_connectivity(Q * a + shift, Q * b + shift, 1e4)) <=
          1e-9);
    CHECK(rel_err(g_radar(s, r), g_radar(s2, r2)) <= 1e-12);

    // Rotation about an axis through the missile.
    const Missile m{random_vec(rng, 2000.0), kPi / 6, "J"};
    const auto about = [&](const Vec3& p) {
      return Vec3(Q * (p - m.position) + m.position);
    };
    const double cone = g_missile(a, m, b).cone;
    CHECK(std::abs(cone - g_missile(about(a), m, about(b)).cone) <= 1e-9);
  }
}

TEST_CASE("comm_weight examples and pole") {
  CHECK(comm_weight(Vec3::Zero(), {Vec3(80, 0, 0)}, 40.0) ==
        doctest::Approx(1.0 / (40.0 * 80.0)));
  CHECK(comm_weight(Vec3::Zero(), {}, 40.0) == 0.0);
  double prev = 0.0;
  for (double gap : {10.0, 1.0, 1e-2, 1e-4, 1e-6}) {
    const double w = comm_weight(Vec3::Zero(), {Vec3(40.0 + gap, 0, 0)}, 40.0);
    CHECK(w > prev);
    prev = w;
  }
  CHECK(std::isinf(comm_weight(Vec3::Zero(), {Vec3(40, 0, 0)}, 40.0)));
}

TEST_CASE("analytic derivatives of every geometric term match differences") {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vec3 a = random_vec(rng, 2000.0);
    const Vec3 b = random_vec(rng, 2000.0);
    const Vec3 c = random_vec(rng, 2000.0);

    const PointTerm sq = squared_distance_term(a, c);
    const auto sq_v = [&](const Vec3& p) {
      return squared_distance_term(p, c).value;
    };
    const auto sq_g = [&](const Vec3& p) {
      return squared_distance_term(p, c).grad;
    };
    worst = std::max(worst, max_rel(sq.grad, fd_grad(sq_v, a)));
    worst = std::max(worst, max_rel(sq.hess, fd_hess(sq_g, a)));

    // Pair terms: check both arguments.
    const auto check_pair = [&](auto term) {
      const PairTerm t = term(a, b);
      const auto va = [&](const Vec3& p) { return term(p, b).value; };
      const auto vb = [&](const Vec3& p) { return term(a, p).value; };
      const auto ga = [&](const Vec3& p) { return term(p, b).grad_a; };
      const auto gb = [&](const Vec3& p) { return term(a, p).grad_b; };
      const auto gab = [&](const Vec3& p) { return term(a, p).grad_a; };
      worst = std::max(worst, max_rel(t.grad_a, fd_grad(va, a)));
      worst = std::max(worst, max_rel(t.grad_b, fd_grad(vb, b)));
      worst = std::max(worst, max_rel(t.hess_aa, fd_hess(ga, a)));
      worst = std::max(worst, max_rel(t.hess_bb, fd_hess(gb, b)));
      worst = std::max(worst, max_rel(t.hess_ab, fd_hess(gab, b)));
    };
    check_pair([](const Vec3& x, const Vec3& y) { return distance_term(x, y); });
    check_pair([&](const Vec3& x, const Vec3& y) {
      return cosine_term(x, y, c);
    });
    check_pair([&](const Vec3& x, const Vec3& y) {
      return distance_difference_term(x, y, c);
    });
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("double tetrahedron edges are exactly the requested length") {
  for (double yaw : {0.0, 0.7, -2.1}) {
    const auto v = double_tetrahedron_offsets(1000.0, yaw);
    CHECK(v[0].norm() == 0.0);
    // Tetrahedron ABCD and its mirror ABC'D'.
    for (const std::array<int, 4>& tet :
         {std::array<int, 4>{0, 1, 2, 3}, std::array<int, 4>{0, 1, 4, 5}}) {
      for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
          CHECK(std::abs((v[tet[i]] - v[tet[j]]).norm() - 1000.0) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("reference_positions: leader origin, exact velocity, jammer clamp") {
  const Scenario sc = load_scenario(kBundledScenario);
  const FormationSpec& spec = sc.formation;
  const auto r0 = reference_positions(0.0, spec);
  REQUIRE(r0.size() == 6);
  // V1 has zero offset and flies the reference path itself.
  CHECK((r0[0] - spec.leader.origin).norm() == 0.0);
  CHECK((r0[0] - Vec3(0, 0, 500)).norm() == 0.0);

  const double t = 37.0, dt = 2.5;
  const auto a = reference_positions(t, spec);
  const auto b = reference_positions(t + dt, spec);
  CHECK(((b[0] - a[0]) - spec.leader.velocity() * dt).norm() <= 1e-9);
  CHECK(((b[1] - a[1]) - spec.leader.velocity() * dt).norm() <= 1e-9);

  // Radar jammers never get a target inside their keep-out distance.
  for (double tt : {0.0, 50.0, 100.0, 200.0}) {
    const auto r = reference_positions(tt, spec);
    for (std::size_t i = 0; i < spec.members.size(); ++i) {
      const auto& jam = spec.members[i].jam;
      if (jam && jam->keep_out > 0.0) {
        CHECK((r[i] - jam->threat).norm() >= jam->keep_out - 1e-9);
      }
    }
  }
}

TEST_CASE("cost_role examples") {
  const Matrix3d I = Matrix3d::Identity();
  const std::vector<Vec3> path{Vec3(1, 2, 3), Vec3(4, 5, 6)};
  const std::vector<ControlInput> zero(2);
  CHECK(cost_role(path, zero, path, I) == 0.0);
  CHECK(cost_role({Vec3(3, 4, 0)}, {ControlInput{}}, {Vec3::Zero()}, I) ==
        25.0);
  CHECK(cost_role({Vec3::Zero()}, {ControlInput{1, 0, 0}}, {Vec3::Zero()},
                  I) == 1.0);
  CHECK_THROWS(cost_role(path, {ControlInput{}}, path, I));
}

TEST_CASE("scalarize: convex combination, unit weight, linearity, oracle") {
  const RoleGroups w{{{0.25, 0.25}, {0.125, 0.125}, {0.125, 0.125}}};
  const RoleGroups c{{{3.0, 3.0}, {3.0, 3.0}, {3.0, 3.0}}};
  CHECK(scalarize(c, w) == doctest::Approx(3.0));
  CHECK(scalarize({{{7.0}, {}, {}}}, {{{1.0}, {}, {}}}) == 7.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    RoleGroups cost, weight, cost2;
    std::vector<double> flat_c, flat_w;
    double sum = 0.0;
    for (int g = 0; g < 3; ++g) {
      const int m = 1 + trial % 3;
      for (int k = 0; k < m; ++k) {
        cost[g].push_back(u(rng));
        cost2[g].push_back(u(rng));
        weight[g].push_back(u(rng));
        sum += weight[g].back();
      }
    }
    for (int g = 0; g < 3; ++g) {
      for (std::size_t k = 0; k < weight[g].size(); ++k) {
        weight[g][k] /= sum;
        flat_c.push_back(cost[g][k]);
        flat_w.push_back(weight[g][k]);
      }
    }
    const double dot =
        Eigen::Map<VectorXd>(flat_c.data(), flat_c.size())
            .dot(Eigen::Map<VectorXd>(flat_w.data(), flat_w.size()));
    CHECK(std::abs(scalarize(cost, weight) - dot) <= 1e-12 * (1.0 + dot));

    // Superposition in the costs.
    RoleGroups mix;
    for (int g = 0; g < 3; ++g)
      for (std::size_t k = 0; k < cost[g].size(); ++k)
        mix[g].push_back(2.0 * cost[g][k] - 0.5 * cost2[g][k]);
    CHECK(scalarize(mix, weight) ==
          doctest::Approx(2.0 * scalarize(cost, weight) -
                          0.5 * scalarize(cost2, weight)));
  }

  CHECK_THROWS_AS(scalarize(c, {{{0.5, 0.5}, {0.1, 0.1}, {0.1, 0.1}}}),
                  ConfigurationError);
  CHECK_THROWS_AS(scalarize(c, {{{1.25, -0.25}, {}, {}}}), ConfigurationError);
  CHECK_THROWS(scalarize(c, {{{1.0}, {}, {}}}));
}

TEST_CASE("build_nlp: lone vehicle, one step, bound rows only") {
  const Scenario sc = parse_scenario(kLoneUav);
  HorizonOptions o;
  o.K = 1;
  const HorizonProblem hp = build_nlp(sc, o);
  CHECK(hp.nlp.n_vars == HorizonProblem::kBlock);
  CHECK(hp.nlp.n_eq == HorizonProblem::kStateDim);
  CHECK(hp.nlp.n_ineq == 8);
  for (const RowInfo& r : hp.ineq_rows) {
    CHECK(r.kind != RowKind::radar);
    CHECK(r.kind != RowKind::collision);
  }
}

TEST_CASE("build_nlp: bundled scenario row count by independent enumeration") {
  const Scenario sc = load_scenario(kBundledScenario);
  HorizonOptions o;
  const HorizonProblem hp = build_nlp(sc, o);
  const int N = sc.size(), K = o.K;
  CHECK(hp.nlp.n_vars == N * K * 8);
  CHECK(hp.nlp.n_eq == N * K * 5);

  // Count each family from the scenario description alone.
  int per_step = 0;
  for (int i = 0; i < N; ++i) {
    int own_missiles = 0;
    for (const Missile& m : sc.threats.missiles) {
      own_missiles += m.jammer_id == sc.uavs[i].id;
    }
    per_step += static_cast<int>(sc.threats.mountains.size());
    per_step += static_cast<int>(sc.threats.radars.size());
    per_step +=
        2 * (static_cast<int>(sc.threats.missiles.size()) - own_missiles);
    per_step += 8;
  }
  per_step += N * (N - 1) / 2;
  per_step += static_cast<int>(sc.formation.topology.size());
  CHECK(hp.nlp.n_ineq == K * per_step);
  CHECK(hp.nlp.n_ineq == 1160);
  CHECK(hp.count(RowKind::collision) == K * 15);
  CHECK(hp.count(RowKind::missile_cone) == K * 10);
  CHECK(hp.count(RowKind::radar) == K * 12);

  HorizonOptions bare = o;
  bare.missile_rows = false;
  CHECK(build_nlp(sc, bare).count(RowKind::missile_cone) == 0);
}

TEST_CASE("build_nlp derivatives pass the finite-difference check") {
  const Scenario sc = load_scenario(kBundledScenario);
  for (HessianMode mode : {HessianMode::gauss_newton, HessianMode::exact}) {
    HorizonOptions o;
    o.hessian = mode;
    const HorizonProblem hp = build_nlp(sc, o);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    VectorXd y = hp.rollout(hold_controls(hp.x0, sc, o.K));
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      y[j] += u(rng) * (1.0 + std::abs(y[j]));
    }
    FdCheckOptions fo;
    if (mode == HessianMode::exact) {
      fo.lambda = VectorXd::LinSpaced(hp.nlp.n_ineq, 0.1, 2.0);
      fo.w = VectorXd::LinSpaced(hp.nlp.n_eq, -1.0, 1.0);
    }
    const FdCheckReport rep = fd_check(hp.nlp, y, 1e-5, fo);
    CHECK(rep.ok());
    CHECK(rep.worst() <= 1e-5);
  }
}

TEST_CASE("dynamics consistency: equality-feasible points replay exactly") {
  const Scenario sc = load_scenario(kBundledScenario);
  HorizonOptions o;
  const HorizonProblem hp = build_nlp(sc, o);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<ControlInput>> ctrl(sc.size());
    for (int i = 0; i < sc.size(); ++i) {
      for (int t = 0; t < o.K; ++t) {
        ctrl[i].push_back({40.0 + 20.0 * u(rng), 0.03 * u(rng),
                           5.0 * u(rng)});
      }
    }
    const VectorXd y = hp.rollout(ctrl);
    REQUIRE(evaluate(hp.nlp, y).eq.lpNorm<Eigen::Infinity>() <= 1e-8);
    const HorizonSolution sol = hp.decode(y);
    for (int i = 0; i < sc.size(); ++i) {
      UavState s = hp.x0[i];
      for (int t = 0; t < o.K; ++t) {
        s = step_dynamics(s, sol.controls[i][t], o.dt);
        CHECK((s.p - sol.states[i][t].p).norm() <= 1e-6);
      }
    }
  }
}
