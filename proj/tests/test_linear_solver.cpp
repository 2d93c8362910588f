#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "forma/kkt.hpp"
#include "forma/linear_solver.hpp"
#include "forma/problems.hpp"

using namespace forma;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Textbook Gaussian elimination with row swaps on plain arrays, independent
// of Eigen's decompositions.
std::vector<double> eliminate(std::vector<std::vector<double>> a,
                              std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[p][k])) {
        p = i;
      }
    }
    std::swap(a[k], a[p]);
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) {
        a[i][j] -= f * a[k][j];
      }
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double sum = b[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      sum -= a[i][j] * x[j];
    }
    x[i] = sum / a[i][i];
  }
  return x;
}

Iterate random_positive_iterate(std::mt19937_64& rng, const NlpProblem& p) {
  std::uniform_real_distribution<double> pos(0.1, 2.0);
  std::uniform_real_distribution<double> any(-2.0, 2.0);
  Iterate v;
  v.u = VectorXd::NullaryExpr(p.n_vars, [&] { return any(rng); });
  v.lambda = VectorXd::NullaryExpr(p.n_ineq, [&] { return pos(rng); });
  v.w = VectorXd::NullaryExpr(p.n_eq, [&] { return any(rng); });
  v.s = VectorXd::NullaryExpr(p.n_ineq, [&] { return pos(rng); });
  return v;
}

}  // namespace

TEST_CASE("factor_solve on the identity") {
  const VectorXd b = (VectorXd(4) << 1, 2, 3, 4).finished();
  const SolveReport r = factor_solve(MatrixXd::Identity(4, 4), b);
  CHECK(r.solution == b);
  CHECK(r.condition_flag == ConditionFlag::ok);
  CHECK(r.regularization_delta == 0.0);
}

TEST_CASE("factor_solve on a diagonal system") {
  MatrixXd A(2, 2);
  A << 2, 0, 0, 4;
  const SolveReport r = factor_solve(A, (VectorXd(2) << 2, 8).finished());
  CHECK(r.solution(0) == 1.0);
  CHECK(r.solution(1) == 2.0);
}

TEST_CASE("factor_solve agrees with Gaussian elimination on random systems") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 20;
    MatrixXd A = MatrixXd::NullaryExpr(n, n, [&] { return normal(rng); });
    A.diagonal().array() += 8.0;  // keep it well conditioned
    const VectorXd b = VectorXd::NullaryExpr(n, [&] { return normal(rng); });

    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        rows[i][j] = A(i, j);
      }
      rhs[i] = b(i);
    }
    const std::vector<double> oracle = eliminate(rows, rhs);
    const SolveReport r = factor_solve(A, b);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(r.solution(i) - oracle[i]) <= 1e-9);
    }
    CHECK((A * r.solution - b).norm() <= 1e-10 * (1.0 + b.norm()));
  }
}

TEST_CASE("factor_solve needs pivoting") {
  // A zero in the leading position breaks elimination without row swaps.
  MatrixXd A(2, 2);
  A << 0, 1, 1, 0;
  const SolveReport r = factor_solve(A, (VectorXd(2) << 3, 5).finished());
  CHECK(r.solution(0) == 5.0);
  CHECK(r.solution(1) == 3.0);
}

TEST_CASE("factor_solve rejects exactly singular and malformed input") {
  MatrixXd A(2, 2);
  A << 1, 2, 2, 4;
  CHECK_THROWS_AS(factor_solve(A, VectorXd::Ones(2)), SingularMatrixError);
  CHECK_THROWS_AS(factor_solve(MatrixXd::Ones(2, 3), VectorXd::Ones(2)),
                  StructuralError);
  CHECK_THROWS_AS(factor_solve(MatrixXd::Identity(2, 2), VectorXd::Ones(3)),
                  StructuralError);
}

TEST_CASE("factor_solve flags ill conditioning") {
  MatrixXd A = MatrixXd::Identity(3, 3);
  A(2, 2) = 1e-14;
  const SolveReport r = factor_solve(A, VectorXd::Ones(3));
  CHECK(r.condition_flag == ConditionFlag::ill_conditioned);
}

TEST_CASE("strictly convex KKT system needs no regularization") {
  const auto ref = find_reference_problem("mixed");
  REQUIRE(ref);
  Iterate v{VectorXd::Zero(3), VectorXd::Ones(1), VectorXd::Zero(1),
            VectorXd::Ones(1)};
  const KktJacobian J = kkt_jacobian(ref->problem, v);
  const VectorXd rhs = -kkt_residual(ref->problem, v, 0.1).stacked();
  const SolveReport r = solve_kkt(J, rhs);
  CHECK(r.regularization_delta == 0.0);
  CHECK(r.condition_flag == ConditionFlag::ok);
  CHECK((J.dense() * r.solution - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
}

TEST_CASE("zero Hessian with an active constraint is regularized") {
  // Two variables, one constraint x + y ≤ 0: with ∇²L = 0 the first two rows
  // of the KKT matrix coincide.
  KktJacobian J;
  J.hessian = MatrixXd::Zero(2, 2);
  J.ineq_jac = MatrixXd::Ones(1, 2);
  J.eq_jac = MatrixXd(0, 2);
  J.lambda = VectorXd::Constant(1, 1.0);
  J.s = VectorXd::Constant(1, 1e-3);

  CHECK_THROWS_AS(factor_solve(J.dense(), VectorXd::Ones(4)),
                  SingularMatrixError);

  // Equal first two entries keep the regularized solution bounded as δ → 0.
  const VectorXd rhs = (VectorXd(4) << 0.7, 0.7, 0.2, 0.1).finished();
  const SolveReport r = solve_kkt(J, rhs);
  CHECK(r.regularization_delta > 0.0);
  CHECK(r.condition_flag == ConditionFlag::singular_regularized);

  MatrixXd regularized = J.dense();
  regularized.topLeftCorner(2, 2).diagonal().array() += r.regularization_delta;
  CHECK((regularized * r.solution - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));

  // A right-hand side outside the range gives a step of order 1/δ; the
  // solver's own backward tolerance still holds.
  const VectorXd wild = (VectorXd(4) << 1.0, -0.5, 0.2, 0.1).finished();
  const SolveReport w = solve_kkt(J, wild);
  CHECK(w.regularization_delta > 0.0);
  CHECK((J.apply_regularized(w.solution, w.regularization_delta) - wild)
            .norm() <= 1e-8 * (1.0 + wild.norm()));
}

TEST_CASE("zero right-hand side gives a zero step") {
  KktJacobian J;
  J.hessian = MatrixXd::Zero(2, 2);
  J.ineq_jac = MatrixXd::Ones(1, 2);
  J.eq_jac = MatrixXd(0, 2);
  J.lambda = VectorXd::Ones(1);
  J.s = VectorXd::Ones(1);
  const SolveReport r = solve_kkt(J, VectorXd::Zero(4));
  CHECK(r.solution.isZero(0.0));
  CHECK(r.solution.size() == 4);
}

TEST_CASE("exhausted schedule raises with the last delta") {
  KktJacobian J;
  J.hessian = MatrixXd::Zero(2, 2);
  J.ineq_jac = MatrixXd::Ones(1, 2);
  J.eq_jac = MatrixXd(0, 2);
  J.lambda = VectorXd::Ones(1);
  J.s = VectorXd::Ones(1);
  const std::vector<double> only_zero{0.0};
  try {
    solve_kkt(J, VectorXd::Ones(4), only_zero);
    FAIL("expected RegularizationFailure");
  } catch (const RegularizationFailure& e) {
    CHECK(e.last_delta() == 0.0);
  }
}

TEST_CASE("returned steps pass the backward check and are descent directions") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomProblem rp = random_problem(rng);
    const Iterate v = random_positive_iterate(rng, rp.problem);
    const KktJacobian J = kkt_jacobian(rp.problem, v);
    const VectorXd rhs = -kkt_residual(rp.problem, v, 0.1).stacked();
    for (const KktSolveMethod method :
         {KktSolveMethod::full_lu, KktSolveMethod::condensed}) {
      const SolveReport r =
          solve_kkt(J, rhs, kDefaultDeltaSchedule, method);
      const VectorXd backward =
          J.apply_regularized(r.solution, r.regularization_delta) - rhs;
      CHECK(backward.norm() <= 1e-8 * (1.0 + rhs.norm()));
      CHECK(-2.0 * rhs.dot(J.apply(r.solution)) < 0.0);
      if (r.condition_flag == ConditionFlag::ok) {
        CHECK(r.regularization_delta == 0.0);
      }
    }
  }
}

TEST_CASE("condensed and full factorizations agree") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const RandomProblem rp = random_problem(rng);
    const Iterate v = random_positive_iterate(rng, rp.problem);
    const KktJacobian J = kkt_jacobian(rp.problem, v);
    const VectorXd rhs = -kkt_residual(rp.problem, v, 0.1).stacked();
    const SolveReport full =
        solve_kkt(J, rhs, kDefaultDeltaSchedule, KktSolveMethod::full_lu);
    const SolveReport condensed =
        solve_kkt(J, rhs, kDefaultDeltaSchedule, KktSolveMethod::condensed);
    if (full.regularization_delta == condensed.regularization_delta) {
      CHECK((full.solution - condensed.solution).norm() <=
            1e-7 * (1.0 + full.solution.norm()));
    }
  }
}

TEST_CASE("solve_kkt is deterministic") {
  std::mt19937_64 rng(24);
  const RandomProblem rp = random_problem(rng);
  const Iterate v = random_positive_iterate(rng, rp.problem);
  const KktJacobian J = kkt_jacobian(rp.problem, v);
  const VectorXd rhs = -kkt_residual(rp.problem, v, 0.1).stacked();
  const SolveReport a = solve_kkt(J, rhs);
  const SolveReport b = solve_kkt(J, rhs);
  CHECK(a.solution == b.solution);
  CHECK(a.regularization_delta == b.regularization_delta);
}

TEST_CASE("solve_kkt rejects a right-hand side of the wrong length") {
  KktJacobian J;
  J.hessian = MatrixXd::Identity(2, 2);
  J.ineq_jac = MatrixXd(0, 2);
  J.eq_jac = MatrixXd(0, 2);
  J.lambda = VectorXd(0);
  J.s = VectorXd(0);
  CHECK_THROWS_AS(solve_kkt(J, VectorXd::Ones(3)), StructuralError);
}
