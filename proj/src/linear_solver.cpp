#include "forma/linear_solver.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>

namespace forma {

namespace {

// K += Aᵀ·diag(d)·A. Constraint Jacobians of trajectory problems are mostly
// zeros, so rows are visited by their nonzero pattern when that pays off.
void add_weighted_gram(Eigen::MatrixXd& K, const Eigen::MatrixXd& A,
                       const Eigen::VectorXd& d) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (m == 0 || n == 0) {
    return;
  }

  Eigen::Index total_nz = 0;
  std::vector<std::vector<Eigen::Index>> patterns(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (A(i, j) != 0.0) {
        patterns[i].push_back(j);
      }
    }
    total_nz += static_cast<Eigen::Index>(patterns[i].size());
  }

  if (4 * total_nz > m * n) {
    K.noalias() += A.transpose() * d.asDiagonal() * A;
    return;
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = patterns[i];
    for (const Eigen::Index a : p) {
      const double da = d(i) * A(i, a);
      for (const Eigen::Index b : p) {
        K(a, b) += da * A(i, b);
      }
    }
  }
}

SolveReport solve_full(const KktJacobian& J, const Eigen::VectorXd& rhs,
                       double delta) {
  Eigen::MatrixXd A = J.dense();
  const Eigen::Index n = J.n_vars();
  A.topLeftCorner(n, n).diagonal().array() += delta;
  return factor_solve(A, rhs);
}

SolveReport solve_condensed(const KktJacobian& J, const Eigen::VectorXd& rhs,
                            double delta) {
  const Eigen::Index n = J.n_vars();
  const Eigen::Index m = J.n_ineq();
  const Eigen::Index p = J.n_eq();

  const Eigen::VectorXd r1 = rhs.segment(0, n);
  const Eigen::VectorXd r2 = rhs.segment(n, m);
  const Eigen::VectorXd r3 = rhs.segment(n + m, p);
  const Eigen::VectorXd r4 = rhs.segment(n + m + p, m);

  // Σ = Λ S⁻¹
  const Eigen::VectorXd sigma = J.lambda.cwiseQuotient(J.s);
  const Eigen::VectorXd r4_over_s = r4.cwiseQuotient(J.s);

  Eigen::MatrixXd W = J.hessian;
  W.diagonal().array() += delta;
  add_weighted_gram(W, J.ineq_jac, sigma);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + p, n + p);
  K.topLeftCorner(n, n) = W;
  K.topRightCorner(n, p) = J.eq_jac.transpose();
  K.bottomLeftCorner(p, n) = J.eq_jac;

  Eigen::VectorXd b(n + p);
  b.head(n) = r1 - J.ineq_jac.transpose() *
                       (r4_over_s - sigma.cwiseProduct(r2));
  b.tail(p) = r3;

  SolveReport reduced = factor_solve(K, b);

  const Eigen::VectorXd du = reduced.solution.head(n);
  const Eigen::VectorXd dw = reduced.solution.tail(p);
  const Eigen::VectorXd dl =
      sigma.cwiseProduct(J.ineq_jac * du - r2) + r4_over_s;
  const Eigen::VectorXd ds =
      (r4 - J.s.cwiseProduct(dl)).cwiseQuotient(J.lambda);

  SolveReport out;
  out.solution.resize(J.order());
  out.solution << du, dl, dw, ds;
  out.rcond = reduced.rcond;
  return out;
}

}  // namespace

const char* to_string(ConditionFlag flag) {
  switch (flag) {
    case ConditionFlag::ok:
      return "ok";
    case ConditionFlag::ill_conditioned:
      return "ill_conditioned";
    case ConditionFlag::singular_regularized:
      return "singular_regularized";
  }
  return "unknown";
}

SolveReport factor_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols()) {
    throw StructuralError("factor_solve needs a square matrix");
  }
  if (b.size() != A.rows()) {
    throw StructuralError("factor_solve right-hand side has wrong length");
  }

  SolveReport report;
  if (A.rows() == 0) {
    report.solution.resize(0);
    return report;
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const auto pivots = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < pivots.size(); ++i) {
    if (pivots(i) == 0.0 || !std::isfinite(pivots(i))) {
      throw SingularMatrixError("zero pivot in column " + std::to_string(i));
    }
  }

  report.solution = lu.solve(b);
  if (!report.solution.allFinite()) {
    throw SingularMatrixError("LU solve produced non-finite values");
  }
  report.rcond = lu.rcond();
  report.condition_flag = report.rcond < kIllConditionedRcond
                              ? ConditionFlag::ill_conditioned
                              : ConditionFlag::ok;
  return report;
}

SolveReport solve_kkt(const KktJacobian& J, const Eigen::VectorXd& rhs,
                      std::span<const double> delta_schedule,
                      KktSolveMethod method) {
  if (rhs.size() != J.order()) {
    throw StructuralError("KKT right-hand side has length " +
                          std::to_string(rhs.size()) + ", expected " +
                          std::to_string(J.order()));
  }

  if (rhs.isZero(0.0)) {
    return SolveReport{.solution = Eigen::VectorXd::Zero(J.order())};
  }

  const bool full =
      method == KktSolveMethod::full_lu ||
      (method == KktSolveMethod::automatic && J.order() <= kFullLuMaxOrder);
  const double tolerance = 1e-8 * (1.0 + rhs.norm());

  double last_delta = 0.0;
  for (const double delta : delta_schedule) {
    last_delta = delta;

    SolveReport report;
    try {
      report = full ? solve_full(J, rhs, delta) : solve_condensed(J, rhs, delta);
    } catch (const SingularMatrixError&) {
      continue;
    }
    if (!report.solution.allFinite()) {
      continue;
    }

    const Eigen::VectorXd backward =
        J.apply_regularized(report.solution, delta) - rhs;
    if (!(backward.norm() <= tolerance)) {
      continue;
    }

    // ∇φᵀΔv = 2FᵀJΔv with F = −rhs.
    const double slope = -2.0 * rhs.dot(J.apply(report.solution));
    if (!(slope < 0.0)) {
      continue;
    }

    report.regularization_delta = delta;
    if (delta > 0.0) {
      report.condition_flag = ConditionFlag::singular_regularized;
    } else {
      report.condition_flag = report.rcond < kIllConditionedRcond
                                  ? ConditionFlag::ill_conditioned
                                  : ConditionFlag::ok;
    }
    return report;
  }

  throw RegularizationFailure("no regularization in the schedule produced a "
                              "usable Newton step",
                              last_delta);
}

}  // namespace forma
