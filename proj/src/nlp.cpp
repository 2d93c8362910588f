#include "forma/nlp.hpp"

#include <cmath>
#include <string>

namespace forma {

namespace {

void expect_vector(const Eigen::VectorXd& v, Eigen::Index rows,
                   const char* name) {
  if (v.size() != rows) {
    throw StructuralError(std::string{name} + " returned " +
                          std::to_string(v.size()) + " entries, expected " +
                          std::to_string(rows));
  }
}

void expect_matrix(const Eigen::MatrixXd& m, Eigen::Index rows,
                   Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw StructuralError(std::string{name} + " returned " +
                          std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

NlpProblem::Matrix NlpProblem::hessian(const Vector& u, const Vector& lambda,
                                       const Vector& w) const {
  return lag_hessian(u, lambda, w, hessian_mode);
}

NlpEvaluation evaluate(const NlpProblem& problem, const Eigen::VectorXd& u) {
  if (u.size() != problem.n_vars) {
    throw StructuralError("primal point has " + std::to_string(u.size()) +
                          " entries, expected " +
                          std::to_string(problem.n_vars));
  }

  NlpEvaluation e;
  e.objective = problem.objective(u);
  e.grad = problem.objective_grad(u);
  expect_vector(e.grad, problem.n_vars, "objective_grad");

  if (problem.n_eq > 0) {
    e.eq = problem.eq_con(u);
    e.eq_jac = problem.eq_jac(u);
  } else {
    e.eq.resize(0);
    e.eq_jac.resize(0, problem.n_vars);
  }
  expect_vector(e.eq, problem.n_eq, "eq_con");
  expect_matrix(e.eq_jac, problem.n_eq, problem.n_vars, "eq_jac");

  if (problem.n_ineq > 0) {
    e.ineq = problem.ineq_con(u);
    e.ineq_jac = problem.ineq_jac(u);
  } else {
    e.ineq.resize(0);
    e.ineq_jac.resize(0, problem.n_vars);
  }
  expect_vector(e.ineq, problem.n_ineq, "ineq_con");
  expect_matrix(e.ineq_jac, problem.n_ineq, problem.n_vars, "ineq_jac");

  return e;
}

Eigen::MatrixXd evaluate_hessian(const NlpProblem& problem,
                                 const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& lambda,
                                 const Eigen::VectorXd& w) {
  Eigen::MatrixXd hess = problem.hessian(u, lambda, w);
  expect_matrix(hess, problem.n_vars, problem.n_vars, "lag_hessian");

  const double scale = 1.0 + (hess.size() > 0 ? hess.cwiseAbs().maxCoeff() : 0.0);
  const double asym =
      hess.size() > 0 ? (hess - hess.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (!(asym <= 1e-12 * scale)) {
    throw StructuralError("lag_hessian is not symmetric (max asymmetry " +
                          std::to_string(asym) + ")");
  }
  return hess;
}

Eigen::VectorXd Iterate::stacked() const {
  Eigen::VectorXd v(size());
  v << u, lambda, w, s;
  return v;
}

Iterate Iterate::unstack(const Eigen::VectorXd& v, const Iterate& shape) {
  if (v.size() != shape.size()) {
    throw StructuralError("stacked iterate has wrong length");
  }
  Iterate out;
  Eigen::Index at = 0;
  auto take = [&](Eigen::Index n) {
    Eigen::VectorXd block = v.segment(at, n);
    at += n;
    return block;
  };
  out.u = take(shape.u.size());
  out.lambda = take(shape.lambda.size());
  out.w = take(shape.w.size());
  out.s = take(shape.s.size());
  return out;
}

void Iterate::check_shape(const NlpProblem& problem) const {
  if (u.size() != problem.n_vars || lambda.size() != problem.n_ineq ||
      w.size() != problem.n_eq || s.size() != problem.n_ineq) {
    throw StructuralError("iterate block sizes do not match the problem");
  }
}

}  // namespace forma
