#include "forma/kkt.hpp"

#include <cmath>

namespace forma {

Eigen::VectorXd KktResidual::stacked() const {
  Eigen::VectorXd out(stationarity.size() + primal_ineq.size() +
                      primal_eq.size() + complementarity.size());
  out << stationarity, primal_ineq, primal_eq, complementarity;
  return out;
}

double KktResidual::inf_norm() const {
  const Eigen::VectorXd r = stacked();
  return r.size() > 0 ? r.lpNorm<Eigen::Infinity>() : 0.0;
}

Eigen::MatrixXd KktJacobian::dense() const {
  const Eigen::Index n = n_vars();
  const Eigen::Index m = n_ineq();
  const Eigen::Index p = n_eq();

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order(), order());

  // Column offsets follow (u, λ, w, s); row offsets follow the residual.
  const Eigen::Index c_lambda = n;
  const Eigen::Index c_w = n + m;
  const Eigen::Index c_s = n + m + p;

  J.block(0, 0, n, n) = hessian;
  J.block(0, c_lambda, n, m) = ineq_jac.transpose();
  J.block(0, c_w, n, p) = eq_jac.transpose();

  J.block(n, 0, m, n) = ineq_jac;
  J.block(n, c_s, m, m).setIdentity();

  J.block(n + m, 0, p, n) = eq_jac;

  J.block(n + m + p, c_lambda, m, m) = s.asDiagonal();
  J.block(n + m + p, c_s, m, m) = lambda.asDiagonal();

  return J;
}

Eigen::VectorXd KktJacobian::apply(const Eigen::VectorXd& d) const {
  return apply_regularized(d, 0.0);
}

Eigen::VectorXd KktJacobian::apply_regularized(const Eigen::VectorXd& d,
                                               double delta) const {
  const Eigen::Index n = n_vars();
  const Eigen::Index m = n_ineq();
  const Eigen::Index p = n_eq();

  const auto du = d.segment(0, n);
  const auto dl = d.segment(n, m);
  const auto dw = d.segment(n + m, p);
  const auto ds = d.segment(n + m + p, m);

  Eigen::VectorXd out(order());
  out.segment(0, n) = hessian * du + ineq_jac.transpose() * dl +
                      eq_jac.transpose() * dw + delta * du;
  out.segment(n, m) = ineq_jac * du + ds;
  out.segment(n + m, p) = eq_jac * du;
  out.segment(n + m + p, m) =
      s.cwiseProduct(dl) + lambda.cwiseProduct(ds);
  return out;
}

double barrier_lagrangian(const NlpProblem& problem, const Iterate& v,
                          double mu) {
  v.check_shape(problem);
  if (v.s.size() > 0 && !(v.s.minCoeff() > 0.0)) {
    throw BarrierDomainError("barrier term needs strictly positive slacks");
  }
  const NlpEvaluation e = evaluate(problem, v.u);

  double value = e.objective;
  value += v.lambda.dot(e.ineq + v.s);
  value += v.w.dot(e.eq);
  value -= mu * v.s.array().log().sum();
  return value;
}

KktResidual kkt_residual(const NlpProblem& problem, const Iterate& v,
                         double mu) {
  v.check_shape(problem);
  return kkt_residual(evaluate(problem, v.u), v, mu);
}

KktResidual kkt_residual(const NlpEvaluation& eval, const Iterate& v,
                         double mu) {
  if (eval.ineq.size() != v.lambda.size() || eval.ineq.size() != v.s.size() ||
      eval.eq.size() != v.w.size() || eval.grad.size() != v.u.size()) {
    throw StructuralError("iterate block sizes do not match the evaluation");
  }

  KktResidual r;
  r.stationarity = eval.grad + eval.ineq_jac.transpose() * v.lambda +
                   eval.eq_jac.transpose() * v.w;
  r.primal_ineq = eval.ineq + v.s;
  r.primal_eq = eval.eq;
  r.complementarity =
      (v.lambda.cwiseProduct(v.s).array() - mu).matrix();
  return r;
}

KktJacobian kkt_jacobian(const NlpProblem& problem, const Iterate& v) {
  v.check_shape(problem);
  return kkt_jacobian(problem, evaluate(problem, v.u), v);
}

KktJacobian kkt_jacobian(const NlpProblem& problem, const NlpEvaluation& eval,
                         const Iterate& v) {
  KktJacobian J;
  J.hessian = evaluate_hessian(problem, v.u, v.lambda, v.w);
  J.ineq_jac = eval.ineq_jac;
  J.eq_jac = eval.eq_jac;
  J.lambda = v.lambda;
  J.s = v.s;
  return J;
}

double merit(const KktResidual& residual) {
  return residual.stationarity.squaredNorm() +
         residual.primal_ineq.squaredNorm() + residual.primal_eq.squaredNorm() +
         residual.complementarity.squaredNorm();
}

}  // namespace forma
