#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace forma {

/// Raised when a callback returns data whose shape disagrees with the problem.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which terms the Lagrangian Hessian callback includes.
enum class HessianMode {
  /// ∇²F + Σλᵢ∇²gᵢ + Σwⱼ∇²hⱼ
  exact,
  /// ∇²F only; constraint curvature dropped.
  gauss_newton,
};

/**
 * Smooth constrained problem
 *
 *   min F(u)  s.t.  H(u) = 0,  G(u) ≤ 0.
 *
 * Simple bounds on u are expected to be folded into G as linear rows. All
 * callbacks must be pure functions of their arguments.
 */
struct NlpProblem {
  using Vector = Eigen::VectorXd;
  using Matrix = Eigen::MatrixXd;

  int n_vars = 0;
  int n_eq = 0;
  int n_ineq = 0;

  std::function<double(const Vector& u)> objective;
  std::function<Vector(const Vector& u)> objective_grad;
  std::function<Vector(const Vector& u)> eq_con;
  std::function<Matrix(const Vector& u)> eq_jac;
  std::function<Vector(const Vector& u)> ineq_con;
  std::function<Matrix(const Vector& u)> ineq_jac;
  std::function<Matrix(const Vector& u, const Vector& lambda, const Vector& w,
                       HessianMode mode)>
      lag_hessian;

  HessianMode hessian_mode = HessianMode::exact;

  /// Evaluates lag_hessian with the problem's selected mode.
  Matrix hessian(const Vector& u, const Vector& lambda, const Vector& w) const;
};

/// Callback outputs at one primal point, with dimensions verified.
struct NlpEvaluation {
  double objective = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd eq;
  Eigen::MatrixXd eq_jac;
  Eigen::VectorXd ineq;
  Eigen::MatrixXd ineq_jac;
};

/**
 * Evaluates every first-order callback at u.
 *
 * Throws StructuralError if any output has the wrong shape or if u itself
 * does not have n_vars entries.
 */
NlpEvaluation evaluate(const NlpProblem& problem, const Eigen::VectorXd& u);

/// Hessian evaluation with shape and symmetry checks.
Eigen::MatrixXd evaluate_hessian(const NlpProblem& problem,
                                 const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& lambda,
                                 const Eigen::VectorXd& w);

/**
 * Primal-dual iterate v = (u, λ, w, s).
 *
 * λ are the inequality multipliers, w the equality multipliers and s the
 * inequality slacks. The solver keeps λ and s strictly positive.
 */
struct Iterate {
  Eigen::VectorXd u;
  Eigen::VectorXd lambda;
  Eigen::VectorXd w;
  Eigen::VectorXd s;

  Eigen::Index size() const {
    return u.size() + lambda.size() + w.size() + s.size();
  }

  /// Concatenation in (u, λ, w, s) order.
  Eigen::VectorXd stacked() const;

  /// Inverse of stacked() using the block sizes of `shape`.
  static Iterate unstack(const Eigen::VectorXd& v, const Iterate& shape);

  /// Throws StructuralError if block sizes disagree with the problem.
  void check_shape(const NlpProblem& problem) const;
};

}  // namespace forma
