#pragma once

#include <stdexcept>

#include <Eigen/Core>

#include "forma/nlp.hpp"

namespace forma {

/// Raised when the log barrier is evaluated at a non-positive slack.
class BarrierDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/**
 * Residual of the perturbed KKT conditions
 *
 *   ∇F + ∇Gᵀλ + ∇Hᵀw = 0
 *   G + s            = 0
 *   H                = 0
 *   λ∘s − μe         = 0
 */
struct KktResidual {
  Eigen::VectorXd stationarity;
  Eigen::VectorXd primal_ineq;
  Eigen::VectorXd primal_eq;
  Eigen::VectorXd complementarity;

  /// Blocks concatenated in row order of the KKT Jacobian.
  Eigen::VectorXd stacked() const;

  double inf_norm() const;
};

/**
 * Jacobian of the KKT residual with respect to (u, λ, w, s).
 *
 * Stored by block; dense() assembles
 *
 *   [ ∇²L  ∇Gᵀ  ∇Hᵀ  0 ]
 *   [ ∇G   0    0    I ]
 *   [ ∇H   0    0    0 ]
 *   [ 0    S    0    Λ ]
 *
 * with S = diag(s) and Λ = diag(λ).
 */
struct KktJacobian {
  Eigen::MatrixXd hessian;
  Eigen::MatrixXd ineq_jac;
  Eigen::MatrixXd eq_jac;
  Eigen::VectorXd lambda;
  Eigen::VectorXd s;

  Eigen::Index n_vars() const { return hessian.rows(); }
  Eigen::Index n_ineq() const { return ineq_jac.rows(); }
  Eigen::Index n_eq() const { return eq_jac.rows(); }
  Eigen::Index order() const { return n_vars() + 2 * n_ineq() + n_eq(); }

  Eigen::MatrixXd dense() const;

  /// J·d without assembling the dense matrix.
  Eigen::VectorXd apply(const Eigen::VectorXd& d) const;

  /// (J + δE)·d where E is the identity on the ∇²L block only.
  Eigen::VectorXd apply_regularized(const Eigen::VectorXd& d,
                                    double delta) const;
};

/// L = F + λᵀ(G + s) + wᵀH − μ Σ log sⱼ. Throws BarrierDomainError if s ≤ 0.
double barrier_lagrangian(const NlpProblem& problem, const Iterate& v,
                          double mu);

KktResidual kkt_residual(const NlpProblem& problem, const Iterate& v,
                         double mu);

/// Same as above, reusing callback outputs already evaluated at v.u.
KktResidual kkt_residual(const NlpEvaluation& eval, const Iterate& v,
                         double mu);

KktJacobian kkt_jacobian(const NlpProblem& problem, const Iterate& v);

KktJacobian kkt_jacobian(const NlpProblem& problem, const NlpEvaluation& eval,
                         const Iterate& v);

/// Squared l₂ norm of every residual entry.
double merit(const KktResidual& residual);

}  // namespace forma
