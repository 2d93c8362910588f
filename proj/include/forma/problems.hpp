#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forma/nlp.hpp"

namespace forma {

/**
 * Convex or nonconvex quadratic program
 *
 *   min ½uᵀQu + cᵀu  s.t.  A_eq·u = b_eq,  A_ineq·u ≤ b_ineq.
 */
struct QuadraticProgram {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd b_ineq;
};

/// Wraps a QP as an NlpProblem (exact and Gauss-Newton Hessians coincide).
NlpProblem make_problem(const QuadraticProgram& qp);

/// Small problem with a known KKT point, used as a solver oracle.
struct ReferenceProblem {
  std::string name;
  std::string description;
  NlpProblem problem;
  Eigen::VectorXd u0;
  Eigen::VectorXd u_star;
  std::optional<Eigen::VectorXd> lambda_star;
  std::optional<Eigen::VectorXd> w_star;
};

/**
 * Problems with closed-form solutions:
 *
 *   qp-ineq        min (x−2)²             s.t. x ≤ 1
 *   eq-only        min x² + y²            s.t. x + y = 2
 *   unconstrained  min (u−5)²
 *   box-2d         min (x+1)² + (y+1)²    s.t. x ≥ 0, y ≥ 0
 *   inactive       min (x−½)²             s.t. x ≤ 1
 *   mixed          min (x−3)² + (y−3)² + z²  s.t. x+y+z = 3, x ≤ 1
 *   disk           min x + y              s.t. x² + y² ≤ 2
 *   saddle         min −xy                s.t. x + y ≤ 2
 */
std::vector<ReferenceProblem> reference_problems();

/**
 * Problems the residual-merit Newton method handles poorly:
 *
 *   rosenbrock     100(y − x²)² + (1 − x)² from (−1.2, 1); the merit ‖∇f‖²
 *                  forces tiny steps along the curved valley.
 */
std::vector<ReferenceProblem> hard_problems();

/// Looks up a problem from either list by name.
std::optional<ReferenceProblem> find_reference_problem(const std::string& name);

/// A generated problem and a starting point for it.
struct RandomProblem {
  NlpProblem problem;
  Eigen::VectorXd u0;
};

/**
 * Small feasible problem with random dimensions (n ≤ 6): a strictly convex
 * quadratic objective, linear equalities and inequalities built around a
 * random feasible point, and sometimes a ball constraint. The start u0 is
 * drawn independently and is usually infeasible.
 */
RandomProblem random_problem(std::mt19937_64& rng);

/// Parses a QP document {"Q": [[..]], "c": [..], "A_eq", "b_eq", "A_ineq",
/// "b_ineq", "u0"}; missing constraint blocks mean none.
ReferenceProblem qp_from_json(const std::string& text);

}  // namespace forma
