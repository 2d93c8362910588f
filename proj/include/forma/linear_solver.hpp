#pragma once

#include <array>
#include <span>
#include <stdexcept>

#include <Eigen/Core>

#include "forma/kkt.hpp"

namespace forma {

enum class ConditionFlag { ok, ill_conditioned, singular_regularized };

const char* to_string(ConditionFlag flag);

struct SolveReport {
  Eigen::VectorXd solution;
  /// δ added to the ∇²L block; always 0 for factor_solve.
  double regularization_delta = 0.0;
  ConditionFlag condition_flag = ConditionFlag::ok;
  /// Reciprocal condition estimate of the factored matrix.
  double rcond = 1.0;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every δ of the schedule was tried and none produced an acceptable step.
class RegularizationFailure : public std::runtime_error {
 public:
  RegularizationFailure(const std::string& what, double last_delta)
      : std::runtime_error(what), last_delta_(last_delta) {}

  double last_delta() const { return last_delta_; }

 private:
  double last_delta_;
};

inline constexpr std::array<double, 6> kDefaultDeltaSchedule{
    0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0};

/// Below this reciprocal condition estimate a solve is flagged ill-conditioned.
inline constexpr double kIllConditionedRcond = 1e-12;

/**
 * Solves A·x = b by LU factorization with partial pivoting.
 *
 * Throws SingularMatrixError when a pivot is exactly zero or the solution is
 * not finite.
 */
SolveReport factor_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

enum class KktSolveMethod {
  /// full_lu up to kFullLuMaxOrder, condensed above.
  automatic,
  /// LU of the assembled 4×4-block matrix.
  full_lu,
  /// Eliminate Δs and Δλ, then LU of the (u, w) system.
  condensed,
};

inline constexpr Eigen::Index kFullLuMaxOrder = 300;

/**
 * Computes the Newton step (J + δE)Δv = rhs, where E is the identity on the
 * ∇²L block, walking `delta_schedule` until a step is found that
 *
 *   - comes from a nonsingular factorization,
 *   - passes the backward check ‖(J + δE)Δv − rhs‖ ≤ 1e-8·(1 + ‖rhs‖), and
 *   - is a descent direction for φ = ‖F‖², i.e. 2Fᵀ(J·Δv) < 0 with F = −rhs.
 *
 * A zero right-hand side returns a zero step immediately. Throws
 * RegularizationFailure when the schedule is exhausted.
 */
SolveReport solve_kkt(const KktJacobian& J, const Eigen::VectorXd& rhs,
                      std::span<const double> delta_schedule =
                          kDefaultDeltaSchedule,
                      KktSolveMethod method = KktSolveMethod::automatic);

}  // namespace forma
