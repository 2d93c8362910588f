#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forma/nlp.hpp"

namespace forma {

struct FdCheckOptions {
  /// Central-difference step is step_scale·(1 + |uⱼ|).
  double step_scale = 1e-6;
  /// Multipliers used for the Hessian check; ones when not supplied.
  std::optional<Eigen::VectorXd> lambda;
  std::optional<Eigen::VectorXd> w;
};

/// Result for one callback. Relative error is |a − d| / max(1, |a|, |d|).
struct FdCheckEntry {
  std::string callback;
  double max_rel_error = 0.0;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  bool flagged = false;
  /// Non-empty if the callback (or a perturbed evaluation) threw.
  std::string failure;
};

struct FdCheckReport {
  std::vector<FdCheckEntry> entries;

  bool ok() const;
  double worst() const;
  const FdCheckEntry* find(const std::string& callback) const;
};

/**
 * Compares objective_grad, eq_jac, ineq_jac and lag_hessian against central
 * differences at `point`.
 *
 * In gauss_newton mode the Hessian is compared with differences of ∇F;
 * otherwise with differences of ∇ₓL(u, λ, w). An evaluation failure is
 * recorded on the affected entry and does not abort the others.
 */
FdCheckReport fd_check(const NlpProblem& problem, const Eigen::VectorXd& point,
                       double rel_tol, const FdCheckOptions& options = {});

}  // namespace forma
