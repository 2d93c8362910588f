#include "forma/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace forma {

namespace {

Iterate step(const Iterate& v, const Iterate& dv, const StepLengths& a) {
  Iterate out;
  out.u = v.u + a.u * dv.u;
  out.lambda = v.lambda + a.lambda * dv.lambda;
  out.w = v.w + a.w * dv.w;
  out.s = v.s + a.s * dv.s;
  return out;
}

bool strictly_positive(const Eigen::VectorXd& x) {
  return x.size() == 0 || x.minCoeff() > 0.0;
}

// φ at μ, or +∞ if the trial point cannot be evaluated.
double merit_or_inf(const NlpProblem& problem, const Iterate& v, double mu) {
  try {
    const double phi = merit(kkt_residual(problem, v, mu));
    return std::isfinite(phi) ? phi : std::numeric_limits<double>::infinity();
  } catch (const StructuralError&) {
    throw;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(what);
    }
  };
  require(sigma > 0.0 && sigma < 1.0, "sigma must lie in (0, 1)");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0, 1)");
  require(xi >= 0.0, "xi must be nonnegative");
  require(max_iters >= 0, "max_iters must be nonnegative");
  require(backtrack_factor > 0.0 && backtrack_factor < 1.0,
          "backtrack_factor must lie in (0, 1)");
  require(min_alpha > 0.0 && min_alpha <= 1.0,
          "min_alpha must lie in (0, 1]");
  require(!delta_schedule.empty(), "delta_schedule must not be empty");
  for (std::size_t i = 0; i < delta_schedule.size(); ++i) {
    require(delta_schedule[i] >= 0.0, "delta_schedule must be nonnegative");
    require(i == 0 || delta_schedule[i] > delta_schedule[i - 1],
            "delta_schedule must be increasing");
  }
}

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged:
      return "converged";
    case SolverStatus::max_iters:
      return "max_iters";
    case SolverStatus::regularization_failure:
      return "regularization_failure";
    case SolverStatus::line_search_failure:
      return "line_search_failure";
  }
  return "unknown";
}

Iterate initial_iterate(const NlpProblem& problem, const Eigen::VectorXd& u0,
                        double mu0) {
  const NlpEvaluation e = evaluate(problem, u0);
  Iterate v;
  v.u = u0;
  v.s = ((-e.ineq).cwiseMax(0.0).array() + 0.1).matrix();
  v.lambda = (mu0 / v.s.array()).matrix();
  v.w = Eigen::VectorXd::Zero(problem.n_eq);
  return v;
}

double update_mu(const Eigen::VectorXd& lambda, const Eigen::VectorXd& s,
                 double sigma) {
  if (lambda.size() == 0) {
    return 0.0;
  }
  return sigma * lambda.dot(s) / static_cast<double>(lambda.size());
}

double max_step(const Eigen::VectorXd& z, const Eigen::VectorXd& dz) {
  double smallest = -1.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    smallest = std::min(smallest, dz(j) / z(j));
  }
  return -1.0 / smallest;
}

LineSearchResult line_search(const NlpProblem& problem, const Iterate& v,
                             const Iterate& dv, double mu, double alpha_hat_s,
                             double alpha_hat_lambda,
                             const SolverConfig& config,
                             std::optional<MeritSlope> at_v) {
  if (!at_v) {
    const NlpEvaluation e = evaluate(problem, v.u);
    const KktResidual F = kkt_residual(e, v, mu);
    const KktJacobian J = kkt_jacobian(problem, e, v);
    at_v = MeritSlope{merit(F), 2.0 * F.stacked().dot(J.apply(dv.stacked()))};
  }

  LineSearchResult result;
  result.iterate = v;
  result.merit_before = at_v->merit;
  result.slope = at_v->slope;

  // Without inequality rows there is no boundary to keep away from.
  const bool bounded = v.s.size() > 0;
  const double cap_s =
      bounded ? std::min(1.0, config.tau * alpha_hat_s) : 1.0;
  const double cap_lambda =
      bounded ? std::min(1.0, config.tau * alpha_hat_lambda) : 1.0;

  double alpha_p = std::min(cap_s, cap_lambda);

  auto try_step = [&](const StepLengths& a) {
    Iterate trial = step(v, dv, a);
    if (!strictly_positive(trial.lambda) || !strictly_positive(trial.s)) {
      return false;
    }
    const double phi = merit_or_inf(problem, trial, mu);
    if (phi <= at_v->merit + config.beta * a.u * at_v->slope) {
      result.accepted = true;
      result.alpha = a;
      result.iterate = std::move(trial);
      result.merit_after = phi;
      return true;
    }
    return false;
  };

  while (alpha_p >= config.min_alpha) {
    const StepLengths split{alpha_p, cap_lambda, alpha_p, cap_s};
    if (try_step(split)) {
      return result;
    }
    if (config.coupled_dual_fallback &&
        (cap_lambda > alpha_p || cap_s > alpha_p)) {
      const StepLengths coupled{alpha_p, std::min(alpha_p, cap_lambda),
                                alpha_p, std::min(alpha_p, cap_s)};
      if (try_step(coupled)) {
        result.coupled = true;
        return result;
      }
    }
    alpha_p *= config.backtrack_factor;
    ++result.backtracks;
  }
  return result;
}

bool converged(const NlpProblem& problem, const Iterate& v, double xi) {
  return kkt_residual(problem, v, 0.0).inf_norm() <= xi;
}

RegularityReport check_regularity(const NlpProblem& problem, const Iterate& v) {
  v.check_shape(problem);
  const NlpEvaluation e = evaluate(problem, v.u);
  const Eigen::Index n = problem.n_vars;

  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < e.ineq.size(); ++i) {
    if (std::abs(e.ineq(i)) <= kActiveTolerance) {
      active.push_back(i);
    }
  }

  const Eigen::Index rows = e.eq.size() + static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd A(rows, n);
  A.topRows(e.eq.size()) = e.eq_jac;
  for (std::size_t k = 0; k < active.size(); ++k) {
    A.row(e.eq.size() + static_cast<Eigen::Index>(k)) = e.ineq_jac.row(active[k]);
  }

  RegularityReport report;
  report.active_constraints = static_cast<int>(rows);

  Eigen::MatrixXd Z;
  if (rows > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol = std::max<double>(rows, n) *
                       std::numeric_limits<double>::epsilon() *
                       (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > tol && sv(i) > 1e-10) {
        ++rank;
      }
    }
    report.active_rank = static_cast<int>(rank);
    report.licq_rank_ok = rank == rows;
    Z = svd.matrixV().rightCols(n - rank);
  } else {
    report.licq_rank_ok = true;
    Z = Eigen::MatrixXd::Identity(n, n);
  }

  if (e.ineq.size() > 0) {
    report.min_complementarity =
        (v.lambda + e.ineq.cwiseAbs()).minCoeff();
    report.strict_complementarity_ok = report.min_complementarity > 1e-8;
  } else {
    report.min_complementarity = std::numeric_limits<double>::infinity();
    report.strict_complementarity_ok = true;
  }

  if (Z.cols() > 0) {
    const Eigen::MatrixXd H = evaluate_hessian(problem, v.u, v.lambda, v.w);
    const Eigen::MatrixXd reduced = Z.transpose() * H * Z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (reduced + reduced.transpose()), Eigen::EigenvaluesOnly);
    report.min_reduced_eigenvalue = eig.eigenvalues().minCoeff();
    report.second_order_flag = report.min_reduced_eigenvalue > 1e-10;
  } else {
    report.min_reduced_eigenvalue = std::numeric_limits<double>::infinity();
    report.second_order_flag = true;
  }
  return report;
}

SolverResult solve(const NlpProblem& problem, const Iterate& v0,
                   const SolverConfig& config,
                   const IterationObserver& observer) {
  config.validate();
  v0.check_shape(problem);
  if (!strictly_positive(v0.lambda) || !strictly_positive(v0.s)) {
    throw std::invalid_argument(
        "initial iterate needs strictly positive multipliers and slacks");
  }

  SolverResult result;
  Iterate v = v0;
  Iterate best = v0;
  double best_residual = std::numeric_limits<double>::infinity();
  double smallest_residual = std::numeric_limits<double>::infinity();

  for (int k = 0;; ++k) {
    const NlpEvaluation eval = evaluate(problem, v.u);
    const double r0 = kkt_residual(eval, v, 0.0).inf_norm();
    if (r0 < best_residual) {
      best_residual = r0;
      best = v;
    }

    // Step 1
    if (r0 <= config.xi) {
      result.status = SolverStatus::converged;
      break;
    }
    if (k >= config.max_iters) {
      result.status = SolverStatus::max_iters;
      break;
    }

    // Step 2
    smallest_residual = std::min(smallest_residual, r0);
    const double sigma_k = config.superlinear_centering
                               ? std::min(config.sigma, smallest_residual)
                               : config.sigma;
    const double mu = update_mu(v.lambda, v.s, sigma_k);

    // Step 3
    const KktResidual F = kkt_residual(eval, v, mu);
    const KktJacobian J = kkt_jacobian(problem, eval, v);
    const Eigen::VectorXd rhs = -F.stacked();

    SolveReport newton;
    try {
      newton = solve_kkt(J, rhs, config.delta_schedule, config.kkt_method);
    } catch (const RegularizationFailure& e) {
      result.status = SolverStatus::regularization_failure;
      result.message = e.what();
      break;
    }
    const Iterate dv = Iterate::unstack(newton.solution, v);

    // Step 4
    const double alpha_hat_s = max_step(v.s, dv.s);
    const double alpha_hat_lambda = max_step(v.lambda, dv.lambda);

    // Step 5
    SolverConfig step_config = config;
    if (config.adaptive_tau) {
      step_config.tau = std::max(config.tau, 1.0 - r0);
    }
    const MeritSlope at_v{merit(F),
                          2.0 * F.stacked().dot(J.apply(newton.solution))};
    LineSearchResult ls = line_search(problem, v, dv, mu, alpha_hat_s,
                                      alpha_hat_lambda, step_config, at_v);
    if (!ls.accepted) {
      result.status = SolverStatus::line_search_failure;
      result.message = "no step length down to min_alpha satisfied Armijo";
      break;
    }

    result.merit_history.push_back(at_v.merit);
    result.residual_history.push_back(r0);
    result.mu_history.push_back(mu);
    result.step_history.push_back(ls.alpha);
    result.regularization_history.push_back(newton.regularization_delta);
    ++result.iterations;

    if (observer) {
      observer(IterationEvent{.k = k,
                              .mu = mu,
                              .before = &v,
                              .direction = &dv,
                              .after = &ls.iterate,
                              .alpha = ls.alpha,
                              .merit_before = ls.merit_before,
                              .merit_after = ls.merit_after,
                              .slope = ls.slope,
                              .regularization_delta =
                                  newton.regularization_delta,
                              .residual_inf = r0});
    }

    // Step 6
    v = std::move(ls.iterate);
  }

  result.final_iterate =
      result.status == SolverStatus::line_search_failure ||
              result.status == SolverStatus::regularization_failure
          ? best
          : v;
  result.final_residual_inf =
      kkt_residual(problem, result.final_iterate, 0.0).inf_norm();
  if (config.regularity_diagnostics) {
    result.diagnostics = check_regularity(problem, result.final_iterate);
  }
  return result;
}

}  // namespace forma
