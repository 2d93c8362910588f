#include "forma/fd_check.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace forma {

namespace {

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

void compare(FdCheckEntry& entry, const Eigen::MatrixXd& analytic,
             const Eigen::MatrixXd& numeric, double rel_tol) {
  for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
    for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
      const double err = rel_error(analytic(i, j), numeric(i, j));
      if (!(err <= entry.max_rel_error)) {
        entry.max_rel_error = err;
        entry.worst_row = i;
        entry.worst_col = j;
      }
    }
  }
  entry.flagged = !(entry.max_rel_error <= rel_tol);
}

// Central-difference Jacobian of a vector map, one column per variable.
template <typename Map>
Eigen::MatrixXd central_jacobian(const Map& map, const Eigen::VectorXd& u,
                                 Eigen::Index rows, double step_scale) {
  Eigen::MatrixXd out(rows, u.size());
  Eigen::VectorXd x = u;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double h = step_scale * (1.0 + std::abs(u(j)));
    x(j) = u(j) + h;
    const Eigen::VectorXd plus = map(x);
    x(j) = u(j) - h;
    const Eigen::VectorXd minus = map(x);
    x(j) = u(j);
    out.col(j) = (plus - minus) / (2.0 * h);
  }
  return out;
}

template <typename Body>
void guarded(FdCheckEntry& entry, Body&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    entry.failure = e.what();
    entry.flagged = true;
  }
}

}  // namespace

bool FdCheckReport::ok() const {
  return std::none_of(entries.begin(), entries.end(),
                      [](const FdCheckEntry& e) { return e.flagged; });
}

double FdCheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) {
    w = std::max(w, e.failure.empty() ? e.max_rel_error
                                      : std::numeric_limits<double>::infinity());
  }
  return w;
}

const FdCheckEntry* FdCheckReport::find(const std::string& callback) const {
  for (const auto& e : entries) {
    if (e.callback == callback) {
      return &e;
    }
  }
  return nullptr;
}

FdCheckReport fd_check(const NlpProblem& problem, const Eigen::VectorXd& point,
                       double rel_tol, const FdCheckOptions& options) {
  const double h = options.step_scale;
  FdCheckReport report;

  FdCheckEntry grad;
  grad.callback = "objective_grad";
  guarded(grad, [&] {
    const Eigen::VectorXd analytic = problem.objective_grad(point);
    auto f = [&](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, problem.objective(x));
    };
    const Eigen::MatrixXd numeric = central_jacobian(f, point, 1, h);
    compare(grad, analytic.transpose(), numeric, rel_tol);
  });
  report.entries.push_back(grad);

  FdCheckEntry eq;
  eq.callback = "eq_jac";
  if (problem.n_eq > 0) {
    guarded(eq, [&] {
      const Eigen::MatrixXd numeric =
          central_jacobian(problem.eq_con, point, problem.n_eq, h);
      compare(eq, problem.eq_jac(point), numeric, rel_tol);
    });
  }
  report.entries.push_back(eq);

  FdCheckEntry ineq;
  ineq.callback = "ineq_jac";
  if (problem.n_ineq > 0) {
    guarded(ineq, [&] {
      const Eigen::MatrixXd numeric =
          central_jacobian(problem.ineq_con, point, problem.n_ineq, h);
      compare(ineq, problem.ineq_jac(point), numeric, rel_tol);
    });
  }
  report.entries.push_back(ineq);

  FdCheckEntry hess;
  hess.callback = "lag_hessian";
  guarded(hess, [&] {
    const Eigen::VectorXd lambda =
        options.lambda.value_or(Eigen::VectorXd::Ones(problem.n_ineq));
    const Eigen::VectorXd w =
        options.w.value_or(Eigen::VectorXd::Ones(problem.n_eq));
    const bool gauss_newton = problem.hessian_mode == HessianMode::gauss_newton;

    auto lagrangian_grad = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd g = problem.objective_grad(x);
      if (!gauss_newton) {
        if (problem.n_ineq > 0) {
          g += problem.ineq_jac(x).transpose() * lambda;
        }
        if (problem.n_eq > 0) {
          g += problem.eq_jac(x).transpose() * w;
        }
      }
      return g;
    };
    const Eigen::MatrixXd numeric =
        central_jacobian(lagrangian_grad, point, problem.n_vars, h);
    compare(hess, problem.hessian(point, lambda, w), numeric, rel_tol);
  });
  report.entries.push_back(hess);

  return report;
}

}  // namespace forma
