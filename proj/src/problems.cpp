#include "forma/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace forma {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd vec(std::initializer_list<double> values) {
  VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values) {
    v(i++) = x;
  }
  return v;
}

MatrixXd row(std::initializer_list<double> values) {
  return vec(values).transpose();
}

// Constraint curvature shared by problems whose only nonlinear constraint is
// a single quadratic row; everything else in these problems is linear.
struct NonlinearParts {
  std::function<double(const VectorXd&)> f;
  std::function<VectorXd(const VectorXd&)> grad;
  std::function<MatrixXd(const VectorXd&)> hess;
  std::function<VectorXd(const VectorXd&)> g;
  std::function<MatrixXd(const VectorXd&)> g_jac;
  // Σ λᵢ∇²gᵢ
  std::function<MatrixXd(const VectorXd&, const VectorXd&)> g_curv;
  int n = 0;
  int m = 0;
};

NlpProblem make_nonlinear(NonlinearParts parts) {
  NlpProblem p;
  p.n_vars = parts.n;
  p.n_ineq = parts.m;
  p.objective = parts.f;
  p.objective_grad = parts.grad;
  p.ineq_con = parts.g;
  p.ineq_jac = parts.g_jac;
  p.lag_hessian = [parts](const VectorXd& u, const VectorXd& lambda,
                          const VectorXd&, HessianMode mode) -> MatrixXd {
    MatrixXd H = parts.hess(u);
    if (mode == HessianMode::exact && parts.g_curv) {
      H += parts.g_curv(u, lambda);
    }
    return H;
  };
  return p;
}

MatrixXd matrix_from_json(const nlohmann::json& j, const char* key) {
  const auto& rows = j.at(key);
  if (!rows.is_array()) {
    throw std::invalid_argument(std::string{key} + " must be an array of rows");
  }
  if (rows.empty()) {
    return {};
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.front().size());
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row_j = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row_j.size()) != c) {
      throw std::invalid_argument(std::string{key} + " has ragged rows");
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      m(i, k) = row_j.at(static_cast<std::size_t>(k)).get<double>();
    }
  }
  return m;
}

VectorXd vector_from_json(const nlohmann::json& j, const char* key) {
  const auto values = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(values.data(),
                                    static_cast<Eigen::Index>(values.size()));
}

}  // namespace

NlpProblem make_problem(const QuadraticProgram& qp) {
  const Eigen::Index n = qp.c.size();
  if (qp.Q.rows() != n || qp.Q.cols() != n) {
    throw StructuralError("QP: Q must be n×n with n = len(c)");
  }
  if (qp.A_eq.rows() != qp.b_eq.size() ||
      (qp.A_eq.rows() > 0 && qp.A_eq.cols() != n)) {
    throw StructuralError("QP: A_eq and b_eq disagree");
  }
  if (qp.A_ineq.rows() != qp.b_ineq.size() ||
      (qp.A_ineq.rows() > 0 && qp.A_ineq.cols() != n)) {
    throw StructuralError("QP: A_ineq and b_ineq disagree");
  }

  const MatrixXd Q = 0.5 * (qp.Q + qp.Q.transpose());
  const VectorXd c = qp.c;
  const MatrixXd Ae = qp.A_eq.rows() > 0 ? qp.A_eq : MatrixXd(0, n);
  const VectorXd be = qp.b_eq;
  const MatrixXd Ai = qp.A_ineq.rows() > 0 ? qp.A_ineq : MatrixXd(0, n);
  const VectorXd bi = qp.b_ineq;

  NlpProblem p;
  p.n_vars = static_cast<int>(n);
  p.n_eq = static_cast<int>(Ae.rows());
  p.n_ineq = static_cast<int>(Ai.rows());
  p.objective = [Q, c](const VectorXd& u) {
    return 0.5 * u.dot(Q * u) + c.dot(u);
  };
  p.objective_grad = [Q, c](const VectorXd& u) -> VectorXd {
    return Q * u + c;
  };
  p.eq_con = [Ae, be](const VectorXd& u) -> VectorXd { return Ae * u - be; };
  p.eq_jac = [Ae](const VectorXd&) { return Ae; };
  p.ineq_con = [Ai, bi](const VectorXd& u) -> VectorXd { return Ai * u - bi; };
  p.ineq_jac = [Ai](const VectorXd&) { return Ai; };
  p.lag_hessian = [Q](const VectorXd&, const VectorXd&, const VectorXd&,
                      HessianMode) { return Q; };
  return p;
}

std::vector<ReferenceProblem> reference_problems() {
  std::vector<ReferenceProblem> out;

  // ½uᵀQu + cᵀu absorbs the constant of each squared distance.
  out.push_back({"qp-ineq", "min (x-2)^2 s.t. x <= 1",
                 make_problem({.Q = MatrixXd::Constant(1, 1, 2.0),
                               .c = vec({-4.0}),
                               .A_eq = {},
                               .b_eq = {},
                               .A_ineq = row({1.0}),
                               .b_ineq = vec({1.0})}),
                 vec({0.0}), vec({1.0}), vec({2.0}), std::nullopt});

  out.push_back({"eq-only", "min x^2 + y^2 s.t. x + y = 2",
                 make_problem({.Q = 2.0 * MatrixXd::Identity(2, 2),
                               .c = VectorXd::Zero(2),
                               .A_eq = row({1.0, 1.0}),
                               .b_eq = vec({2.0}),
                               .A_ineq = {},
                               .b_ineq = {}}),
                 vec({0.0, 0.0}), vec({1.0, 1.0}), std::nullopt,
                 vec({-2.0})});

  out.push_back({"unconstrained", "min (u-5)^2",
                 make_problem({.Q = MatrixXd::Constant(1, 1, 2.0),
                               .c = vec({-10.0}),
                               .A_eq = {},
                               .b_eq = {},
                               .A_ineq = {},
                               .b_ineq = {}}),
                 vec({-3.0}), vec({5.0}), std::nullopt, std::nullopt});

  out.push_back({"box-2d", "min (x+1)^2 + (y+1)^2 s.t. x >= 0, y >= 0",
                 make_problem({.Q = 2.0 * MatrixXd::Identity(2, 2),
                               .c = vec({2.0, 2.0}),
                               .A_eq = {},
                               .b_eq = {},
                               .A_ineq = -MatrixXd::Identity(2, 2),
                               .b_ineq = VectorXd::Zero(2)}),
                 vec({1.0, 2.0}), vec({0.0, 0.0}), vec({2.0, 2.0}),
                 std::nullopt});

  out.push_back({"inactive", "min (x-0.5)^2 s.t. x <= 1",
                 make_problem({.Q = MatrixXd::Constant(1, 1, 2.0),
                               .c = vec({-1.0}),
                               .A_eq = {},
                               .b_eq = {},
                               .A_ineq = row({1.0}),
                               .b_ineq = vec({1.0})}),
                 vec({0.0}), vec({0.5}), vec({0.0}), std::nullopt});

  // Stationarity at (1, 2.5, −0.5): 2(x−3) + w + λ = 0, 2(y−3) + w = 0,
  // 2z + w = 0 → w = 1, λ = 3.
  {
    MatrixXd Q = 2.0 * MatrixXd::Identity(3, 3);
    out.push_back({"mixed",
                   "min (x-3)^2 + (y-3)^2 + z^2 s.t. x + y + z = 3, x <= 1",
                   make_problem({.Q = Q,
                                 .c = vec({-6.0, -6.0, 0.0}),
                                 .A_eq = row({1.0, 1.0, 1.0}),
                                 .b_eq = vec({3.0}),
                                 .A_ineq = row({1.0, 0.0, 0.0}),
                                 .b_ineq = vec({1.0})}),
                   vec({0.0, 0.0, 0.0}), vec({1.0, 2.5, -0.5}), vec({3.0}),
                   vec({1.0})});
  }

  // 1 + 2λx = 0 on x = y, x² + y² = 2 → x = −1, λ = ½.
  out.push_back(
      {"disk", "min x + y s.t. x^2 + y^2 <= 2",
       make_nonlinear({
           .f = [](const VectorXd& u) { return u.sum(); },
           .grad = [](const VectorXd&) -> VectorXd { return VectorXd::Ones(2); },
           .hess = [](const VectorXd&) -> MatrixXd { return MatrixXd::Zero(2, 2); },
           .g = [](const VectorXd& u) -> VectorXd {
             return vec({u.squaredNorm() - 2.0});
           },
           .g_jac = [](const VectorXd& u) -> MatrixXd {
             return 2.0 * u.transpose();
           },
           .g_curv = [](const VectorXd&, const VectorXd& l) -> MatrixXd {
             return 2.0 * l(0) * MatrixXd::Identity(2, 2);
           },
           .n = 2,
           .m = 1,
       }),
       vec({0.5, 0.0}), vec({-1.0, -1.0}), vec({0.5}), std::nullopt});

  // −y + λ = 0, −x + λ = 0, x + y = 2 → (1, 1), λ = 1. The objective is
  // indefinite but the reduced Hessian on the constraint is positive.
  out.push_back(
      {"saddle", "min -x*y s.t. x + y <= 2",
       make_nonlinear({
           .f = [](const VectorXd& u) { return -u(0) * u(1); },
           .grad = [](const VectorXd& u) -> VectorXd {
             return vec({-u(1), -u(0)});
           },
           .hess = [](const VectorXd&) -> MatrixXd {
             MatrixXd H(2, 2);
             H << 0.0, -1.0, -1.0, 0.0;
             return H;
           },
           .g = [](const VectorXd& u) -> VectorXd {
             return vec({u(0) + u(1) - 2.0});
           },
           .g_jac = [](const VectorXd&) -> MatrixXd { return row({1.0, 1.0}); },
           .g_curv = {},
           .n = 2,
           .m = 1,
       }),
       vec({1.5, 0.8}), vec({1.0, 1.0}), vec({1.0}), std::nullopt});

  return out;
}

std::vector<ReferenceProblem> hard_problems() {
  std::vector<ReferenceProblem> out;
  out.push_back(
      {"rosenbrock", "min 100(y - x^2)^2 + (1 - x)^2",
       make_nonlinear({
           .f = [](const VectorXd& u) {
             return 100.0 * std::pow(u(1) - u(0) * u(0), 2) +
                    std::pow(1.0 - u(0), 2);
           },
           .grad = [](const VectorXd& u) -> VectorXd {
             const double r = u(1) - u(0) * u(0);
             return vec({-400.0 * r * u(0) - 2.0 * (1.0 - u(0)), 200.0 * r});
           },
           .hess = [](const VectorXd& u) -> MatrixXd {
             MatrixXd H(2, 2);
             H << 1200.0 * u(0) * u(0) - 400.0 * u(1) + 2.0, -400.0 * u(0),
                 -400.0 * u(0), 200.0;
             return H;
           },
           .g = [](const VectorXd&) -> VectorXd { return VectorXd(0); },
           .g_jac = [](const VectorXd&) -> MatrixXd { return MatrixXd(0, 2); },
           .g_curv = {},
           .n = 2,
           .m = 0,
       }),
       vec({-1.2, 1.0}), vec({1.0, 1.0}), std::nullopt, std::nullopt});

  return out;
}

std::optional<ReferenceProblem> find_reference_problem(const std::string& name) {
  for (auto list : {reference_problems(), hard_problems()}) {
    for (auto& p : list) {
      if (p.name == name) {
        return std::move(p);
      }
    }
  }
  return std::nullopt;
}

RandomProblem random_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_dist(1, 6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n = n_dist(rng);
  const int n_eq = std::uniform_int_distribution<int>(0, n - 1)(rng);
  const int n_lin = std::uniform_int_distribution<int>(0, 2 * n)(rng);
  const bool ball = unit(rng) < 0.3;

  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) {
        m(i, j) = normal(rng);
      }
    }
    return m;
  };

  const MatrixXd B = gaussian(n, n);
  const MatrixXd Q = B.transpose() * B + 0.1 * MatrixXd::Identity(n, n);
  const VectorXd c = 3.0 * gaussian(n, 1);
  const VectorXd feasible = gaussian(n, 1);

  const MatrixXd Ae = gaussian(n_eq, n);
  const VectorXd be = Ae * feasible;
  const MatrixXd Ai = gaussian(n_lin, n);
  VectorXd bi = Ai * feasible;
  for (Eigen::Index i = 0; i < bi.size(); ++i) {
    bi(i) += unit(rng);
  }

  const VectorXd center = feasible + 0.5 * gaussian(n, 1);
  const double radius2 = std::pow((feasible - center).norm() + 0.2 + unit(rng), 2);

  const int m = n_lin + (ball ? 1 : 0);

  NlpProblem p;
  p.n_vars = n;
  p.n_eq = n_eq;
  p.n_ineq = m;
  p.objective = [Q, c](const VectorXd& u) {
    return 0.5 * u.dot(Q * u) + c.dot(u);
  };
  p.objective_grad = [Q, c](const VectorXd& u) -> VectorXd {
    return Q * u + c;
  };
  p.eq_con = [Ae, be](const VectorXd& u) -> VectorXd { return Ae * u - be; };
  p.eq_jac = [Ae](const VectorXd&) { return Ae; };
  p.ineq_con = [Ai, bi, ball, center, radius2, m](const VectorXd& u) -> VectorXd {
    VectorXd g(m);
    g.head(Ai.rows()) = Ai * u - bi;
    if (ball) {
      g(m - 1) = (u - center).squaredNorm() - radius2;
    }
    return g;
  };
  p.ineq_jac = [Ai, ball, center, m, n](const VectorXd& u) -> MatrixXd {
    MatrixXd J(m, n);
    J.topRows(Ai.rows()) = Ai;
    if (ball) {
      J.row(m - 1) = 2.0 * (u - center).transpose();
    }
    return J;
  };
  p.lag_hessian = [Q, ball, m, n](const VectorXd&, const VectorXd& lambda,
                                  const VectorXd&, HessianMode mode) -> MatrixXd {
    MatrixXd H = Q;
    if (ball && mode == HessianMode::exact) {
      H += 2.0 * lambda(m - 1) * MatrixXd::Identity(n, n);
    }
    return H;
  };

  return {std::move(p), 2.0 * gaussian(n, 1)};
}

ReferenceProblem qp_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  QuadraticProgram qp;
  qp.Q = matrix_from_json(j, "Q");
  qp.c = vector_from_json(j, "c");
  if (j.contains("A_eq")) {
    qp.A_eq = matrix_from_json(j, "A_eq");
    qp.b_eq = vector_from_json(j, "b_eq");
  }
  if (j.contains("A_ineq")) {
    qp.A_ineq = matrix_from_json(j, "A_ineq");
    qp.b_ineq = vector_from_json(j, "b_ineq");
  }

  ReferenceProblem out;
  out.name = j.value("name", std::string{"qp"});
  out.description = "quadratic program from document";
  out.problem = make_problem(qp);
  out.u0 = j.contains("u0") ? vector_from_json(j, "u0")
                            : VectorXd::Zero(qp.c.size());
  return out;
}

}  // namespace forma
