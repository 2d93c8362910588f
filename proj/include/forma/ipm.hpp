#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forma/kkt.hpp"
#include "forma/linear_solver.hpp"
#include "forma/nlp.hpp"

namespace forma {

/**
 * Parameters of the primal-dual Newton interior-point iteration.
 */
struct SolverConfig {
  /// Centering factor: μₖ = σ·λᵀs/m.
  double sigma = 0.1;
  /// Fraction-to-boundary factor.
  double tau = 0.995;
  /// Armijo constant.
  double beta = 1e-4;
  /// Convergence threshold on the unperturbed residual ∞-norm.
  double xi = 0.01;
  int max_iters = 100;
  double backtrack_factor = 0.5;
  double min_alpha = 1e-10;
  std::vector<double> delta_schedule{kDefaultDeltaSchedule.begin(),
                                     kDefaultDeltaSchedule.end()};
  KktSolveMethod kkt_method = KktSolveMethod::automatic;

  /// Use σₖ = min(σ, smallest residual seen so far) so μ shrinks
  /// quadratically near the solution.
  bool superlinear_centering = true;
  /// Use τₖ = max(τ, 1 − rₖ) so the boundary factor approaches one.
  bool adaptive_tau = true;
  /// When the dual steps held at their caps fail the Armijo test, retry the
  /// same α_p with every block scaled by α_p.
  bool coupled_dual_fallback = true;
  /// Run check_regularity on the final iterate.
  bool regularity_diagnostics = true;

  /// Throws std::invalid_argument if any parameter is out of range.
  void validate() const;
};

enum class SolverStatus {
  converged,
  max_iters,
  regularization_failure,
  line_search_failure,
};

const char* to_string(SolverStatus status);

/// (α_u, α_λ, α_w, α_s); the diagonal of Λₖ in block form.
struct StepLengths {
  double u = 0.0;
  double lambda = 0.0;
  double w = 0.0;
  double s = 0.0;
};

struct RegularityReport {
  bool licq_rank_ok = false;
  bool strict_complementarity_ok = false;
  bool second_order_flag = false;
  int active_constraints = 0;
  int active_rank = 0;
  /// min over inequality rows of λᵢ + |gᵢ(u)|; +∞ without inequalities.
  double min_complementarity = 0.0;
  /// Smallest eigenvalue of ZᵀHZ; +∞ when the null space is trivial.
  double min_reduced_eigenvalue = 0.0;
};

/// Everything known about one accepted step, passed to the observer.
struct IterationEvent {
  int k = 0;
  double mu = 0.0;
  const Iterate* before = nullptr;
  const Iterate* direction = nullptr;
  const Iterate* after = nullptr;
  StepLengths alpha;
  double merit_before = 0.0;
  double merit_after = 0.0;
  /// ∇φ(vₖ)ᵀΔvₖ used in the Armijo test.
  double slope = 0.0;
  double regularization_delta = 0.0;
  double residual_inf = 0.0;
};

using IterationObserver = std::function<void(const IterationEvent&)>;

struct SolverResult {
  SolverStatus status = SolverStatus::max_iters;
  Iterate final_iterate;
  int iterations = 0;

  /// φ at μₖ before step k.
  std::vector<double> merit_history;
  /// ∞-norm of the unperturbed residual before step k.
  std::vector<double> residual_history;
  std::vector<double> mu_history;
  std::vector<StepLengths> step_history;
  std::vector<double> regularization_history;

  /// ∞-norm of the unperturbed residual at final_iterate.
  double final_residual_inf = 0.0;
  RegularityReport diagnostics;
  std::string message;
};

/**
 * Starting point from a primal guess: s₀ = max(−G(u₀), 0) + 0.1,
 * λ₀ = μ₀/s₀, w₀ = 0.
 */
Iterate initial_iterate(const NlpProblem& problem, const Eigen::VectorXd& u0,
                        double mu0 = 0.1);

/**
 * Runs the damped primal-dual Newton iteration from v0.
 *
 * Each iteration tests the unperturbed residual against ξ, picks μₖ, solves
 * the perturbed Newton system, caps the dual steps by the fraction-to-boundary
 * rule and backtracks α_p on the squared-residual merit function. λ and s stay
 * strictly positive at every accepted iterate.
 *
 * Throws std::invalid_argument if v0 has non-positive λ or s.
 */
SolverResult solve(const NlpProblem& problem, const Iterate& v0,
                   const SolverConfig& config = {},
                   const IterationObserver& observer = {});

/// σ·λᵀs/m, or 0 when there are no inequalities.
double update_mu(const Eigen::VectorXd& lambda, const Eigen::VectorXd& s,
                 double sigma);

/// −1 / min(min_j dzⱼ/zⱼ, −1).
double max_step(const Eigen::VectorXd& z, const Eigen::VectorXd& dz);

/// Merit value and ∇φᵀΔv at the current iterate, if already known.
struct MeritSlope {
  double merit = 0.0;
  double slope = 0.0;
};

struct LineSearchResult {
  bool accepted = false;
  StepLengths alpha;
  Iterate iterate;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double slope = 0.0;
  int backtracks = 0;
  /// True if the accepted step came from the coupled fallback.
  bool coupled = false;
};

/**
 * Backtracking search on α_p with α_s = min(1, τα̂_s), α_λ = min(1, τα̂_λ)
 * and α_u = α_w = α_p, accepting the first trial with
 *
 *   φ(v + ΛΔv) ≤ φ(v) + β·α_p·∇φ(v)ᵀΔv,
 *
 * φ evaluated at the given μ. On failure `accepted` is false and `iterate`
 * is v.
 */
LineSearchResult line_search(const NlpProblem& problem, const Iterate& v,
                             const Iterate& dv, double mu, double alpha_hat_s,
                             double alpha_hat_lambda,
                             const SolverConfig& config,
                             std::optional<MeritSlope> at_v = std::nullopt);

/// True iff the unperturbed (μ = 0) residual ∞-norm is at most xi.
bool converged(const NlpProblem& problem, const Iterate& v, double xi);

/// Active-set regularity diagnostics at a candidate solution.
RegularityReport check_regularity(const NlpProblem& problem, const Iterate& v);

/// Constraint rows with |gᵢ| at most this are treated as active.
inline constexpr double kActiveTolerance = 1e-6;

}  // namespace forma
