#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "forma/fd_check.hpp"
#include "forma/nlp.hpp"

namespace forma::cli {

/// Process exit codes. Stable; see README.
enum ExitCode : int {
  kOk = 0,
  /// check-grad: some callback exceeded the tolerance.
  kGradientMismatch = 1,
  /// Bad flags, unknown problem, unreadable or invalid input.
  kInvalidInput = 2,
  /// run: more than the allowed fraction of horizon solves failed.
  kRunFlagged = 3,
  /// solve: iteration limit reached.
  kMaxIters = 4,
  /// solve: regularization or line-search failure.
  kSolverFailure = 5,
};

inline constexpr double kGradientTolerance = 1e-4;
/// `solve` targets small problems with closed-form answers, so it defaults
/// to a far tighter stopping tolerance than the horizon solves.
inline constexpr double kSolveTolerance = 1e-9;

/// Dispatches a full command line (argv[0] included).
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

/// Worst relative error per callback over all points.
struct GradientSummary {
  std::vector<FdCheckEntry> worst;
  int points = 0;
  bool ok = false;
};

/// Interior points for the derivative check: the hold-course rollout with
/// reproducible perturbations of relative size `spread`.
std::vector<Eigen::VectorXd> check_points(const Eigen::VectorXd& center,
                                          int count, double spread,
                                          unsigned seed);

GradientSummary check_gradients(const NlpProblem& problem,
                                const std::vector<Eigen::VectorXd>& points,
                                double tolerance, std::ostream& out);

/// Applies FORMA_LOG (error | info | debug) to the default logger.
void configure_logging();

}  // namespace forma::cli
