#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>

// Box-constrained smooth minimization: a projected limited-memory
// quasi-Newton method for the state subproblem and a bounded scalar
// minimizer for the shape-parameter subproblem.

namespace armhe {

struct NonFiniteObjective : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Objective callback: returns f(x); if grad != nullptr it must be filled
/// with the analytic gradient at x.
using Objective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd* grad)>;

struct BoxedProblem {
  Objective objective;
  Eigen::VectorXd lower;  // -inf entries allowed
  Eigen::VectorXd upper;
  Eigen::VectorXd x0;     // must be feasible
};

struct SolveReport {
  Eigen::VectorXd x_star;
  double f_star = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;  // projected-gradient infinity norm
};

struct SolverOptions {
  double tol = 1e-8;       // on the projected-gradient infinity norm
  int max_iter = 200;
  // Armijo line search constants, frozen.
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
  int history = 8;         // quasi-Newton memory
};

/// Projected quasi-Newton descent. Feasibility is exact (projection each
/// trial step); the objective sequence is non-increasing by line search.
/// Throws NonFiniteObjective if f or the gradient is non-finite at a
/// feasible point.
SolveReport minimize_boxed(const BoxedProblem& p, const SolverOptions& opt = {});

struct ScalarResult {
  double x_star;
  double f_star;
};

/// Golden-section search on [lo, hi] refined by a final parabolic step.
/// Returns the best point evaluated, which is never worse than the better
/// bracket endpoint or the midpoint.
ScalarResult minimize_scalar(const std::function<double(double)>& f, double lo,
                             double hi, double tol = 1e-6);

}  // namespace armhe
