#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace trapscape {

/// f(x, grad) returns the objective and writes the gradient.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
/// Exact Hessian, used to seed the inverse-Hessian estimate and for the final polish.
using HessianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct MinimizeOptions {
  double gradient_tolerance = 1e-10;  // on the Euclidean norm of the gradient
  std::size_t max_evaluations = 100000;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  double max_step = 0.0;  // cap on |dx| per iteration; 0 disables
  bool record_history = false;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  std::size_t evaluations = 0;
  int iterations = 0;
  std::string message;
  std::vector<double> history;  // objective after each accepted step, if requested
};

/// BFGS on the inverse Hessian with an Armijo backtracking line search.
/// When `hessian` is given and positive definite at x0, its inverse seeds the
/// quasi-Newton estimate; once the line search can no longer make progress at
/// the roundoff floor, Newton steps on the exact Hessian finish the job.
MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const MinimizeOptions& options,
                             const HessianFn& hessian = {});

}  // namespace trapscape
