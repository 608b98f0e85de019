#pragma once

#include <Eigen/Core>
#include <functional>

namespace pmrm {

// Objective to minimise. Return +infinity for points outside the domain.
using Objective = std::function<double(const Eigen::VectorXd&)>;

// Finite-difference step for coordinate value x: max(1e-5, 1e-5 |x|).
double fd_step(double x);

// Central-difference gradient. When `diag_hessian` is non-null it receives the
// matching second differences, which come for free from the same evaluations.
Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double fx,
                                 Eigen::VectorXd* diag_hessian = nullptr);

// Central-difference Hessian (four-point formula off the diagonal).
Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double fx);

struct MinimizeOptions {
  int max_iter = 500;
  double rel_tol = 1e-9;
  double grad_tol = 1e-4;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  Eigen::VectorXd gradient;
  double last_rel_change = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// BFGS on the inverse Hessian with Armijo backtracking and numerical gradients.
// The starting inverse Hessian is the inverse of the diagonal second differences.
// Converged when the relative change in value is below rel_tol and the gradient
// max-norm is below grad_tol. Never returns a value above f(x0).
MinimizeResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0,
                             const MinimizeOptions& options = {});

}  // namespace pmrm
