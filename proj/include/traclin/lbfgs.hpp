#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace traclin {

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 2000;
  /// Stop when |g| ≤ tol_grad·(1 + |f|) (Euclidean norm of the projected gradient).
  double tol_grad = 1e-8;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
  /// −gᵀd for the last search direction d (the decrease predicted by the local quadratic model, times 2).
  double predicted_decrease = 0.0;
};

/// f(x, g) returns the value and writes the gradient; it may return +∞ (or NaN) for inadmissible x, which the
/// line search treats as a rejected trial.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;
using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// L-BFGS with a strong-Wolfe line search. `project_gradient` maps gradients onto the dual of the admissible
/// step space and `apply_h0` is the initial inverse Hessian, which must return admissible steps. Both default to
/// the identity.
LbfgsResult lbfgs_minimize(const Objective& f, const Eigen::VectorXd& x0, const LbfgsOptions& opt,
                           const LinearMap& apply_h0 = {}, const LinearMap& project_gradient = {});

}  // namespace traclin
