#pragma once

#include <Eigen/Core>
#include <functional>

namespace rbdo {

struct BfgsOptions {
  int max_iter = 200;
  double rel_tol = 1e-10;   // on objective decrease
  double grad_tol = 1e-8;
  double fd_step = 1e-6;    // forward-difference step (scaled by 1+|x_i|)
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  bool converged = false;
  int iterations = 0;
  int n_evals = 0;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// BFGS minimizer with Armijo backtracking. Objective values of -inf/NaN are
/// treated as infeasible (the line search backs off). Pass an empty GradientFn
/// to fall back to forward finite differences.
BfgsResult minimize_bfgs(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& opts = {}, const GradientFn& grad = {});

}  // namespace rbdo
