#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "rbdo/box.hpp"

namespace rbdo {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;

struct SqpOptions {
  int max_iter = 500;
  double cost_rel_tol = 1e-8;      // |delta cost| / (1 + |cost|)
  double constraint_tol = 1e-6;    // max violation
  double fd_rel_step = 1e-6;       // h_i = fd_rel_step * (upper_i - lower_i)
  double max_rel_step = 0.25;      // per-iteration cap as a fraction of the box
  bool keep_trace = true;
};

struct SqpIterate {
  Eigen::VectorXd d;
  double cost = 0.0;
  Eigen::VectorXd constraints;
  double step_length = 0.0;        // accepted line-search step
};

struct OptimizationResult {
  Eigen::VectorXd d_star;
  double cost = 0.0;
  Eigen::VectorXd constraints;     // values at d_star
  std::vector<SqpIterate> trace;
  bool converged = false;
  int iterations = 0;
  int n_cost_evals = 0;
  int n_constraint_evals = 0;      // scalar constraint evaluations
};

/// Sequential quadratic programming on min cost(d) s.t. constraints_i(d) <= 0
/// and box bounds. BFGS Lagrangian Hessian, forward finite differences,
/// elastic l1 QP subproblems (always feasible, so infeasible starts are
/// driven back by the elastic penalty). On hitting max_iter the best feasible
/// iterate seen is returned with converged = false.
OptimizationResult sqp_minimize(const ScalarFn& cost, const std::vector<ScalarFn>& constraints,
                                const DesignBox& box, const Eigen::VectorXd& d0,
                                const SqpOptions& options = {});

/// Dense convex QP  min 0.5 x'Qx + q'x  s.t.  Ax <= b  by a primal-dual
/// interior point method. Q must be positive definite. Exposed for testing.
Eigen::VectorXd solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         Eigen::VectorXd* duals = nullptr);

}  // namespace rbdo
