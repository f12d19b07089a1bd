#pragma once

#include <Eigen/Core>

namespace rbdo {

/// Gaussian process spec for the stochastic load: squared-exponential
/// autocorrelation rho(dt) = exp(-dt^2 / (2 l^2)) on an ordered time grid.
struct ProcessSpec {
  double mean = 0.0;
  double cov = 0.0;               // coefficient of variation, dimensionless
  double correlation_length = 1.0;
  Eigen::VectorXd time_grid;      // strictly increasing

  double std_dev() const { return cov * mean; }
};

/// Karhunen-Loeve basis from a Nystrom discretization.
struct KlBasis {
  Eigen::VectorXd eigenvalues;   // descending, clamped at 0
  Eigen::MatrixXd modes;         // grid_points x n_modes, W-orthonormal
  Eigen::VectorXd quad_weights;  // trapezoidal weights on the grid
  int n_modes = 0;
  double captured_variance = 0.0;  // retained / total trace, in (0,1]
  double total_trace = 0.0;
};

/// Nystrom eigen-decomposition of C(ti,tj) = sigma^2 rho(ti-tj) with
/// trapezoidal quadrature on the grid.
KlBasis kl_expand(const ProcessSpec& spec, int n_modes);

/// Trajectory on the grid: mean + sum_k sqrt(eig_k) * mode_k * theta_k.
Eigen::VectorXd sample_process(const KlBasis& basis, const Eigen::VectorXd& theta, double mean);

}  // namespace rbdo
