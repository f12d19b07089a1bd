#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "rbdo/box.hpp"
#include "rbdo/math.hpp"
#include "rbdo/pce.hpp"

namespace rbdo {

/// Stochastic polynomial chaos expansion: PCE over (design dims + one
/// standard-normal latent dim) with additive Gaussian noise of scale sigma.
/// Coefficients are stored in physical response units.
struct SpceModel {
  DesignBox box;
  MultiIndexSet set;        // n_dims = design dims + 1 (latent last)
  Eigen::VectorXd coefs;
  double sigma = 1.0;       // response units, > 0
  int n_quad = 128;
  QuadratureRule quad;      // Gauss-Hermite rule of size n_quad

  struct Diagnostics {
    double log_likelihood = 0.0;
    double cv_score = 0.0;
    int degree = 0;
    double q_norm = 1.0;
    bool converged = true;
    bool latent_active = true;
    bool sigma_clamped = false;
  } diag;

  /// PCE value M(d, xi) at every quadrature node (physical units).
  Eigen::VectorXd pce_at_nodes(const Eigen::VectorXd& d) const;
  /// PCE value at a single (d, xi).
  double pce_value(const Eigen::VectorXd& d, double xi) const;

  nlohmann::json to_json() const;
  static SpceModel from_json(const nlohmann::json& j);
};

struct SpceFitConfig {
  int max_degree = 15;
  std::vector<double> q_norms = {0.8, 0.9, 1.0};
  int n_quad = 128;
  int n_quad_cv = 32;         // coarser rule for the structure/sigma scan
  int cv_folds = 5;
  int n_sigma = 15;           // points on the descending sigma path
  int bfgs_max_iter = 200;    // cold start (top of the path)
  int bfgs_warm_iter = 40;    // warm-started path steps
};

/// Maximum-likelihood SPCE fit; structure by cross-validated likelihood,
/// sigma selected on a descending continuation path. Requires >= 20 points.
SpceModel fit_spce(const Eigen::MatrixXd& design_points, const Eigen::VectorXd& responses,
                   const DesignBox& box, const SpceFitConfig& config = {});

double spce_conditional_pdf(const SpceModel& m, const Eigen::VectorXd& d, double y);
double spce_conditional_cdf(const SpceModel& m, const Eigen::VectorXd& d, double y);
/// Semi-analytic failure probability: the conditional CDF at zero.
double spce_failure_probability(const SpceModel& m, const Eigen::VectorXd& d);
/// Monotone inversion of the conditional CDF; |F(q) - alpha| <= 1e-10.
double spce_conditional_quantile(const SpceModel& m, const Eigen::VectorXd& d, double alpha);
Eigen::VectorXd spce_sample(const SpceModel& m, const Eigen::VectorXd& d, int n, Rng& rng);

}  // namespace rbdo
