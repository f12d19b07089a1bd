#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>

#include "rbdo/math.hpp"

namespace rbdo {

/// Ordinary Kriging (constant trend) with anisotropic Matern 5/2 correlation
/// in the augmented design + environmental space. Inputs are standardized to
/// zero mean / unit variance per dimension.
struct KrigingModel {
  Eigen::MatrixXd train_x;      // standardized, n x n_tot
  Eigen::VectorXd train_y;
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_std;
  Eigen::VectorXd lengthscales;  // standardized coordinates, > 0
  double trend = 0.0;
  double process_var = 1.0;
  double nugget = 1e-12;

  // derived: R = L L^T, alpha = R^{-1}(y - trend)
  Eigen::MatrixXd chol_lower;
  Eigen::VectorXd alpha;

  struct Diagnostics {
    double log_likelihood = 0.0;
    int n_starts = 0;
    bool converged = false;
  } diag;

  double predict(const Eigen::VectorXd& point) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& points) const;

  nlohmann::json to_json() const;
  static KrigingModel from_json(const nlohmann::json& j);
};

struct KrigingFitConfig {
  int n_starts = 10;
  int max_evals_per_start = 200;
  double log_ls_lower = -2.9957322735539909;  // log 0.05
  double log_ls_upper = 2.9957322735539909;   // log 20
  std::uint64_t start_seed = 0x6b726967u;     // fixed: the fit is deterministic
};

/// Hyperparameters by multi-start maximization of the profiled log marginal
/// likelihood; nugget escalates 1e-12 -> 1e-6 until the Cholesky succeeds.
KrigingModel fit_kriging(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                         const KrigingFitConfig& config = {});

/// Matern 5/2 correlation at anisotropic distance r = |delta ./ ls|.
double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& ls);

/// Conditional input realizations at d: n rows of (x, z) drawn from rng.
using ConditionalSampler =
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& d, int n, Rng& rng)>;
/// Limit-state values for a batch of full (d, x, z) input rows.
using BatchEvaluator = std::function<Eigen::VectorXd(const Eigen::MatrixXd& rows)>;

/// Common-random-numbers Monte-Carlo quantile: the generator is re-seeded
/// from crn_seed on every call so the same underlying uniforms are used for
/// every d, making d -> quantile a deterministic (FD-differentiable) map.
/// Returns the ceil(alpha * n_mc)-th order statistic.
double mc_quantile(const ConditionalSampler& sample, const BatchEvaluator& evaluate,
                   const Eigen::VectorXd& d, int n_mc, double alpha, std::uint64_t crn_seed);

}  // namespace rbdo
