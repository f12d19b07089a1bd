#pragma once

#include <Eigen/Core>
#include <array>
#include <nlohmann/json_fwd.hpp>

#include "rbdo/box.hpp"
#include "rbdo/gld.hpp"
#include "rbdo/math.hpp"
#include "rbdo/pce.hpp"

namespace rbdo {

/// Generalized lambda model: the four GLD parameters as Legendre-PCE
/// functions of the design, with the lambda2 expansion in log-space.
struct GlamModel {
  DesignBox box;
  std::array<MultiIndexSet, 4> sets;
  std::array<Eigen::VectorXd, 4> coefs;

  struct Diagnostics {
    double log_likelihood = 0.0;
    double bic = 0.0;
    int lambda1_degree = 0;
    int lambda2_degree = 0;
    int lambda3_degree = 0;
    int lambda4_degree = 0;
    double q_norm = 1.0;
    bool converged = false;
  } diag;

  /// GLD parameters at a design point (no domain check; see conditional ops).
  GldParams lambda_at(const Eigen::VectorXd& d) const;

  nlohmann::json to_json() const;
  static GlamModel from_json(const nlohmann::json& j);
};

struct GlamFitConfig {
  int lambda1_min_degree = 1;
  int lambda1_max_degree = 15;
  int lambda2_max_degree = 5;
  int shape_max_degree = 0;
  std::vector<double> q_norms = {0.6, 0.7, 0.8, 0.9, 1.0};
  double mle_rel_tol = 1e-9;
  int bfgs_max_iter = 500;
};

/// Maximum-likelihood fit over the candidate structure grid, selected by BIC.
/// Requires >= 20 points inside the box; throws on degenerate data.
GlamModel fit_glam(const Eigen::MatrixXd& design_points, const Eigen::VectorXd& responses,
                   const DesignBox& box, const GlamFitConfig& config = {});

/// Conditional quantile q_alpha(d); rejects designs outside the box.
double glam_conditional_quantile(const GlamModel& m, const Eigen::VectorXd& d, double alpha);

/// Conditional density at y given d.
double glam_conditional_pdf(const GlamModel& m, const Eigen::VectorXd& d, double y);

/// n conditional draws via the quantile transform.
Eigen::VectorXd glam_sample(const GlamModel& m, const Eigen::VectorXd& d, int n, Rng& rng);

/// Training log-likelihood of an arbitrary model on a dataset (diagnostics).
double glam_log_likelihood(const GlamModel& m, const Eigen::MatrixXd& design_points,
                           const Eigen::VectorXd& responses);

}  // namespace rbdo
