#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <string>

#include "rbdo/kl.hpp"
#include "rbdo/marginal.hpp"
#include "rbdo/problem.hpp"

namespace rbdo {

/// Column buckling: units N, mm, MPa. Failure when the buckling resistance
/// k pi^2 E b h^3 / (12 L^2) drops below the service load.
struct BucklingSpec {
  Marginal k = make_marginal(Family::lognormal, 0.6, Dispersion::cov(0.10));
  Marginal e = make_marginal(Family::lognormal, 1.0e4, Dispersion::cov(0.05));   // MPa
  Marginal l = make_marginal(Family::lognormal, 3.0e3, Dispersion::cov(0.01));   // mm
  double f_ser = 1.4622e6;                                                        // N
  DesignBox box{Eigen::Vector2d(100.0, 100.0), Eigen::Vector2d(400.0, 400.0)};   // (b, h) mm
  double pf_target = 0.05;
};

RbdoProblem buckling_problem(const BucklingSpec& spec = {});

/// Closed-form optimum of the buckling problem (b* = h*) from the lognormal
/// conditional distribution of the resistance.
Eigen::Vector2d buckling_analytical_optimum(const BucklingSpec& spec, double pf_target);

enum class TimeAggregation { min_over_time, max_over_time };

std::string to_string(TimeAggregation a);
TimeAggregation aggregation_from_string(const std::string& s);

/// Simply supported beam under a stochastic midspan load with uniform
/// corrosion: units kN, m, months. The load process enters through its KL
/// coordinates; the limit state is aggregated over the time grid.
struct CorrodedBeamSpec {
  Marginal fy = make_marginal(Family::lognormal, 3.55e5, Dispersion::cov(0.03));  // kN/m^2
  Marginal kappa =
      make_marginal(Family::gaussian, 1.0 / 12.0e3, Dispersion::cov(0.10));       // m/month
  Marginal rho = make_marginal(Family::lognormal, 78.5, Dispersion::cov(0.03));   // kN/m^3
  ProcessSpec load;   // filled by default_corroded_beam_spec
  int n_kl = 100;
  double span = 5.0;  // m
  DesignBox box{Eigen::Vector2d(0.03, 0.03), Eigen::Vector2d(0.15, 0.15)};        // (b0, h0) m
  double pf_target = 0.05;
  TimeAggregation aggregation = TimeAggregation::min_over_time;
};

CorrodedBeamSpec default_corroded_beam_spec(int n_kl = 100, int n_time = 121,
                                            TimeAggregation agg = TimeAggregation::min_over_time);

RbdoProblem corroded_beam_problem(const CorrodedBeamSpec& spec);

/// Short column under biaxial bending and axial force: units N, mm, MPa.
/// Design variables are the means of the gaussian section dimensions.
struct ShortColumnSpec {
  double dimension_cov = 0.01;  // CoV of X_b, X_h around the design means
  Marginal f = make_marginal(Family::lognormal, 2.5e6, Dispersion::cov(0.20));    // N
  Marginal m1 = make_marginal(Family::lognormal, 2.5e8, Dispersion::cov(0.30));   // N mm
  Marginal m2 = make_marginal(Family::lognormal, 1.25e8, Dispersion::cov(0.30));  // N mm
  Marginal sigma_y = make_marginal(Family::lognormal, 40.0, Dispersion::cov(0.10));  // MPa
  DesignBox box{Eigen::Vector2d(250.0, 450.0), Eigen::Vector2d(650.0, 850.0)};  // (b, h) mm
  double pf_target = 0.0013;
};

RbdoProblem short_column_problem(const ShortColumnSpec& spec = {});

/// Problem factory by id ("buckling", "corroded-beam", "short-column") with
/// JSON parameter overrides; unknown override keys are rejected.
RbdoProblem make_problem(const std::string& id, const nlohmann::json& overrides = {});

}  // namespace rbdo
