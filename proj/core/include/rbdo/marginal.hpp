#pragma once

#include <stdexcept>
#include <string>

namespace rbdo {

enum class Family { gaussian, lognormal, uniform, constant };

std::string family_name(Family f);
Family family_from_name(const std::string& s);

/// One-dimensional input marginal described by its mean and dispersion.
/// For the lognormal family the native (location, scale) parameters
/// zeta = sqrt(ln(1+cov^2)), lambda = ln(mean) - zeta^2/2 are derived at
/// construction. Uniform is parameterized by mean and standard deviation
/// (half-width = std * sqrt(3)).
struct Marginal {
  Family family = Family::constant;
  double mean = 0.0;
  double std_dev = 0.0;

  // Lognormal native parameters (valid when family == lognormal).
  double log_location = 0.0;  // lambda
  double log_scale = 0.0;     // zeta

  double cov() const { return mean != 0.0 ? std_dev / mean : 0.0; }

  /// Inverse CDF at u in (0,1). Strictly increasing for non-constant families.
  double quantile(double u) const;
};

struct Dispersion {
  static Dispersion cov(double v) { return {v, true}; }
  static Dispersion std_dev(double v) { return {v, false}; }
  double value;
  bool is_cov;
};

/// Build a marginal; throws std::invalid_argument on invalid dispersion or
/// a non-positive lognormal mean.
Marginal make_marginal(Family family, double mean, Dispersion disp);
Marginal make_constant(double value);

/// Inverse-CDF transform of a uniform(0,1) value to physical units.
double transform_u_to_physical(double u, const Marginal& m);

}  // namespace rbdo
