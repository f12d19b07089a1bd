#include "rbdo/marginal.hpp"

#include <cmath>

#include "rbdo/math.hpp"

namespace rbdo {

std::string family_name(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::lognormal: return "lognormal";
    case Family::uniform: return "uniform";
    case Family::constant: return "constant";
  }
  return "?";
}

Family family_from_name(const std::string& s) {
  if (s == "gaussian") return Family::gaussian;
  if (s == "lognormal") return Family::lognormal;
  if (s == "uniform") return Family::uniform;
  if (s == "constant") return Family::constant;
  throw std::invalid_argument("unknown marginal family: " + s);
}

double Marginal::quantile(double u) const { return transform_u_to_physical(u, *this); }

Marginal make_marginal(Family family, double mean, Dispersion disp) {
  if (!std::isfinite(mean)) throw std::invalid_argument("make_marginal: non-finite mean");
  Marginal m;
  m.family = family;
  m.mean = mean;
  if (family == Family::constant) return m;

  double sd = disp.is_cov ? disp.value * std::fabs(mean) : disp.value;
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw std::invalid_argument("make_marginal: dispersion must be positive");
  m.std_dev = sd;

  if (family == Family::lognormal) {
    if (!(mean > 0.0))
      throw std::invalid_argument("make_marginal: lognormal requires mean > 0");
    const double delta = sd / mean;
    m.log_scale = std::sqrt(std::log1p(delta * delta));
    m.log_location = std::log(mean) - 0.5 * m.log_scale * m.log_scale;
  }
  return m;
}

Marginal make_constant(double value) { return make_marginal(Family::constant, value, Dispersion::std_dev(0)); }

double transform_u_to_physical(double u, const Marginal& m) {
  if (m.family == Family::constant) return m.mean;
  if (!(u > 0.0 && u < 1.0))
    throw std::domain_error("transform_u_to_physical: u outside (0,1)");
  switch (m.family) {
    case Family::gaussian:
      return m.mean + m.std_dev * norm_inv_cdf(u);
    case Family::lognormal:
      return std::exp(m.log_location + m.log_scale * norm_inv_cdf(u));
    case Family::uniform: {
      const double half = m.std_dev * std::sqrt(3.0);
      return m.mean + half * (2.0 * u - 1.0);
    }
    case Family::constant:
      break;
  }
  return m.mean;
}

}  // namespace rbdo
