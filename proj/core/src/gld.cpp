#include "rbdo/gld.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rbdo {

namespace {

constexpr double kShapeEps = 1e-8;   // switch to the log branch
constexpr double kUEdge = 1e-15;     // bracketing edge for unbounded tails
constexpr double kUTol = 1e-12;
constexpr int kMaxIter = 200;

// (u^l - 1)/l with the removable singularity at l = 0.
inline double power_term(double u, double l) {
  if (std::fabs(l) < kShapeEps) return std::log(u);
  return std::expm1(l * std::log(u)) / l;
}

// d/dl of (u^l - 1)/l; series near l = 0 to avoid cancellation.
inline double power_term_dl(double u, double l) {
  const double L = std::log(u);
  if (std::fabs(l) < 1e-4) return L * L * (0.5 + l * L * (1.0 / 3.0 + 0.125 * l * L));
  return (std::exp(l * L) * (l * L - 1.0) + 1.0) / (l * l);
}

}  // namespace

bool GldParams::valid() const {
  return lambda2 > 0.0 && std::isfinite(lambda1) && std::isfinite(lambda2) &&
         std::isfinite(lambda3) && std::isfinite(lambda4);
}

double gld_quantile(const GldParams& p, double u) {
  if (!p.valid()) throw std::invalid_argument("gld_quantile: invalid params");
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("gld_quantile: u outside (0,1)");
  return p.lambda1 + (power_term(u, p.lambda3) - power_term(1.0 - u, p.lambda4)) / p.lambda2;
}

double gld_quantile_density(const GldParams& p, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("gld_quantile_density: u outside (0,1)");
  return (std::pow(u, p.lambda3 - 1.0) + std::pow(1.0 - u, p.lambda4 - 1.0)) / p.lambda2;
}

std::pair<double, double> gld_support(const GldParams& p) {
  const double inf = std::numeric_limits<double>::infinity();
  double lower = p.lambda3 > 0.0 ? p.lambda1 - 1.0 / (p.lambda2 * p.lambda3) : -inf;
  double upper = p.lambda4 > 0.0 ? p.lambda1 + 1.0 / (p.lambda2 * p.lambda4) : inf;
  return {lower, upper};
}

double gld_cdf(const GldParams& p, double y, double u_hint) {
  if (!p.valid()) throw std::invalid_argument("gld_cdf: invalid params");
  const auto [lo, hi] = gld_support(p);
  if (y <= lo) return 0.0;
  if (y >= hi) return 1.0;

  double a = kUEdge, b = 1.0 - kUEdge;
  double fa = gld_quantile(p, a) - y;
  if (fa >= 0.0) return 0.0;  // y below the reachable range at the edge
  double fb = gld_quantile(p, b) - y;
  if (fb <= 0.0) return 1.0;

  double u = (u_hint > a && u_hint < b) ? u_hint : 0.5 * (a + b);
  for (int it = 0; it < kMaxIter; ++it) {
    const double f = gld_quantile(p, u) - y;
    if (f > 0.0) b = u; else a = u;
    if (b - a < kUTol) return 0.5 * (a + b);
    const double df = gld_quantile_density(p, u);
    double step = f / df;
    double next = u - step;
    if (!(next > a && next < b)) next = 0.5 * (a + b);  // bisect when Newton leaves bracket
    if (std::fabs(next - u) < kUTol * 0.5) return next;
    u = next;
  }
  throw std::runtime_error("gld_cdf: root solve did not converge");
}

double gld_pdf(const GldParams& p, double y, double u_hint) {
  const auto [lo, hi] = gld_support(p);
  if (y < lo || y > hi) return 0.0;
  const double u = gld_cdf(p, y, u_hint);
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 1.0 / gld_quantile_density(p, u);
}

double gld_log_pdf(const GldParams& p, double y, double u_hint, double* u_out) {
  const auto [lo, hi] = gld_support(p);
  if (y < lo || y > hi) return -std::numeric_limits<double>::infinity();
  const double u = gld_cdf(p, y, u_hint);
  if (u_out) *u_out = u;
  if (u <= 0.0 || u >= 1.0) return -std::numeric_limits<double>::infinity();
  return -std::log(gld_quantile_density(p, u));
}

double gld_log_pdf_grad(const GldParams& p, double y, double grad[4], double u_hint,
                        double* u_out) {
  grad[0] = grad[1] = grad[2] = grad[3] = 0.0;
  const auto [lo, hi] = gld_support(p);
  if (y < lo || y > hi) return -std::numeric_limits<double>::infinity();
  const double u = gld_cdf(p, y, u_hint);
  if (u_out) *u_out = u;
  if (u <= 0.0 || u >= 1.0) return -std::numeric_limits<double>::infinity();

  const double v = 1.0 - u;
  const double a = std::pow(u, p.lambda3 - 1.0);   // u^(l3-1)
  const double b = std::pow(v, p.lambda4 - 1.0);   // (1-u)^(l4-1)
  const double t = a + b;                          // lambda2 * Q'(u)
  const double tp = (p.lambda3 - 1.0) * a / u - (p.lambda4 - 1.0) * b / v;  // dt/du
  const double s = p.lambda2 * (y - p.lambda1);    // S(u; l3, l4)
  const double r = tp / (t * t);
  // lp = log(lambda2) - log t(u), with u implicit from l1 + S(u)/l2 = y.
  grad[0] = p.lambda2 * r;
  grad[1] = 1.0 - r * s;
  grad[2] = r * power_term_dl(u, p.lambda3) - a * std::log(u) / t;
  grad[3] = -r * power_term_dl(v, p.lambda4) - b * std::log(v) / t;
  return std::log(p.lambda2) - std::log(t);
}

}  // namespace rbdo
