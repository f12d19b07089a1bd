#pragma once

#include <utility>

namespace rbdo {

/// Generalized lambda distribution, FKML parameterization.
/// lambda1 location, lambda2 > 0 scale (reciprocal response units),
/// lambda3 / lambda4 shape.
struct GldParams {
  double lambda1 = 0.0;
  double lambda2 = 1.0;
  double lambda3 = 0.0;
  double lambda4 = 0.0;

  bool valid() const;
};

/// Q(u) = l1 + (1/l2) [ (u^l3 - 1)/l3 - ((1-u)^l4 - 1)/l4 ],
/// with the log branch for |l3| or |l4| < 1e-8.
double gld_quantile(const GldParams& p, double u);

/// Q'(u) = (1/l2) (u^(l3-1) + (1-u)^(l4-1)) > 0.
double gld_quantile_density(const GldParams& p, double u);

/// Support bounds: finite on the side whose shape parameter is positive.
std::pair<double, double> gld_support(const GldParams& p);

/// CDF by safeguarded monotone root solve of Q(u) = y (tolerance 1e-12 in u,
/// max 200 iterations); clamps to 0/1 outside the support.
/// u_hint, when in (0,1), warm-starts the solve.
double gld_cdf(const GldParams& p, double y, double u_hint = -1.0);

/// pdf(y) = 1 / Q'(cdf(y)) inside the support, 0 outside.
double gld_pdf(const GldParams& p, double y, double u_hint = -1.0);

/// log pdf; -inf outside the support. Cheaper companion for likelihoods;
/// writes the solved u back through u_out when non-null.
double gld_log_pdf(const GldParams& p, double y, double u_hint = -1.0, double* u_out = nullptr);

/// log pdf together with its gradient with respect to
/// (lambda1, log lambda2, lambda3, lambda4), by implicit differentiation of
/// Q(u) = y. Outside the support returns -inf with a zero gradient.
double gld_log_pdf_grad(const GldParams& p, double y, double grad[4], double u_hint = -1.0,
                        double* u_out = nullptr);

}  // namespace rbdo
