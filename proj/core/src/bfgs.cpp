#include "rbdo/bfgs.hpp"

#include <cmath>
#include <limits>

namespace rbdo {

namespace {

bool usable(double v) { return std::isfinite(v); }

Eigen::VectorXd fd_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x, double f0,
                            double h0, int& evals) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = h0 * (1.0 + std::fabs(x[i]));
    xp[i] = x[i] + h;
    double fp = f(xp);
    ++evals;
    if (!usable(fp)) {  // step into an infeasible region: try backward
      xp[i] = x[i] - h;
      fp = f(xp);
      ++evals;
      g[i] = usable(fp) ? (f0 - fp) / h : 0.0;
    } else {
      g[i] = (fp - f0) / h;
    }
    xp[i] = x[i];
  }
  return g;
}

}  // namespace

BfgsResult minimize_bfgs(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& opts, const GradientFn& grad) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = x0;
  res.f = f(x0);
  res.n_evals = 1;
  if (!usable(res.f)) return res;  // infeasible start; caller's problem

  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = grad ? grad(res.x) : fd_gradient(f, res.x, res.f, opts.fd_step, res.n_evals);

  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it + 1;
    if (g.norm() < opts.grad_tol * (1.0 + std::fabs(res.f))) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd p = -(hinv * g);
    double gTp = g.dot(p);
    if (!(gTp < 0.0)) {  // reset on a non-descent direction
      hinv.setIdentity();
      p = -g;
      gTp = g.dot(p);
      if (!(gTp < 0.0)) break;
    }

    // Armijo backtracking.
    double alpha = 1.0;
    double fnew = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd xnew;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xnew = res.x + alpha * p;
      fnew = f(xnew);
      ++res.n_evals;
      if (usable(fnew) && fnew <= res.f + 1e-4 * alpha * gTp) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // no progress possible along a descent direction
      break;
    }

    Eigen::VectorXd gnew =
        grad ? grad(xnew) : fd_gradient(f, xnew, fnew, opts.fd_step, res.n_evals);
    const Eigen::VectorXd s = xnew - res.x;
    const Eigen::VectorXd y = gnew - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      Eigen::MatrixXd vmat = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      hinv = vmat * hinv * vmat.transpose() + rho * s * s.transpose();
    }

    const double decrease = res.f - fnew;
    res.x = xnew;
    res.f = fnew;
    g = gnew;
    if (decrease < opts.rel_tol * (1.0 + std::fabs(res.f))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace rbdo
