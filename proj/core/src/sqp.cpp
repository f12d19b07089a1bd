#include "rbdo/sqp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rbdo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double violation(const Eigen::VectorXd& c) {
  return c.size() ? std::max(0.0, c.maxCoeff()) : 0.0;
}

}  // namespace

Eigen::VectorXd solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         Eigen::VectorXd* duals) {
  const Eigen::Index n = q.size(), m = b.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (m == 0) {
    x = Q.llt().solve(-q);
    return x;
  }
  Eigen::VectorXd s = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) s[i] = std::max(1.0, b[i] - A.row(i).dot(x));

  for (int it = 0; it < 80; ++it) {
    const Eigen::VectorXd r_d = Q * x + q + A.transpose() * z;
    const Eigen::VectorXd r_p = A * x + s - b;
    const double mu = s.dot(z) / double(m);
    if (r_d.lpNorm<Eigen::Infinity>() < 1e-10 && r_p.lpNorm<Eigen::Infinity>() < 1e-10 &&
        mu < 1e-11)
      break;
    const double sigma = 0.1;
    // Reduced Newton system: (Q + A' S^-1 Z A) dx = -r_d - A' S^-1 (sigma mu e - SZe + Z r_p)
    Eigen::VectorXd w(m);
    for (Eigen::Index i = 0; i < m; ++i)
      w[i] = (sigma * mu - s[i] * z[i] + z[i] * r_p[i]) / s[i];
    Eigen::MatrixXd k = Q;
    for (Eigen::Index i = 0; i < m; ++i)
      k.noalias() += (z[i] / s[i]) * (A.row(i).transpose() * A.row(i));
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
      k.diagonal().array() += 1e-10 * (1.0 + k.diagonal().maxCoeff());
      llt.compute(k);
    }
    const Eigen::VectorXd dx = llt.solve(-r_d - A.transpose() * w);
    const Eigen::VectorXd ds = -r_p - A * dx;
    Eigen::VectorXd dz(m);
    for (Eigen::Index i = 0; i < m; ++i)
      dz[i] = (sigma * mu - s[i] * z[i] - z[i] * ds[i]) / s[i];
    double step = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (ds[i] < 0.0) step = std::min(step, -0.995 * s[i] / ds[i]);
      if (dz[i] < 0.0) step = std::min(step, -0.995 * z[i] / dz[i]);
    }
    x += step * dx;
    s += step * ds;
    z += step * dz;
  }
  if (duals) *duals = z;
  return x;
}

OptimizationResult sqp_minimize(const ScalarFn& cost, const std::vector<ScalarFn>& constraints,
                                const DesignBox& box, const Eigen::VectorXd& d0,
                                const SqpOptions& options) {
  box.validate();
  if (!box.contains(d0)) throw std::invalid_argument("sqp_minimize: d0 outside the box");
  const int n = box.dims();
  const int m = static_cast<int>(constraints.size());

  OptimizationResult res;
  auto eval_cost = [&](const Eigen::VectorXd& d) {
    ++res.n_cost_evals;
    return cost(d);
  };
  auto eval_cons = [&](const Eigen::VectorXd& d) {
    Eigen::VectorXd c(m);
    for (int i = 0; i < m; ++i) c[i] = constraints[i](d);
    res.n_constraint_evals += m;
    return c;
  };

  const Eigen::VectorXd h = options.fd_rel_step * (box.upper - box.lower);
  // Forward differences, flipped to backward at the upper bound.
  auto gradients = [&](const Eigen::VectorXd& d, double f0, const Eigen::VectorXd& c0,
                       Eigen::VectorXd& gf, Eigen::MatrixXd& gc) {
    gf.resize(n);
    gc.resize(m, n);
    for (int i = 0; i < n; ++i) {
      double hi = h[i];
      if (d[i] + hi > box.upper[i]) hi = -hi;
      Eigen::VectorXd dp = d;
      dp[i] += hi;
      gf[i] = (eval_cost(dp) - f0) / hi;
      const Eigen::VectorXd cp = eval_cons(dp);
      gc.col(i) = (cp - c0) / hi;
    }
  };

  Eigen::VectorXd d = d0;
  double f = eval_cost(d);
  Eigen::VectorXd c = eval_cons(d);
  Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd gf, gf_prev;
  Eigen::MatrixXd gc, gc_prev;
  Eigen::VectorXd mult = Eigen::VectorXd::Zero(m);
  // Per-constraint l1 merit penalties: constraints can differ in scale by
  // orders of magnitude (quantile values vs unit-slope soft constraints), so
  // a shared penalty lets the QP trade violations of the small-scale ones
  // against cost. Initialized from the gradient scales after the first
  // differentiation, escalated whenever a violation is not shrinking.
  Eigen::VectorXd rho = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd rho_cap = Eigen::VectorXd::Ones(m);
  auto weighted_violation = [&](const Eigen::VectorXd& cc) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += rho[i] * std::max(cc[i], 0.0);
    return s;
  };

  double best_feasible_cost = kInf;
  Eigen::VectorXd best_feasible_d;
  Eigen::VectorXd best_feasible_c;
  double least_violation = kInf;
  Eigen::VectorXd least_violation_d = d;
  Eigen::VectorXd least_violation_c = c;
  double least_violation_cost = f;

  auto record = [&](const Eigen::VectorXd& dd, double ff, const Eigen::VectorXd& cc) {
    const double v = violation(cc);
    if (v <= options.constraint_tol && ff < best_feasible_cost) {
      best_feasible_cost = ff;
      best_feasible_d = dd;
      best_feasible_c = cc;
    }
    if (v < least_violation) {
      least_violation = v;
      least_violation_d = dd;
      least_violation_c = cc;
      least_violation_cost = ff;
    }
  };
  record(d, f, c);
  if (options.keep_trace) res.trace.push_back({d, f, c, 0.0});

  bool converged = false;
  int it = 0;
  int stall = 0;
  gradients(d, f, c, gf, gc);
  for (int i = 0; i < m; ++i) {
    rho[i] = 10.0 * (1.0 + gf.lpNorm<Eigen::Infinity>()) /
             (1.0 + gc.row(i).lpNorm<Eigen::Infinity>());
    rho_cap[i] = 1e12 * rho[i];
  }
  for (; it < options.max_iter; ++it) {
    // Elastic QP in variables (p, t): min gf'p + 0.5 p'Hp + rho sum t
    //   s.t. c + gc p <= t, t >= 0, lower - d <= p <= upper - d.
    const int nv = n + m;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(nv, nv);
    Q.topLeftCorner(n, n) = hess;
    Q.bottomRightCorner(m, m).diagonal().setConstant(1e-8);  // keep Q PD
    Eigen::VectorXd q(nv);
    q.head(n) = gf;
    q.tail(m) = rho;
    const int na = 2 * m + 2 * n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(na, nv);
    Eigen::VectorXd b(na);
    for (int i = 0; i < m; ++i) {
      A.row(i).head(n) = gc.row(i);
      A(i, n + i) = -1.0;
      b[i] = -c[i];
      A(m + i, n + i) = -1.0;  // t >= 0
      b[m + i] = 0.0;
    }
    // Box bounds plus a per-iteration cap: far from the iterate the
    // linearization is unreliable, so the QP must not cross the whole box.
    for (int i = 0; i < n; ++i) {
      const double cap = options.max_rel_step * (box.upper[i] - box.lower[i]);
      A(2 * m + i, i) = 1.0;
      b[2 * m + i] = std::min(box.upper[i] - d[i], cap);
      A(2 * m + n + i, i) = -1.0;
      b[2 * m + n + i] = std::min(d[i] - box.lower[i], cap);
    }
    Eigen::VectorXd duals;
    const Eigen::VectorXd sol = solve_qp(Q, q, A, b, &duals);
    const Eigen::VectorXd p = sol.head(n);
    mult = duals.head(m);

    const double merit0 = f + weighted_violation(c);
    // Directional derivative bound for the l1 merit along p.
    const double dmerit = gf.dot(p) - weighted_violation(c);

    double step = 1.0;
    double f_new = f;
    Eigen::VectorXd c_new = c, d_new = d;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd cand = d + step * p;
      for (int i = 0; i < n; ++i) cand[i] = std::clamp(cand[i], box.lower[i], box.upper[i]);
      const double fc = eval_cost(cand);
      const Eigen::VectorXd cc = eval_cons(cand);
      if (std::isfinite(fc) && cc.allFinite() &&
          fc + weighted_violation(cc) <= merit0 + 1e-4 * step * std::min(dmerit, 0.0)) {
        d_new = cand;
        f_new = fc;
        c_new = cc;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No merit decrease along the QP direction: raise the penalties of the
      // violated constraints, drop the possibly stale curvature estimate and,
      // if that has already been tried, give up.
      if (++stall >= 3) break;
      hess = Eigen::MatrixXd::Identity(n, n);
      for (int i = 0; i < m; ++i)
        if (c[i] > options.constraint_tol) rho[i] = std::min(10.0 * rho[i], rho_cap[i]);
      continue;
    }
    stall = 0;
    // Escalate the penalty of any violation that is not clearly shrinking.
    for (int i = 0; i < m; ++i) {
      const double now = std::max(c_new[i], 0.0), before = std::max(c[i], 0.0);
      if (now > options.constraint_tol && now > 0.5 * before)
        rho[i] = std::min(5.0 * rho[i], rho_cap[i]);
    }

    // Damped BFGS on the Lagrangian gradient.
    gf_prev = gf;
    gc_prev = gc;
    const Eigen::VectorXd s_vec = d_new - d;
    const double f_old = f;
    d = d_new;
    f = f_new;
    c = c_new;
    record(d, f, c);
    if (options.keep_trace) res.trace.push_back({d, f, c, step});

    const double rel_df = std::fabs(f - f_old) / (1.0 + std::fabs(f));
    if (rel_df < options.cost_rel_tol && violation(c) <= options.constraint_tol) {
      converged = true;
      ++it;
      break;
    }

    gradients(d, f, c, gf, gc);
    Eigen::VectorXd y = (gf - gf_prev) + (gc - gc_prev).transpose() * mult;
    const Eigen::VectorXd bs = hess * s_vec;
    const double sbs = s_vec.dot(bs);
    double sy = s_vec.dot(y);
    if (sy < 0.2 * sbs && sbs > 0.0) {
      const double theta = 0.8 * sbs / (sbs - sy);
      y = theta * y + (1.0 - theta) * bs;
      sy = s_vec.dot(y);
    }
    if (sy > 1e-14 * s_vec.norm() * y.norm() && sbs > 0.0) {
      hess += y * y.transpose() / sy - bs * bs.transpose() / sbs;
      // Guard against drift from finite-difference noise.
      Eigen::LLT<Eigen::MatrixXd> chk(hess);
      if (chk.info() != Eigen::Success) hess = Eigen::MatrixXd::Identity(n, n);
    }
  }
  // Feasibility restoration: the merit loop can end hovering slightly on the
  // infeasible side (it trades small violations against cost), in which case
  // the best strictly feasible point seen may be far worse than the final
  // iterates. Project the least-violating iterate back across the boundary
  // with Gauss-Newton steps on the violated constraints.
  if (violation(c) > options.constraint_tol &&
      (!best_feasible_d.size() || f < best_feasible_cost)) {
    Eigen::VectorXd dr = d;
    Eigen::VectorXd cr = c;
    for (int k = 0; k < 20 && violation(cr) > options.constraint_tol; ++k) {
      std::vector<int> act;
      for (int i = 0; i < m; ++i)
        if (cr[i] > -options.constraint_tol) act.push_back(i);
      Eigen::MatrixXd J(act.size(), n);
      Eigen::VectorXd rhs(act.size());
      for (size_t a = 0; a < act.size(); ++a) {
        for (int i = 0; i < n; ++i) {
          double hi = h[i];
          if (dr[i] + hi > box.upper[i]) hi = -hi;
          Eigen::VectorXd dp = dr;
          dp[i] += hi;
          J(a, i) = (constraints[act[a]](dp) - cr[act[a]]) / hi;
          res.n_constraint_evals += 1;
        }
        rhs[a] = -(cr[act[a]] + 0.5 * options.constraint_tol);
      }
      Eigen::VectorXd p = J.completeOrthogonalDecomposition().solve(rhs);
      const double cap = 0.05 * (box.upper - box.lower).norm();
      if (p.norm() > cap) p *= cap / p.norm();
      if (!(p.norm() > 0.0)) break;
      Eigen::VectorXd next = dr + p;
      for (int i = 0; i < n; ++i) next[i] = std::clamp(next[i], box.lower[i], box.upper[i]);
      if ((next - dr).norm() == 0.0) break;
      dr = next;
      cr = eval_cons(dr);
      record(dr, eval_cost(dr), cr);
    }
  }

  res.iterations = it;
  res.converged = converged;
  if (best_feasible_d.size()) {
    res.d_star = best_feasible_d;
    res.cost = best_feasible_cost;
    res.constraints = best_feasible_c;
  } else {
    res.d_star = least_violation_d;
    res.cost = least_violation_cost;
    res.constraints = least_violation_c;
    res.converged = false;
  }
  return res;
}

}  // namespace rbdo
