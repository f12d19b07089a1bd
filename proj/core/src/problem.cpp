#include "rbdo/problem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rbdo/lhs.hpp"

namespace rbdo {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Fill one environment row from per-variable uniforms.
void env_row_from_uniforms(const RbdoProblem& p, const std::vector<Marginal>& cond,
                           const double* u, double* out) {
  const auto& in = p.inputs;
  int k = 0;
  for (int j = 0; j < in.n_conditional; ++j, ++k) out[k] = cond[j].quantile(u[k]);
  for (const Marginal& m : in.environmental) {
    out[k] = m.quantile(u[k]);
    ++k;
  }
  for (int j = 0; j < in.n_theta(); ++j, ++k) out[k] = norm_inv_cdf(u[k]);
}

}  // namespace

double RbdoProblem::limit_state_scalar(const Eigen::VectorXd& d, const Eigen::VectorXd& env) const {
  Eigen::MatrixXd row = env.transpose();
  return limit_state(d, row)[0];
}

std::uint64_t RbdoProblem::hash() const {
  const std::string dump = id + "\n" + params.dump();
  return fnv1a(dump.data(), dump.size());
}

Eigen::MatrixXd sample_inputs(const RbdoProblem& p, const Eigen::VectorXd& d, int n, Rng& rng) {
  const int dim = p.inputs.dim();
  std::vector<Marginal> cond;
  if (p.inputs.n_conditional > 0) {
    cond = p.inputs.conditional(d);
    if (static_cast<int>(cond.size()) != p.inputs.n_conditional)
      throw std::logic_error("sample_inputs: conditional marginal count mismatch");
  }
  Eigen::MatrixXd out(n, dim);
  std::vector<double> u(dim), row(dim);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) u[k] = rng.uniform01();
    env_row_from_uniforms(p, cond, u.data(), row.data());
    for (int k = 0; k < dim; ++k) out(i, k) = row[k];
  }
  return out;
}

ExperimentalDesign generate_experimental_design(const RbdoProblem& p, int n_ed,
                                                std::uint64_t seed) {
  if (n_ed < 1) throw std::invalid_argument("generate_experimental_design: N_ED < 1");
  Rng rng(seed);
  const int nd = p.box.dims();
  Eigen::MatrixXd unit = lhs_sample(n_ed, nd, rng);
  Eigen::MatrixXd pts(n_ed, nd);
  for (int i = 0; i < n_ed; ++i)
    pts.row(i) = p.box.from_unit((2.0 * unit.row(i).transpose().array() - 1.0).matrix())
                     .transpose();

  ExperimentalDesign ed;
  ed.seed = seed;
  ed.n_requested = n_ed;
  ed.points.resize(n_ed, nd);
  ed.responses.resize(n_ed);
  ed.raw_draws.resize(n_ed, p.inputs.dim());
  int kept = 0;
  for (int i = 0; i < n_ed; ++i) {
    const Eigen::VectorXd d = pts.row(i).transpose();
    const Eigen::MatrixXd env = sample_inputs(p, d, 1, rng);
    const double y = p.limit_state(d, env)[0];
    if (!std::isfinite(y)) {
      ++ed.n_dropped;
      continue;
    }
    ed.points.row(kept) = d.transpose();
    ed.responses[kept] = y;
    ed.raw_draws.row(kept) = env.row(0);
    ++kept;
  }
  ed.points.conservativeResize(kept, nd);
  ed.responses.conservativeResize(kept);
  ed.raw_draws.conservativeResize(kept, p.inputs.dim());
  return ed;
}

std::string to_string(EmulatorKind k) {
  switch (k) {
    case EmulatorKind::glam: return "glam";
    case EmulatorKind::spce: return "spce";
    case EmulatorKind::kriging: return "kriging";
  }
  throw std::logic_error("bad EmulatorKind");
}

EmulatorKind emulator_kind_from_string(const std::string& s) {
  if (s == "glam") return EmulatorKind::glam;
  if (s == "spce") return EmulatorKind::spce;
  if (s == "kriging") return EmulatorKind::kriging;
  throw std::invalid_argument("unknown emulator kind: " + s);
}

CrnQuantile::CrnQuantile(const RbdoProblem& p, int n_mc, double alpha, std::uint64_t crn_seed)
    : p_(p), alpha_(alpha) {
  if (n_mc < 100) throw std::invalid_argument("CrnQuantile: N_MC < 100");
  if (std::ceil(alpha * double(n_mc)) < 1.0)
    throw std::invalid_argument("CrnQuantile: alpha * N_MC < 1");
  const auto& in = p.inputs;
  const int n_fixed = in.dim() - in.n_conditional;
  Rng rng(crn_seed);
  uniforms_.resize(n_mc, in.n_conditional);
  fixed_env_.resize(n_mc, n_fixed);
  // Draw order matches sample_inputs so the same seed gives the same draws;
  // fixed variables are transformed to physical units once.
  std::vector<double> u(in.dim());
  for (int i = 0; i < n_mc; ++i) {
    for (int k = 0; k < in.dim(); ++k) u[k] = rng.uniform01();
    for (int k = 0; k < in.n_conditional; ++k) uniforms_(i, k) = u[k];
    int k = in.n_conditional, c = 0;
    for (const Marginal& m : in.environmental) fixed_env_(i, c++) = m.quantile(u[k++]);
    for (int j = 0; j < in.n_theta(); ++j) fixed_env_(i, c++) = norm_inv_cdf(u[k++]);
  }
}

double CrnQuantile::operator()(const Eigen::VectorXd& d) const {
  const int n_mc = static_cast<int>(fixed_env_.rows());
  const int nc = p_.inputs.n_conditional;
  Eigen::MatrixXd env(n_mc, nc + fixed_env_.cols());
  if (nc > 0) {
    const std::vector<Marginal> cond = p_.inputs.conditional(d);
    for (int i = 0; i < n_mc; ++i)
      for (int j = 0; j < nc; ++j) env(i, j) = cond[j].quantile(uniforms_(i, j));
  }
  env.rightCols(fixed_env_.cols()) = fixed_env_;
  Eigen::VectorXd g = p_.limit_state(d, env);
  const int rank = static_cast<int>(std::ceil(alpha_ * double(n_mc)));
  std::vector<double> v(g.data(), g.data() + g.size());
  std::nth_element(v.begin(), v.begin() + (rank - 1), v.end());
  return v[rank - 1];
}

ScalarFn build_constraint(const RbdoProblem& p, const FittedEmulator& emulator,
                          ConstraintForm form, int n_mc, std::uint64_t crn_seed) {
  const double alpha = p.pf_target;
  switch (emulator.kind) {
    case EmulatorKind::glam: {
      if (form != ConstraintForm::quantile)
        throw std::invalid_argument("build_constraint: GLaM supports only the quantile form");
      auto m = emulator.glam;
      if (!m) throw std::invalid_argument("build_constraint: missing GLaM model");
      // Feasible <=> pf <= target <=> q_alpha(g) >= 0.
      return [m, alpha](const Eigen::VectorXd& d) {
        return -glam_conditional_quantile(*m, d, alpha);
      };
    }
    case EmulatorKind::spce: {
      if (form != ConstraintForm::failure_probability)
        throw std::invalid_argument("build_constraint: SPCE uses the failure-probability form");
      auto m = emulator.spce;
      if (!m) throw std::invalid_argument("build_constraint: missing SPCE model");
      // Log space: pf spans many orders of magnitude over the box, and in
      // linear space the constraint is flat almost everywhere, which starves
      // the finite-difference linearization.
      const double log_target = std::log(alpha);
      return [m, log_target](const Eigen::VectorXd& d) {
        return std::log(std::max(spce_failure_probability(*m, d), 1e-300)) - log_target;
      };
    }
    case EmulatorKind::kriging: {
      if (form != ConstraintForm::quantile)
        throw std::invalid_argument("build_constraint: Kriging supports only the quantile form");
      auto m = emulator.kriging;
      if (!m) throw std::invalid_argument("build_constraint: missing Kriging model");
      auto sampler = [&p](const Eigen::VectorXd& d, int n, Rng& rng) {
        return sample_inputs(p, d, n, rng);
      };
      auto evaluate = [m](const Eigen::MatrixXd& rows) { return m->predict(rows); };
      return [sampler, evaluate, n_mc, alpha, crn_seed](const Eigen::VectorXd& d) {
        return -mc_quantile(sampler, evaluate, d, n_mc, alpha, crn_seed);
      };
    }
  }
  throw std::logic_error("build_constraint: bad emulator kind");
}

SolveResult solve_rbdo(const RbdoProblem& p, EmulatorKind kind, int n_ed, std::uint64_t seed,
                       const SolveOptions& options) {
  SolveResult out;
  auto t0 = std::chrono::steady_clock::now();
  out.ed = generate_experimental_design(p, n_ed, seed);
  out.ed_seconds = seconds_since(t0);
  if (out.ed.responses.size() < 20)
    throw std::runtime_error("solve_rbdo [stage I]: fewer than 20 usable design points");

  t0 = std::chrono::steady_clock::now();
  out.emulator.kind = kind;
  ConstraintForm form = ConstraintForm::quantile;
  try {
    switch (kind) {
      case EmulatorKind::glam:
        out.emulator.glam = std::make_shared<GlamModel>(
            fit_glam(out.ed.points, out.ed.responses, p.box, options.glam));
        break;
      case EmulatorKind::spce:
        out.emulator.spce = std::make_shared<SpceModel>(
            fit_spce(out.ed.points, out.ed.responses, p.box, options.spce));
        form = ConstraintForm::failure_probability;
        break;
      case EmulatorKind::kriging: {
        Eigen::MatrixXd aug(out.ed.points.rows(), p.box.dims() + p.inputs.dim());
        aug.leftCols(p.box.dims()) = out.ed.points;
        aug.rightCols(p.inputs.dim()) = out.ed.raw_draws;
        out.emulator.kriging = std::make_shared<KrigingModel>(
            fit_kriging(aug, out.ed.responses, options.kriging));
        break;
      }
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("solve_rbdo [stage II]: ") + e.what());
  }
  out.fit_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const std::uint64_t crn_seed = hash_combine(seed, fnv1a("crn", 3));
  ScalarFn prob_constraint = build_constraint(p, out.emulator, form, options.n_mc, crn_seed);
  std::vector<ScalarFn> constraints = p.soft_constraints;
  constraints.push_back(prob_constraint);
  Eigen::VectorXd d0 = options.d0.size() ? options.d0 : ((p.box.lower + p.box.upper) / 2.0).eval();
  try {
    out.opt = sqp_minimize(p.cost, constraints, p.box, d0, options.sqp);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("solve_rbdo [stage III]: ") + e.what());
  }
  out.opt_seconds = seconds_since(t0);
  return out;
}

OptimizationResult reference_double_loop(const RbdoProblem& p, int n_mc, std::uint64_t seed,
                                         const SqpOptions& options) {
  if (double(n_mc) * p.pf_target < 50.0)
    throw std::invalid_argument("reference_double_loop: N_MC * pf_target < 50");
  auto quantile = std::make_shared<CrnQuantile>(p, n_mc, p.pf_target, seed);
  std::vector<ScalarFn> constraints = p.soft_constraints;
  constraints.push_back([quantile](const Eigen::VectorXd& d) { return -(*quantile)(d); });
  // The CRN quantile is an order statistic, so its forward differences are
  // noisy at very small steps; widen them. Flat cost valleys also make a
  // single descent path unreliable, so take the best of a few starts.
  SqpOptions opts = options;
  opts.fd_rel_step = std::max(options.fd_rel_step, 1e-4);
  const Eigen::VectorXd lo = p.box.lower, hi = p.box.upper;
  std::vector<double> fracs = {0.5, 0.25, 0.75};
  OptimizationResult best;
  bool have = false;
  for (double fa : fracs)
    for (double fb : fracs) {
      if ((fa == 0.25 && fb == 0.25) || (fa == 0.75 && fb == 0.75)) continue;
      Eigen::VectorXd d0 = lo + (hi - lo) * 0.0;
      d0[0] = lo[0] + fa * (hi[0] - lo[0]);
      for (Eigen::Index i = 1; i < d0.size(); ++i) d0[i] = lo[i] + fb * (hi[i] - lo[i]);
      OptimizationResult r = sqp_minimize(p.cost, constraints, p.box, d0, opts);
      const bool feasible =
          r.constraints.size() == 0 || r.constraints.maxCoeff() <= opts.constraint_tol;
      if (feasible && (!have || r.cost < best.cost)) { best = r; have = true; }
    }
  if (!have)
    best = sqp_minimize(p.cost, constraints, p.box, ((lo + hi) / 2.0).eval(), opts);
  return best;
}

double relative_cost_error(double cost, double reference_cost) {
  if (reference_cost == 0.0) throw std::invalid_argument("relative_cost_error: zero reference");
  return std::fabs(cost - reference_cost) / std::fabs(reference_cost);
}

}  // namespace rbdo
