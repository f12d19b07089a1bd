#include "rbdo/benchmarks.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "rbdo/math.hpp"

namespace rbdo {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

nlohmann::json marginal_json(const Marginal& m) {
  return {{"family", family_name(m.family)}, {"mean", m.mean}, {"std_dev", m.std_dev}};
}

nlohmann::json box_json(const DesignBox& b) {
  return {{"lower", std::vector<double>(b.lower.data(), b.lower.data() + b.lower.size())},
          {"upper", std::vector<double>(b.upper.data(), b.upper.data() + b.upper.size())}};
}

DesignBox box_from_json(const nlohmann::json& j) {
  auto lo = j.at("lower").get<std::vector<double>>();
  auto up = j.at("upper").get<std::vector<double>>();
  DesignBox b;
  b.lower = Eigen::Map<Eigen::VectorXd>(lo.data(), lo.size());
  b.upper = Eigen::Map<Eigen::VectorXd>(up.data(), up.size());
  b.validate();
  return b;
}

}  // namespace

RbdoProblem buckling_problem(const BucklingSpec& spec) {
  RbdoProblem p;
  p.id = "buckling";
  p.box = spec.box;
  p.pf_target = spec.pf_target;
  p.cost = [](const Eigen::VectorXd& d) { return d[0] * d[1]; };
  p.soft_constraints.push_back([](const Eigen::VectorXd& d) { return d[1] - d[0]; });
  p.inputs.environmental = {spec.k, spec.e, spec.l};
  const double f_ser = spec.f_ser;
  p.limit_state = [f_ser](const Eigen::VectorXd& d, const Eigen::MatrixXd& env) {
    const double b = d[0], h = d[1];
    Eigen::VectorXd g(env.rows());
    for (Eigen::Index i = 0; i < env.rows(); ++i) {
      const double k = env(i, 0), e = env(i, 1), l = env(i, 2);
      g[i] = k * kPi * kPi * e * b * h * h * h / (12.0 * l * l) - f_ser;
    }
    return g;
  };
  p.params = {{"k", marginal_json(spec.k)},       {"e", marginal_json(spec.e)},
              {"l", marginal_json(spec.l)},       {"f_ser", spec.f_ser},
              {"box", box_json(spec.box)},        {"pf_target", spec.pf_target}};
  return p;
}

Eigen::Vector2d buckling_analytical_optimum(const BucklingSpec& spec, double pf_target) {
  if (!(pf_target > 0.0 && pf_target < 1.0))
    throw std::invalid_argument("buckling_analytical_optimum: pf_target outside (0,1)");
  const double zeta = std::sqrt(spec.k.log_scale * spec.k.log_scale +
                                spec.e.log_scale * spec.e.log_scale +
                                4.0 * spec.l.log_scale * spec.l.log_scale);
  const double b4 = 12.0 * spec.f_ser / (kPi * kPi) *
                    std::exp(2.0 * spec.l.log_location - spec.k.log_location -
                             spec.e.log_location - norm_inv_cdf(pf_target) * zeta);
  const double b = std::pow(b4, 0.25);
  return {b, b};
}

std::string to_string(TimeAggregation a) {
  return a == TimeAggregation::min_over_time ? "min" : "max";
}

TimeAggregation aggregation_from_string(const std::string& s) {
  if (s == "min") return TimeAggregation::min_over_time;
  if (s == "max") return TimeAggregation::max_over_time;
  throw std::invalid_argument("unknown aggregation: " + s);
}

CorrodedBeamSpec default_corroded_beam_spec(int n_kl, int n_time, TimeAggregation agg) {
  if (n_kl > n_time) throw std::invalid_argument("corroded beam: n_kl > n_time");
  CorrodedBeamSpec spec;
  spec.load.mean = 12.0;  // kN
  spec.load.cov = 0.25;
  spec.load.correlation_length = 1.0;  // months
  spec.load.time_grid = Eigen::VectorXd::LinSpaced(n_time, 0.0, 120.0);
  spec.n_kl = n_kl;
  spec.aggregation = agg;
  return spec;
}

RbdoProblem corroded_beam_problem(const CorrodedBeamSpec& spec) {
  RbdoProblem p;
  p.id = "corroded-beam";
  p.box = spec.box;
  p.pf_target = spec.pf_target;
  const double span = spec.span;
  const double rho_mean = spec.rho.mean;
  p.cost = [rho_mean, span](const Eigen::VectorXd& d) { return rho_mean * span * d[0] * d[1]; };
  p.soft_constraints.push_back([](const Eigen::VectorXd& d) { return d[1] - d[0]; });
  p.inputs.environmental = {spec.fy, spec.kappa, spec.rho};
  auto kl = std::make_shared<KlBasis>(kl_expand(spec.load, spec.n_kl));
  p.inputs.kl = kl;
  p.inputs.process_mean = spec.load.mean;

  // Trajectory factor: F = mean + theta * (modes * sqrt(eig))^T, row per draw.
  auto scaled = std::make_shared<Eigen::MatrixXd>(
      spec.load.time_grid.size(), spec.n_kl);
  *scaled = kl->modes * kl->eigenvalues.array().sqrt().matrix().asDiagonal();
  const Eigen::VectorXd grid = spec.load.time_grid;
  const double f_mean = spec.load.mean;
  const bool worst_is_min = spec.aggregation == TimeAggregation::min_over_time;
  p.limit_state = [kl, scaled, grid, f_mean, span, worst_is_min](
                      const Eigen::VectorXd& d, const Eigen::MatrixXd& env) {
    const double b0 = d[0], h0 = d[1];
    const Eigen::Index n = env.rows(), nt = grid.size();
    const Eigen::MatrixXd traj =
        (env.rightCols(scaled->cols()) * scaled->transpose()).array() + f_mean;
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double fy = env(i, 0), kap = env(i, 1), rho = env(i, 2);
      const double dead = rho * b0 * h0 * span * span / 8.0;
      double agg = worst_is_min ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
      for (Eigen::Index t = 0; t < nt; ++t) {
        const double bt = std::max(b0 - 2.0 * kap * grid[t], 0.0);
        const double ht = std::max(h0 - 2.0 * kap * grid[t], 0.0);
        const double gt = bt * ht * ht * fy / 4.0 - (traj(i, t) * span / 4.0 + dead);
        agg = worst_is_min ? std::min(agg, gt) : std::max(agg, gt);
      }
      g[i] = agg;
    }
    return g;
  };
  p.params = {{"fy", marginal_json(spec.fy)},
              {"kappa", marginal_json(spec.kappa)},
              {"rho", marginal_json(spec.rho)},
              {"load", {{"mean", spec.load.mean},
                        {"cov", spec.load.cov},
                        {"correlation_length", spec.load.correlation_length},
                        {"n_time", spec.load.time_grid.size()},
                        {"horizon", spec.load.time_grid[spec.load.time_grid.size() - 1]}}},
              {"n_kl", spec.n_kl},
              {"span", spec.span},
              {"box", box_json(spec.box)},
              {"pf_target", spec.pf_target},
              {"aggregation", to_string(spec.aggregation)}};
  return p;
}

RbdoProblem short_column_problem(const ShortColumnSpec& spec) {
  RbdoProblem p;
  p.id = "short-column";
  p.box = spec.box;
  p.pf_target = spec.pf_target;
  p.cost = [](const Eigen::VectorXd& d) { return d[0] * d[1]; };
  const double cov = spec.dimension_cov;
  p.inputs.n_conditional = 2;
  p.inputs.conditional = [cov](const Eigen::VectorXd& d) {
    return std::vector<Marginal>{
        make_marginal(Family::gaussian, d[0], Dispersion::cov(cov)),
        make_marginal(Family::gaussian, d[1], Dispersion::cov(cov))};
  };
  p.inputs.environmental = {spec.f, spec.m1, spec.m2, spec.sigma_y};
  p.limit_state = [](const Eigen::VectorXd&, const Eigen::MatrixXd& env) {
    Eigen::VectorXd g(env.rows());
    for (Eigen::Index i = 0; i < env.rows(); ++i) {
      const double b = env(i, 0), h = env(i, 1);
      if (b <= 0.0 || h <= 0.0) {
        g[i] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const double f = env(i, 2), m1 = env(i, 3), m2 = env(i, 4), sy = env(i, 5);
      const double axial = f / (b * h * sy);
      g[i] = 1.0 - 4.0 * m1 / (b * h * h * sy) - 4.0 * m2 / (b * b * h * sy) - axial * axial;
    }
    return g;
  };
  p.params = {{"dimension_cov", spec.dimension_cov},
              {"f", marginal_json(spec.f)},
              {"m1", marginal_json(spec.m1)},
              {"m2", marginal_json(spec.m2)},
              {"sigma_y", marginal_json(spec.sigma_y)},
              {"box", box_json(spec.box)},
              {"pf_target", spec.pf_target}};
  return p;
}

RbdoProblem make_problem(const std::string& id, const nlohmann::json& overrides) {
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
      bool ok = false;
      for (const char* k : allowed)
        if (it.key() == k) ok = true;
      if (!ok) throw std::invalid_argument("make_problem: unknown override '" + it.key() + "'");
    }
  };
  if (id == "buckling") {
    check_keys({"pf_target", "box"});
    BucklingSpec spec;
    if (overrides.contains("pf_target")) spec.pf_target = overrides["pf_target"];
    if (overrides.contains("box")) spec.box = box_from_json(overrides["box"]);
    return buckling_problem(spec);
  }
  if (id == "corroded-beam") {
    check_keys({"pf_target", "box", "n_kl", "n_time", "aggregation"});
    const int n_kl = overrides.value("n_kl", 100);
    const int n_time = overrides.value("n_time", 121);
    TimeAggregation agg = aggregation_from_string(overrides.value("aggregation", "min"));
    CorrodedBeamSpec spec = default_corroded_beam_spec(n_kl, n_time, agg);
    if (overrides.contains("pf_target")) spec.pf_target = overrides["pf_target"];
    if (overrides.contains("box")) spec.box = box_from_json(overrides["box"]);
    return corroded_beam_problem(spec);
  }
  if (id == "short-column") {
    check_keys({"pf_target", "box"});
    ShortColumnSpec spec;
    if (overrides.contains("pf_target")) spec.pf_target = overrides["pf_target"];
    if (overrides.contains("box")) spec.box = box_from_json(overrides["box"]);
    return short_column_problem(spec);
  }
  throw std::invalid_argument("make_problem: unknown problem id '" + id + "'");
}

}  // namespace rbdo
