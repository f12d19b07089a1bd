#include "rbdo/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "rbdo/bfgs.hpp"
#include "rbdo/lhs.hpp"

namespace rbdo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt5 = 2.2360679774997896;

double matern52_r(double r) { return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r); }

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& x, const Eigen::VectorXd& ls) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double dist = ((x.row(i) - x.row(j)).transpose().array() / ls.array()).matrix().norm();
      r(i, j) = r(j, i) = matern52_r(dist);
    }
  }
  return r;
}

struct ProfiledFit {
  double nll = kInf;  // 0.5 (n log sigma2 + log|R|), constants dropped
  double trend = 0.0;
  double process_var = 0.0;
  double nugget = 0.0;
  Eigen::MatrixXd chol_lower;
};

ProfiledFit profile_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& ls) {
  ProfiledFit out;
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd r = correlation_matrix(x, ls);
  for (double nug = 1e-12; nug <= 1e-6 * 1.0001; nug *= 100.0) {
    Eigen::MatrixXd rn = r;
    rn.diagonal().array() += nug;
    Eigen::LLT<Eigen::MatrixXd> llt(rn);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd ri_y = llt.solve(y);
    const Eigen::VectorXd ri_1 = llt.solve(ones);
    const double beta = ones.dot(ri_y) / ones.dot(ri_1);
    const Eigen::VectorXd resid = y.array() - beta;
    double sigma2 = resid.dot(llt.solve(resid)) / double(n);
    sigma2 = std::max(sigma2, 1e-300);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(l(i, i));
    out.nll = 0.5 * (double(n) * std::log(sigma2) + log_det);
    out.trend = beta;
    out.process_var = sigma2;
    out.nugget = nug;
    out.chol_lower = l;
    return out;
  }
  return out;  // factorization failed at every nugget level
}

}  // namespace

double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& ls) {
  return matern52_r(((a - b).array() / ls.array()).matrix().norm());
}

double KrigingModel::predict(const Eigen::VectorXd& point) const {
  if (point.size() != x_mean.size())
    throw std::invalid_argument("KrigingModel::predict: dimension mismatch");
  const Eigen::VectorXd xs = ((point - x_mean).array() / x_std.array()).matrix();
  double acc = trend;
  for (Eigen::Index i = 0; i < train_x.rows(); ++i)
    acc += alpha[i] * matern52(xs, train_x.row(i).transpose(), lengthscales);
  return acc;
}

Eigen::VectorXd KrigingModel::predict(const Eigen::MatrixXd& points) const {
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out[i] = predict(Eigen::VectorXd(points.row(i).transpose()));
  return out;
}

KrigingModel fit_kriging(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                         const KrigingFitConfig& config) {
  const Eigen::Index n = inputs.rows(), dim = inputs.cols();
  if (outputs.size() != n) throw std::invalid_argument("fit_kriging: shape mismatch");
  if (n < dim + 2) throw std::invalid_argument("fit_kriging: need at least n_tot + 2 points");
  if (!inputs.allFinite() || !outputs.allFinite())
    throw std::invalid_argument("fit_kriging: non-finite data");

  KrigingModel m;
  m.x_mean = inputs.colwise().mean();
  m.x_std.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double var = (inputs.col(j).array() - m.x_mean[j]).square().sum() / double(n);
    m.x_std[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  m.train_x = (inputs.rowwise() - m.x_mean.transpose()).array().rowwise() /
              m.x_std.transpose().array();
  m.train_y = outputs;

  auto nll_of = [&](const Eigen::VectorXd& log_ls) -> double {
    if (log_ls.array().abs().maxCoeff() > 12.0) return kInf;  // keep exp() sane
    return profile_likelihood(m.train_x, m.train_y, log_ls.array().exp()).nll;
  };

  // Each BFGS iteration costs roughly one FD gradient (dim + 1 evals) plus a
  // short line search; budget the iteration count from the eval cap.
  BfgsOptions opt;
  opt.max_iter = std::max(3, config.max_evals_per_start / (int(dim) + 3));
  opt.rel_tol = 1e-8;

  Rng rng(config.start_seed);
  Eigen::MatrixXd starts = lhs_sample(config.n_starts, int(dim), rng);
  double best_nll = kInf;
  Eigen::VectorXd best_log_ls = Eigen::VectorXd::Zero(dim);
  bool converged = false;
  for (int s = 0; s < config.n_starts; ++s) {
    Eigen::VectorXd x0 =
        (config.log_ls_lower +
         (config.log_ls_upper - config.log_ls_lower) * starts.row(s).transpose().array())
            .matrix();
    if (!std::isfinite(nll_of(x0))) continue;
    BfgsResult r = minimize_bfgs(nll_of, x0, opt);
    if (r.f < best_nll) {
      best_nll = r.f;
      best_log_ls = r.x;
      converged = r.converged;
    }
  }
  if (!std::isfinite(best_nll))
    throw std::runtime_error("fit_kriging: correlation matrix not positive definite");

  m.lengthscales = best_log_ls.array().exp();
  ProfiledFit fit = profile_likelihood(m.train_x, m.train_y, m.lengthscales);
  m.trend = fit.trend;
  m.process_var = fit.process_var;
  m.nugget = fit.nugget;
  m.chol_lower = fit.chol_lower;
  Eigen::VectorXd resid = m.train_y.array() - m.trend;
  m.alpha = m.chol_lower.transpose()
                .triangularView<Eigen::Upper>()
                .solve(m.chol_lower.triangularView<Eigen::Lower>().solve(resid));
  m.diag.log_likelihood =
      -fit.nll - 0.5 * double(n) * (std::log(2.0 * M_PI) + 1.0);
  m.diag.n_starts = config.n_starts;
  m.diag.converged = converged;
  return m;
}

double mc_quantile(const ConditionalSampler& sample, const BatchEvaluator& evaluate,
                   const Eigen::VectorXd& d, int n_mc, double alpha, std::uint64_t crn_seed) {
  if (n_mc < 100) throw std::invalid_argument("mc_quantile: N_MC < 100");
  const int rank = int(std::ceil(alpha * double(n_mc)));
  if (rank < 1) throw std::invalid_argument("mc_quantile: alpha * N_MC < 1");

  Rng rng(crn_seed);
  Eigen::MatrixXd env = sample(d, n_mc, rng);
  Eigen::MatrixXd rows(n_mc, d.size() + env.cols());
  rows.leftCols(d.size()).rowwise() = d.transpose();
  rows.rightCols(env.cols()) = env;
  Eigen::VectorXd g = evaluate(rows);
  if (g.size() != n_mc) throw std::runtime_error("mc_quantile: evaluator size mismatch");

  std::vector<double> v(g.data(), g.data() + n_mc);
  std::nth_element(v.begin(), v.begin() + (rank - 1), v.end());
  return v[rank - 1];
}

nlohmann::json KrigingModel::to_json() const {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  nlohmann::json j;
  j["format"] = "kriging-model";
  j["version"] = 1;
  std::vector<std::vector<double>> x(train_x.rows());
  for (Eigen::Index i = 0; i < train_x.rows(); ++i) {
    x[i].resize(train_x.cols());
    for (Eigen::Index k = 0; k < train_x.cols(); ++k) x[i][k] = train_x(i, k);
  }
  j["train_x"] = x;
  j["train_y"] = vec(train_y);
  j["x_mean"] = vec(x_mean);
  j["x_std"] = vec(x_std);
  j["lengthscales"] = vec(lengthscales);
  j["trend"] = trend;
  j["process_var"] = process_var;
  j["nugget"] = nugget;
  j["diagnostics"] = {{"log_likelihood", diag.log_likelihood},
                      {"n_starts", diag.n_starts},
                      {"converged", diag.converged}};
  return j;
}

KrigingModel KrigingModel::from_json(const nlohmann::json& j) {
  if (j.at("format") != "kriging-model") throw std::invalid_argument("not a kriging-model document");
  auto vec = [](const nlohmann::json& a) {
    auto v = a.get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(v.data(), v.size()));
  };
  KrigingModel m;
  auto x = j.at("train_x").get<std::vector<std::vector<double>>>();
  m.train_x.resize(x.size(), x.empty() ? 0 : x[0].size());
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t k = 0; k < x[i].size(); ++k) m.train_x(i, k) = x[i][k];
  m.train_y = vec(j.at("train_y"));
  m.x_mean = vec(j.at("x_mean"));
  m.x_std = vec(j.at("x_std"));
  m.lengthscales = vec(j.at("lengthscales"));
  m.trend = j.at("trend");
  m.process_var = j.at("process_var");
  m.nugget = j.at("nugget");
  m.diag.log_likelihood = j.at("diagnostics").at("log_likelihood");
  m.diag.n_starts = j.at("diagnostics").at("n_starts");
  m.diag.converged = j.at("diagnostics").at("converged");
  // Rebuild the factorization instead of round-tripping it.
  Eigen::MatrixXd r = correlation_matrix(m.train_x, m.lengthscales);
  r.diagonal().array() += m.nugget;
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("KrigingModel::from_json: stored model not positive definite");
  m.chol_lower = llt.matrixL();
  m.alpha = llt.solve((m.train_y.array() - m.trend).matrix());
  return m;
}

}  // namespace rbdo
