#include "rbdo/spce.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "rbdo/bfgs.hpp"

namespace rbdo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<PolyKind> spce_kinds(int n_design) {
  std::vector<PolyKind> kinds(n_design, PolyKind::legendre);
  kinds.push_back(PolyKind::hermite);
  return kinds;
}

int latent_degree(const MultiIndexSet& set, int k) { return set.indices[k].back(); }

int max_latent_degree(const MultiIndexSet& set) {
  int m = 0;
  for (int k = 0; k < set.size(); ++k) m = std::max(m, latent_degree(set, k));
  return m;
}

/// Design-factor matrix: product of the design-dimension univariate values
/// only (the latent factor is split off for fast quadrature sums).
Eigen::MatrixXd design_factor_matrix(const MultiIndexSet& set, const Eigen::MatrixXd& unit_pts) {
  const int n_design = set.n_dims - 1;
  Eigen::MatrixXd a(unit_pts.rows(), set.size());
  std::vector<std::vector<double>> table(n_design);
  for (Eigen::Index i = 0; i < unit_pts.rows(); ++i) {
    for (int d = 0; d < n_design; ++d) {
      table[d].resize(set.max_degree + 1);
      eval_orthonormal_all(PolyKind::legendre, set.max_degree, unit_pts(i, d), table[d].data());
    }
    for (int k = 0; k < set.size(); ++k) {
      double v = 1.0;
      for (int d = 0; d < n_design; ++d) v *= table[d][set.indices[k][d]];
      a(i, k) = v;
    }
  }
  return a;
}

/// Hermite values at the quadrature nodes, one column per latent degree.
Eigen::MatrixXd latent_node_matrix(const QuadratureRule& quad, int max_lat_deg) {
  Eigen::MatrixXd b(quad.nodes.size(), max_lat_deg + 1);
  std::vector<double> buf(max_lat_deg + 1);
  for (Eigen::Index j = 0; j < quad.nodes.size(); ++j) {
    eval_orthonormal_all(PolyKind::hermite, max_lat_deg, quad.nodes[j], buf.data());
    for (int l = 0; l <= max_lat_deg; ++l) b(j, l) = buf[l];
  }
  return b;
}

/// Negative log-likelihood and analytic gradient of the SPCE coefficients at
/// fixed sigma, all in standardized response space.
class SpceNll {
 public:
  SpceNll(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b_nodes,
          const std::vector<int>& lat_deg, const Eigen::VectorXd& w,
          const Eigen::VectorXd& y, double sigma)
      : a_(a), b_(b_nodes), lat_(lat_deg), w_(w), y_(y), sigma_(sigma) {}

  double value(const Eigen::VectorXd& c) const {
    const Eigen::MatrixXd& m = cached_node_values(c);
    double nll = 0.0;
    const double inv_s = 1.0 / sigma_;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      double f = 0.0;
      for (Eigen::Index j = 0; j < w_.size(); ++j) {
        const double r = (y_[i] - m(i, j)) * inv_s;
        f += w_[j] * std::exp(-0.5 * r * r);
      }
      f *= inv_s * 0.39894228040143267794;
      nll -= std::log(std::max(f, 1e-300));
    }
    return nll;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& c) const {
    const Eigen::Index n = y_.size(), nq = w_.size();
    const int nlat = static_cast<int>(b_.cols());
    const Eigen::MatrixXd& m = cached_node_values(c);
    const double inv_s = 1.0 / sigma_;
    // u(i, l) = sum_j W'_ij * b(j, l), W'_ij = w_j phi(r_ij) r_ij / (sigma^2 f_i)
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, nlat);
    Eigen::VectorXd wrow(nq);
    for (Eigen::Index i = 0; i < n; ++i) {
      double f = 0.0;
      for (Eigen::Index j = 0; j < nq; ++j) {
        const double r = (y_[i] - m(i, j)) * inv_s;
        const double phi = w_[j] * std::exp(-0.5 * r * r);
        f += phi;
        wrow[j] = phi * r;
      }
      const double denom = std::max(f, 1e-300) * sigma_;
      u.row(i) = (wrow.transpose() * b_) / denom;
    }
    Eigen::VectorXd g(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k)
      g[k] = -a_.col(k).dot(u.col(lat_[k]));
    return g;
  }

  /// m(i, j) = PCE value at training point i and quadrature node j; the
  /// optimizer evaluates value and gradient at the same point back to back,
  /// so the last result is kept.
  const Eigen::MatrixXd& cached_node_values(const Eigen::VectorXd& c) const {
    if (cache_c_.size() == c.size() && (cache_c_.array() == c.array()).all()) return cache_m_;
    const int nlat = static_cast<int>(b_.cols());
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(y_.size(), nlat);
    for (Eigen::Index k = 0; k < c.size(); ++k)
      if (c[k] != 0.0) v.col(lat_[k]) += c[k] * a_.col(k);
    cache_m_ = v * b_.transpose();
    cache_c_ = c;
    return cache_m_;
  }

 private:
  mutable Eigen::VectorXd cache_c_;
  mutable Eigen::MatrixXd cache_m_;
  const Eigen::MatrixXd& a_;
  const Eigen::MatrixXd& b_;
  const std::vector<int>& lat_;
  const Eigen::VectorXd& w_;
  const Eigen::VectorXd& y_;
  double sigma_;
};

double fit_coefs(const SpceNll& nll, Eigen::VectorXd& c, int max_iter) {
  BfgsOptions opt;
  opt.max_iter = max_iter;
  opt.rel_tol = 1e-9;
  auto r = minimize_bfgs([&](const Eigen::VectorXd& x) { return nll.value(x); }, c, opt,
                         [&](const Eigen::VectorXd& x) { return nll.gradient(x); });
  c = r.x;
  return -r.f;  // log-likelihood
}

}  // namespace

Eigen::VectorXd SpceModel::pce_at_nodes(const Eigen::VectorXd& d) const {
  const int n_design = box.dims();
  const Eigen::VectorXd u = box.to_unit(d);
  std::vector<std::vector<double>> table(n_design);
  for (int i = 0; i < n_design; ++i) {
    table[i].resize(set.max_degree + 1);
    eval_orthonormal_all(PolyKind::legendre, set.max_degree, u[i], table[i].data());
  }
  const int nlat = max_latent_degree(set);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(nlat + 1);
  for (int k = 0; k < set.size(); ++k) {
    double a = coefs[k];
    for (int i = 0; i < n_design; ++i) a *= table[i][set.indices[k][i]];
    v[set.indices[k].back()] += a;
  }
  Eigen::MatrixXd b = latent_node_matrix(quad, nlat);
  return b * v;
}

double SpceModel::pce_value(const Eigen::VectorXd& d, double xi) const {
  Eigen::VectorXd point(set.n_dims);
  point.head(box.dims()) = box.to_unit(d);
  point[set.n_dims - 1] = xi;
  return eval_basis(set, spce_kinds(box.dims()), point).dot(coefs);
}

SpceModel fit_spce(const Eigen::MatrixXd& design_points, const Eigen::VectorXd& responses,
                   const DesignBox& box, const SpceFitConfig& config) {
  box.validate();
  const Eigen::Index n = responses.size();
  if (n < 20) throw std::invalid_argument("fit_spce: need at least 20 points");
  if (design_points.rows() != n || design_points.cols() != box.dims())
    throw std::invalid_argument("fit_spce: shape mismatch");
  if (!responses.allFinite()) throw std::invalid_argument("fit_spce: non-finite responses");

  const double y_mean = responses.mean();
  double y_std = std::sqrt((responses.array() - y_mean).square().sum() / n);
  if (!(y_std > 0.0)) y_std = 1.0;  // degenerate data: fit a constant + sigma floor
  const Eigen::VectorXd ys = (responses.array() - y_mean) / y_std;

  const int n_design = box.dims();
  const Eigen::MatrixXd unit_pts = box.to_unit_rows(design_points);
  const QuadratureRule quad = gauss_quadrature(PolyKind::hermite, config.n_quad);
  const QuadratureRule quad_cv = gauss_quadrature(PolyKind::hermite, config.n_quad_cv);

  struct Best {
    double cv = -kInf;
    Eigen::VectorXd coefs;
    double sigma = 0.1;
    MultiIndexSet set;
    double ll = -kInf;
    bool sigma_clamped = false;
  } best;

  for (double q : config.q_norms) {
    double prev_cv = -kInf;
    int worse = 0;
    for (int deg = 1; deg <= config.max_degree; ++deg) {
      MultiIndexSet set = build_truncation(n_design + 1, deg, q);
      if (set.size() >= n) break;
      const int nlat = max_latent_degree(set);
      std::vector<int> lat(set.size());
      for (int k = 0; k < set.size(); ++k) lat[k] = latent_degree(set, k);
      Eigen::MatrixXd a = design_factor_matrix(set, unit_pts);
      Eigen::MatrixXd b_nodes = latent_node_matrix(quad, nlat);
      Eigen::MatrixXd b_nodes_cv = latent_node_matrix(quad_cv, nlat);

      // Least-squares start on the design-only columns; the pure-linear
      // latent coefficient starts at the residual std.
      std::vector<int> det_cols;
      for (int k = 0; k < set.size(); ++k)
        if (lat[k] == 0) det_cols.push_back(k);
      Eigen::MatrixXd a_det(n, det_cols.size());
      for (size_t k = 0; k < det_cols.size(); ++k) a_det.col(k) = a.col(det_cols[k]);
      Eigen::VectorXd c_det = a_det.colPivHouseholderQr().solve(ys);
      Eigen::VectorXd c0 = Eigen::VectorXd::Zero(set.size());
      for (size_t k = 0; k < det_cols.size(); ++k) c0[det_cols[k]] = c_det[k];
      const double resid_std =
          std::sqrt((ys - a_det * c_det).squaredNorm() / std::max<Eigen::Index>(n - 1, 1));
      for (int k = 0; k < set.size(); ++k) {
        bool pure_linear_latent = lat[k] == 1;
        for (int d = 0; d < n_design && pure_linear_latent; ++d)
          if (set.indices[k][d] != 0) pure_linear_latent = false;
        if (pure_linear_latent) c0[k] = std::max(resid_std, 1e-6);
      }

      // 5-fold split by index stride; LHS rows carry no ordering.
      std::vector<std::vector<int>> fold_idx(config.cv_folds);
      for (Eigen::Index i = 0; i < n; ++i) fold_idx[i % config.cv_folds].push_back(int(i));

      struct FoldData {
        Eigen::MatrixXd a_tr, a_va;
        Eigen::VectorXd y_tr, y_va;
        Eigen::VectorXd c;
      };
      std::vector<FoldData> folds(config.cv_folds);
      for (int f = 0; f < config.cv_folds; ++f) {
        std::vector<int> tr, va = fold_idx[f];
        for (int g = 0; g < config.cv_folds; ++g)
          if (g != f) tr.insert(tr.end(), fold_idx[g].begin(), fold_idx[g].end());
        auto& fd = folds[f];
        fd.a_tr.resize(tr.size(), set.size());
        fd.y_tr.resize(tr.size());
        for (size_t i = 0; i < tr.size(); ++i) {
          fd.a_tr.row(i) = a.row(tr[i]);
          fd.y_tr[i] = ys[tr[i]];
        }
        fd.a_va.resize(va.size(), set.size());
        fd.y_va.resize(va.size());
        for (size_t i = 0; i < va.size(); ++i) {
          fd.a_va.row(i) = a.row(va[i]);
          fd.y_va[i] = ys[va[i]];
        }
        fd.c = c0;
      }

      // Descending sigma path: the MLE in the coefficients is non-convex, so
      // each sigma is fitted warm-started from the previous (larger) one --
      // continuation from the smooth high-noise problem keeps the folds on a
      // consistent branch. CV likelihood picks the stop.
      const double sig_hi = std::min(1.5, 2.0 * std::max(resid_std, 1e-3));
      const double sig_lo = std::max(sig_hi / 200.0, 1e-6);
      std::vector<double> sig_path(config.n_sigma);
      for (int s = 0; s < config.n_sigma; ++s)
        sig_path[s] = sig_hi * std::pow(sig_lo / sig_hi, double(s) / (config.n_sigma - 1));

      double cand_cv = -kInf, cand_sig = sig_hi;
      int sig_worse = 0, n_path = 0;
      for (double sig : sig_path) {
        double score = 0.0;
        for (auto& fd : folds) {
          SpceNll nll_tr(fd.a_tr, b_nodes_cv, lat, quad_cv.weights, fd.y_tr, sig);
          fit_coefs(nll_tr, fd.c, n_path == 0 ? config.bfgs_max_iter : config.bfgs_warm_iter);
          SpceNll nll_va(fd.a_va, b_nodes_cv, lat, quad_cv.weights, fd.y_va, sig);
          score -= nll_va.value(fd.c);
        }
        ++n_path;
        if (score > cand_cv) {
          cand_cv = score;
          cand_sig = sig;
          sig_worse = 0;
        } else if (++sig_worse >= 3) {
          break;
        }
      }

      if (cand_cv > best.cv) {
        // Full-data refit walking the same path down to the selected sigma.
        Eigen::VectorXd c = c0;
        double ll = -kInf;
        for (int s = 0; s < n_path; ++s) {
          SpceNll nll_full(a, b_nodes, lat, quad.weights, ys, sig_path[s]);
          ll = fit_coefs(nll_full, c,
                         s == 0 ? config.bfgs_max_iter : config.bfgs_warm_iter);
          if (sig_path[s] == cand_sig) break;
        }
        best = {cand_cv, c, cand_sig, set, ll, cand_sig <= 1e-6};
      }
      worse = cand_cv < prev_cv ? worse + 1 : 0;
      prev_cv = cand_cv;
      if (worse >= 2) break;
    }
  }
  if (!std::isfinite(best.cv)) throw std::runtime_error("fit_spce: no candidate structure fit");

  SpceModel model;
  model.box = box;
  model.set = best.set;
  model.n_quad = config.n_quad;
  model.quad = quad;
  // Back to physical units.
  model.coefs = best.coefs * y_std;
  model.coefs[0] += y_mean;  // index 0 is the constant (sorted first)
  model.sigma = std::max(best.sigma * y_std, 1e-300);
  model.diag.log_likelihood = best.ll - double(n) * std::log(y_std);
  model.diag.cv_score = best.cv;
  model.diag.degree = best.set.max_degree;
  model.diag.q_norm = best.set.q_norm;
  model.diag.sigma_clamped = best.sigma_clamped;
  double lat_mag = 0.0;
  for (int k = 0; k < best.set.size(); ++k)
    if (latent_degree(best.set, k) > 0) lat_mag = std::max(lat_mag, std::fabs(model.coefs[k]));
  model.diag.latent_active = lat_mag > 1e-10 * (1.0 + std::fabs(y_mean) + y_std);
  return model;
}

double spce_conditional_pdf(const SpceModel& m, const Eigen::VectorXd& d, double y) {
  if (!m.box.contains(d)) throw std::domain_error("spce_conditional_pdf: design outside domain");
  const Eigen::VectorXd mv = m.pce_at_nodes(d);
  const double inv_s = 1.0 / m.sigma;
  double f = 0.0;
  for (Eigen::Index j = 0; j < mv.size(); ++j) {
    const double r = (y - mv[j]) * inv_s;
    f += m.quad.weights[j] * std::exp(-0.5 * r * r);
  }
  return f * inv_s * 0.39894228040143267794;
}

namespace {
double cdf_from_nodes(const SpceModel& m, const Eigen::VectorXd& mv, double y) {
  double f = 0.0;
  for (Eigen::Index j = 0; j < mv.size(); ++j)
    f += m.quad.weights[j] * norm_cdf((y - mv[j]) / m.sigma);
  return f;
}
}  // namespace

double spce_conditional_cdf(const SpceModel& m, const Eigen::VectorXd& d, double y) {
  if (!m.box.contains(d)) throw std::domain_error("spce_conditional_cdf: design outside domain");
  return cdf_from_nodes(m, m.pce_at_nodes(d), y);
}

double spce_failure_probability(const SpceModel& m, const Eigen::VectorXd& d) {
  return spce_conditional_cdf(m, d, 0.0);
}

double spce_conditional_quantile(const SpceModel& m, const Eigen::VectorXd& d, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("spce_conditional_quantile: alpha outside (0,1)");
  if (!m.box.contains(d))
    throw std::domain_error("spce_conditional_quantile: design outside domain");
  const Eigen::VectorXd mv = m.pce_at_nodes(d);
  double lo = mv.minCoeff() - 10.0 * m.sigma;
  double hi = mv.maxCoeff() + 10.0 * m.sigma;
  // Bisection to 1e-3 sigma, then Newton with the analytic pdf.
  while (hi - lo > 1e-3 * m.sigma) {
    const double mid = 0.5 * (lo + hi);
    (cdf_from_nodes(m, mv, mid) < alpha ? lo : hi) = mid;
  }
  double y = 0.5 * (lo + hi);
  const double inv_s = 1.0 / m.sigma;
  for (int it = 0; it < 200; ++it) {
    const double err = cdf_from_nodes(m, mv, y) - alpha;
    if (std::fabs(err) <= 1e-10) return y;
    double pdf = 0.0;
    for (Eigen::Index j = 0; j < mv.size(); ++j) {
      const double r = (y - mv[j]) * inv_s;
      pdf += m.quad.weights[j] * std::exp(-0.5 * r * r);
    }
    pdf *= inv_s * 0.39894228040143267794;
    if (!(pdf > 0.0)) break;
    const double step = err / pdf;
    y -= std::clamp(step, -(hi - lo), hi - lo);
  }
  if (std::fabs(cdf_from_nodes(m, mv, y) - alpha) > 1e-10)
    throw std::runtime_error("spce_conditional_quantile: inversion did not converge");
  return y;
}

Eigen::VectorXd spce_sample(const SpceModel& m, const Eigen::VectorXd& d, int n, Rng& rng) {
  if (!m.box.contains(d)) throw std::domain_error("spce_sample: design outside domain");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const double xi = rng.normal();
    const double eps = m.sigma * rng.normal();
    out[i] = m.pce_value(d, xi) + eps;
  }
  return out;
}

nlohmann::json SpceModel::to_json() const {
  nlohmann::json j;
  j["format"] = "spce-model";
  j["version"] = 1;
  j["box"] = {{"lower", std::vector<double>(box.lower.data(), box.lower.data() + box.dims())},
              {"upper", std::vector<double>(box.upper.data(), box.upper.data() + box.dims())}};
  j["set"] = {{"n_dims", set.n_dims}, {"max_degree", set.max_degree}, {"q_norm", set.q_norm},
              {"indices", set.indices}};
  j["coefs"] = std::vector<double>(coefs.data(), coefs.data() + coefs.size());
  j["sigma"] = sigma;
  j["n_quad"] = n_quad;
  j["diagnostics"] = {{"log_likelihood", diag.log_likelihood}, {"cv_score", diag.cv_score},
                      {"degree", diag.degree},                 {"q_norm", diag.q_norm},
                      {"latent_active", diag.latent_active},   {"sigma_clamped", diag.sigma_clamped}};
  return j;
}

SpceModel SpceModel::from_json(const nlohmann::json& j) {
  if (j.at("format") != "spce-model") throw std::invalid_argument("not an spce-model document");
  SpceModel m;
  auto lo = j.at("box").at("lower").get<std::vector<double>>();
  auto up = j.at("box").at("upper").get<std::vector<double>>();
  m.box.lower = Eigen::Map<Eigen::VectorXd>(lo.data(), lo.size());
  m.box.upper = Eigen::Map<Eigen::VectorXd>(up.data(), up.size());
  m.set.n_dims = j.at("set").at("n_dims");
  m.set.max_degree = j.at("set").at("max_degree");
  m.set.q_norm = j.at("set").at("q_norm");
  m.set.indices = j.at("set").at("indices").get<std::vector<std::vector<int>>>();
  auto c = j.at("coefs").get<std::vector<double>>();
  m.coefs = Eigen::Map<Eigen::VectorXd>(c.data(), c.size());
  m.sigma = j.at("sigma");
  m.n_quad = j.at("n_quad");
  m.quad = gauss_quadrature(PolyKind::hermite, m.n_quad);
  const auto& dg = j.at("diagnostics");
  m.diag.log_likelihood = dg.at("log_likelihood");
  m.diag.cv_score = dg.at("cv_score");
  m.diag.degree = dg.at("degree");
  m.diag.q_norm = dg.at("q_norm");
  m.diag.latent_active = dg.at("latent_active");
  m.diag.sigma_clamped = dg.at("sigma_clamped");
  return m;
}

}  // namespace rbdo
