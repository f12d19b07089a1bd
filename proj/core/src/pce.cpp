#include "rbdo/pce.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rbdo {

namespace {

double hyperbolic_norm(const std::vector<int>& beta, double q) {
  double s = 0.0;
  for (int b : beta) s += std::pow(static_cast<double>(b), q);
  return std::pow(s, 1.0 / q);
}

void enumerate(int dim, int remaining, std::vector<int>& cur, double q, int p,
               std::vector<std::vector<int>>& out) {
  if (dim == static_cast<int>(cur.size())) {
    if (hyperbolic_norm(cur, q) <= p + 1e-12) out.push_back(cur);
    return;
  }
  for (int b = 0; b <= remaining; ++b) {
    cur[dim] = b;
    enumerate(dim + 1, remaining - b, cur, q, p, out);
  }
  cur[dim] = 0;
}

}  // namespace

MultiIndexSet build_truncation(int n_dims, int max_degree, double q_norm) {
  if (n_dims < 1) throw std::invalid_argument("build_truncation: n_dims >= 1 required");
  if (max_degree < 0) throw std::invalid_argument("build_truncation: max_degree >= 0 required");
  if (!(q_norm > 0.0 && q_norm <= 1.0))
    throw std::invalid_argument("build_truncation: q_norm must be in (0,1]");

  MultiIndexSet set;
  set.n_dims = n_dims;
  set.max_degree = max_degree;
  set.q_norm = q_norm;
  std::vector<int> cur(n_dims, 0);
  enumerate(0, max_degree, cur, q_norm, max_degree, set.indices);
  std::sort(set.indices.begin(), set.indices.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) {
              int ta = 0, tb = 0;
              for (int v : a) ta += v;
              for (int v : b) tb += v;
              if (ta != tb) return ta < tb;
              return a < b;
            });
  return set;
}

double eval_orthonormal(PolyKind kind, int degree, double x) {
  double buf[64];
  if (degree > 62) throw std::invalid_argument("eval_orthonormal: degree too large");
  eval_orthonormal_all(kind, degree, x, buf);
  return buf[degree];
}

void eval_orthonormal_all(PolyKind kind, int max_degree, double x, double* out) {
  out[0] = 1.0;
  if (max_degree == 0) return;
  if (kind == PolyKind::hermite) {
    // Normalized probabilists' Hermite: psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1).
    out[1] = x;
    for (int n = 1; n < max_degree; ++n)
      out[n + 1] = (x * out[n] - std::sqrt(static_cast<double>(n)) * out[n - 1]) /
                   std::sqrt(static_cast<double>(n + 1));
  } else {
    // Legendre orthonormal for the uniform(-1,1) probability measure:
    // psi_n = sqrt(2n+1) P_n(x).
    double pm1 = 1.0, p0 = x;
    out[1] = std::sqrt(3.0) * x;
    for (int n = 1; n < max_degree; ++n) {
      double p1 = ((2.0 * n + 1.0) * x * p0 - n * pm1) / (n + 1.0);
      out[n + 1] = std::sqrt(2.0 * (n + 1) + 1.0) * p1;
      pm1 = p0;
      p0 = p1;
    }
  }
}

Eigen::VectorXd eval_basis(const MultiIndexSet& set, const std::vector<PolyKind>& kinds,
                           const Eigen::VectorXd& point) {
  if (point.size() != set.n_dims || static_cast<int>(kinds.size()) != set.n_dims)
    throw std::invalid_argument("eval_basis: dimension mismatch");
  // Per-dimension tables of univariate values.
  std::vector<std::vector<double>> table(set.n_dims);
  for (int d = 0; d < set.n_dims; ++d) {
    table[d].resize(set.max_degree + 1);
    eval_orthonormal_all(kinds[d], set.max_degree, point[d], table[d].data());
  }
  Eigen::VectorXd psi(set.size());
  for (int k = 0; k < set.size(); ++k) {
    double v = 1.0;
    for (int d = 0; d < set.n_dims; ++d) v *= table[d][set.indices[k][d]];
    psi[k] = v;
  }
  return psi;
}

Eigen::MatrixXd eval_basis_matrix(const MultiIndexSet& set, const std::vector<PolyKind>& kinds,
                                  const Eigen::MatrixXd& points) {
  Eigen::MatrixXd m(points.rows(), set.size());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    m.row(i) = eval_basis(set, kinds, points.row(i).transpose()).transpose();
  return m;
}

QuadratureRule gauss_quadrature(PolyKind kind, int n_points) {
  if (n_points < 1) throw std::invalid_argument("gauss_quadrature: n_points >= 1 required");
  QuadratureRule rule;
  rule.kind = kind;
  if (n_points == 1) {
    rule.nodes = Eigen::VectorXd::Zero(1);
    rule.weights = Eigen::VectorXd::Ones(1);
    return rule;
  }
  // Jacobi matrix of the monic three-term recurrence for the probability measure.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_points, n_points);
  for (int k = 1; k < n_points; ++k) {
    double offdiag;
    if (kind == PolyKind::hermite) {
      offdiag = std::sqrt(static_cast<double>(k));
    } else {
      offdiag = k / std::sqrt(4.0 * k * k - 1.0);
    }
    jacobi(k, k - 1) = offdiag;
    jacobi(k - 1, k) = offdiag;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_quadrature: eigen-solver failure");
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n_points);
  for (int j = 0; j < n_points; ++j) {
    const double v0 = es.eigenvectors()(0, j);
    rule.weights[j] = v0 * v0;  // mu_0 = 1 for a probability measure
  }
  return rule;
}

}  // namespace rbdo
