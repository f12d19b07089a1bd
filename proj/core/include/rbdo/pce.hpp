#pragma once

#include <Eigen/Core>
#include <vector>

namespace rbdo {

enum class PolyKind { hermite, legendre };

/// Hyperbolically truncated multi-index set. Indices are sorted by
/// (total degree, lexicographic); the zero index comes first.
struct MultiIndexSet {
  int n_dims = 0;
  int max_degree = 0;
  double q_norm = 1.0;
  std::vector<std::vector<int>> indices;

  int size() const { return static_cast<int>(indices.size()); }
};

/// All multi-indices with (sum_i beta_i^q)^(1/q) <= max_degree (+1e-12).
MultiIndexSet build_truncation(int n_dims, int max_degree, double q_norm);

/// Orthonormal univariate polynomial value: probabilists' Hermite for
/// standard-normal inputs, Legendre normalized against uniform(-1,1).
/// Three-term recurrence throughout.
double eval_orthonormal(PolyKind kind, int degree, double x);

/// Values of all orthonormal polynomials of degree 0..max_degree at x.
void eval_orthonormal_all(PolyKind kind, int max_degree, double x, double* out);

/// psi_beta(point) for every beta in the set; kinds has one entry per dim.
Eigen::VectorXd eval_basis(const MultiIndexSet& set, const std::vector<PolyKind>& kinds,
                           const Eigen::VectorXd& point);

/// Regression/design matrix: rows = points, columns = basis functions.
Eigen::MatrixXd eval_basis_matrix(const MultiIndexSet& set, const std::vector<PolyKind>& kinds,
                                  const Eigen::MatrixXd& points);

/// Gaussian quadrature for the probability measure (Golub-Welsch):
/// weights sum to one; degree 2*N_Q-1 exactness.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  PolyKind kind = PolyKind::hermite;
};

QuadratureRule gauss_quadrature(PolyKind kind, int n_points);

}  // namespace rbdo
