#include "rbdo/kl.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace rbdo {

KlBasis kl_expand(const ProcessSpec& spec, int n_modes) {
  const int n = static_cast<int>(spec.time_grid.size());
  if (n < 2) throw std::invalid_argument("kl_expand: time grid too small");
  if (n_modes < 1 || n_modes > n)
    throw std::invalid_argument("kl_expand: n_modes must be in [1, grid size]");
  if (!(spec.correlation_length > 0.0))
    throw std::invalid_argument("kl_expand: correlation length must be > 0");
  for (int i = 1; i < n; ++i)
    if (!(spec.time_grid[i] > spec.time_grid[i - 1]))
      throw std::invalid_argument("kl_expand: time grid must be strictly increasing");

  const double sigma2 = spec.std_dev() * spec.std_dev();
  const double l2 = spec.correlation_length * spec.correlation_length;

  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double dt = spec.time_grid[i] - spec.time_grid[j];
      const double v = sigma2 * std::exp(-dt * dt / (2.0 * l2));
      cov(i, j) = v;
      cov(j, i) = v;
    }
  if (!cov.allFinite()) throw std::runtime_error("kl_expand: non-finite covariance entries");

  Eigen::VectorXd w(n);
  w[0] = 0.5 * (spec.time_grid[1] - spec.time_grid[0]);
  w[n - 1] = 0.5 * (spec.time_grid[n - 1] - spec.time_grid[n - 2]);
  for (int i = 1; i < n - 1; ++i)
    w[i] = 0.5 * (spec.time_grid[i + 1] - spec.time_grid[i - 1]);

  const Eigen::VectorXd sw = w.array().sqrt();
  Eigen::MatrixXd b = sw.asDiagonal() * cov * sw.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("kl_expand: eigen-decomposition failed");

  KlBasis basis;
  basis.n_modes = n_modes;
  basis.quad_weights = w;
  basis.eigenvalues.resize(n_modes);
  basis.modes.resize(n, n_modes);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += std::max(es.eigenvalues()[i], 0.0);
  basis.total_trace = total;

  double retained = 0.0;
  for (int k = 0; k < n_modes; ++k) {
    const int src = n - 1 - k;  // Eigen returns ascending order
    double ev = es.eigenvalues()[src];
    if (ev < -1e-12 * total) throw std::runtime_error("kl_expand: strongly negative eigenvalue");
    ev = std::max(ev, 0.0);
    basis.eigenvalues[k] = ev;
    retained += ev;
    basis.modes.col(k) = es.eigenvectors().col(src).array() / sw.array();
  }
  basis.captured_variance = total > 0.0 ? retained / total : 1.0;
  return basis;
}

Eigen::VectorXd sample_process(const KlBasis& basis, const Eigen::VectorXd& theta, double mean) {
  if (theta.size() != basis.n_modes)
    throw std::invalid_argument("sample_process: theta length != n_modes");
  Eigen::VectorXd traj = basis.modes * (basis.eigenvalues.array().sqrt() * theta.array()).matrix();
  traj.array() += mean;
  return traj;
}

}  // namespace rbdo
