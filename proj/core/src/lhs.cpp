#include "rbdo/lhs.hpp"

#include <numeric>
#include <stdexcept>
#include <vector>

namespace rbdo {

Eigen::MatrixXd lhs_sample(int n_points, int n_dims, Rng& rng) {
  if (n_points < 1 || n_dims < 1)
    throw std::invalid_argument("lhs_sample: n_points and n_dims must be >= 1");
  Eigen::MatrixXd out(n_points, n_dims);
  std::vector<int> perm(n_points);
  for (int j = 0; j < n_dims; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n_points - 1; i > 0; --i) {
      int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[k]);
    }
    for (int i = 0; i < n_points; ++i)
      out(i, j) = (perm[i] + rng.uniform01()) / n_points;
  }
  return out;
}

}  // namespace rbdo
