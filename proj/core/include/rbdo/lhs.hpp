#pragma once

#include <Eigen/Core>

#include "rbdo/math.hpp"

namespace rbdo {

/// Latin hypercube sample in (0,1)^{n_points x n_dims}: per dimension exactly
/// one point per stratum ((i-1)/n, i/n), strata independently permuted,
/// uniform jitter inside each stratum.
Eigen::MatrixXd lhs_sample(int n_points, int n_dims, Rng& rng);

}  // namespace rbdo
