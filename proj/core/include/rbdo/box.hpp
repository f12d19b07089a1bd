#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace rbdo {

/// Axis-aligned design domain with the affine map to the [-1,1] cube used by
/// the Legendre bases.
struct DesignBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dims() const { return static_cast<int>(lower.size()); }

  void validate() const {
    if (lower.size() != upper.size() || lower.size() == 0)
      throw std::invalid_argument("DesignBox: bad bounds");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i])) throw std::invalid_argument("DesignBox: lower >= upper");
  }

  bool contains(const Eigen::VectorXd& d, double rel_tol = 1e-9) const {
    if (d.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double slack = rel_tol * (upper[i] - lower[i]);
      if (d[i] < lower[i] - slack || d[i] > upper[i] + slack) return false;
    }
    return true;
  }

  Eigen::VectorXd to_unit(const Eigen::VectorXd& d) const {
    return (2.0 * (d - lower).array() / (upper - lower).array() - 1.0).matrix();
  }

  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const {
    return (lower.array() + 0.5 * (u.array() + 1.0) * (upper - lower).array()).matrix();
  }

  Eigen::MatrixXd to_unit_rows(const Eigen::MatrixXd& pts) const {
    Eigen::MatrixXd out(pts.rows(), pts.cols());
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      out.row(i) = to_unit(pts.row(i).transpose()).transpose();
    return out;
  }
};

}  // namespace rbdo
