#pragma once

// Thin wrapper around a thresholded SVD: minimum-norm least squares,
// numerical rank, and a kernel basis. All the structure-equation systems in
// this library are small dense blocks solved through this one code path.

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace plane6 {

class LeastSquares {
 public:
  explicit LeastSquares(const Eigen::MatrixXd& op, double rel_threshold = 1e-10)
      : op_(op), svd_(op, Eigen::ComputeFullU | Eigen::ComputeFullV) {
    svd_.setThreshold(rel_threshold);
  }

  int rank() const { return static_cast<int>(svd_.rank()); }
  int nullity() const { return static_cast<int>(op_.cols()) - rank(); }

  Eigen::MatrixXd kernel() const {
    return svd_.matrixV().rightCols(nullity());
  }

  // Minimum-norm least-squares solution; optionally reports ||op x - rhs||.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double* residual = nullptr) const {
    Eigen::VectorXd x = svd_.solve(rhs);
    if (residual) *residual = (op_ * x - rhs).norm();
    return x;
  }

  const Eigen::MatrixXd& op() const { return op_; }

 private:
  Eigen::MatrixXd op_;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_;
};

}  // namespace plane6
