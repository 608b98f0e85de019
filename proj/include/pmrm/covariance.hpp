#pragma once

#include <Eigen/Core>

namespace pmrm {

// Unstructured covariance in log-Cholesky coordinates: the lower triangle of
// the Cholesky factor L, row by row, with each diagonal entry stored as its log.
// Every coordinate vector maps to a symmetric positive definite L * L^T.
class CovarianceSpec {
 public:
  CovarianceSpec() = default;
  CovarianceSpec(int dimension, Eigen::VectorXd coords);

  // Throws ValidationError if `matrix` is not symmetric positive definite.
  static CovarianceSpec from_matrix(const Eigen::MatrixXd& matrix);
  static int n_coords(int dimension) { return dimension * (dimension + 1) / 2; }

  int dimension() const { return dimension_; }
  const Eigen::VectorXd& coords() const { return coords_; }

  Eigen::MatrixXd cholesky_factor() const;
  Eigen::MatrixXd matrix() const;

 private:
  int dimension_ = 0;
  Eigen::VectorXd coords_;
};

// Writes the Cholesky factor for `coords` into `L` (resized as needed).
void cholesky_from_coords(int dimension, const Eigen::Ref<const Eigen::VectorXd>& coords,
                          Eigen::MatrixXd& L);

}  // namespace pmrm
