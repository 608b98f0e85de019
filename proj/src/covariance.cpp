#include "pmrm/covariance.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "pmrm/errors.hpp"

namespace pmrm {

CovarianceSpec::CovarianceSpec(int dimension, Eigen::VectorXd coords)
    : dimension_(dimension), coords_(std::move(coords)) {
  if (dimension_ < 1 || coords_.size() != n_coords(dimension_)) {
    throw ContractError("covariance coordinates have length " + std::to_string(coords_.size()) +
                        ", expected " + std::to_string(n_coords(dimension_)));
  }
}

CovarianceSpec CovarianceSpec::from_matrix(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1) {
    throw ValidationError("covariance matrix must be square");
  }
  if (!matrix.isApprox(matrix.transpose(), 1e-12)) {
    throw ValidationError("covariance matrix must be symmetric");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("covariance matrix is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  const int d = static_cast<int>(matrix.rows());
  Eigen::VectorXd coords(n_coords(d));
  int k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) coords[k++] = i == j ? std::log(L(i, i)) : L(i, j);
  }
  return CovarianceSpec(d, std::move(coords));
}

void cholesky_from_coords(int dimension, const Eigen::Ref<const Eigen::VectorXd>& coords,
                          Eigen::MatrixXd& L) {
  L.setZero(dimension, dimension);
  int k = 0;
  for (int i = 0; i < dimension; ++i) {
    for (int j = 0; j <= i; ++j) L(i, j) = i == j ? std::exp(coords[k++]) : coords[k++];
  }
}

Eigen::MatrixXd CovarianceSpec::cholesky_factor() const {
  Eigen::MatrixXd L;
  cholesky_from_coords(dimension_, coords_, L);
  return L;
}

Eigen::MatrixXd CovarianceSpec::matrix() const {
  const Eigen::MatrixXd L = cholesky_factor();
  return L * L.transpose();
}

}  // namespace pmrm
