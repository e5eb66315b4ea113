#pragma once

#include <Eigen/Dense>

namespace gbq {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual = 0.0;  // ||A x - b||
  int iterations = 0;
  bool converged = false;
};

/// min ||A x - b|| subject to x >= 0 (Lawson-Hanson active set).
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0,
                double tol = 0.0);

/// Same with a ridge term lambda ||x||^2, solved as an augmented system.
NnlsResult nnls_ridge(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda);

/// General Tikhonov form: min ||A x - b||^2 + ||L x||^2, x >= 0.
NnlsResult nnls_tikhonov(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::MatrixXd& L);

}  // namespace gbq
