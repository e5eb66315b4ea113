#include "gbq/nnls.hpp"

#include "gbq/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace gbq {

namespace {

// Least squares restricted to the passive columns; zeros elsewhere.
Eigen::VectorXd passive_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
  }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(A.cols());
  if (cols.empty()) return z;
  Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = A.col(cols[i]);
  const Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(b);
  for (std::size_t i = 0; i < cols.size(); ++i) z(cols[i]) = zs(static_cast<Eigen::Index>(i));
  return z;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter, double tol) {
  if (A.rows() != b.size()) throw Error(ErrorKind::ShapeMismatch, "nnls: A and b disagree");
  const Eigen::Index n = A.cols();
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n) + 10;
  if (tol <= 0.0) {
    tol = 10.0 * std::numeric_limits<double>::epsilon() * A.norm() *
          static_cast<double>(std::max(A.rows(), n));
  }

  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::VectorXd w = A.transpose() * (b - A * res.x);

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    Eigen::Index jmax = -1;
    double wmax = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
        wmax = w(j);
        jmax = j;
      }
    }
    if (jmax < 0) {
      res.converged = true;
      break;
    }
    passive[static_cast<std::size_t>(jmax)] = true;

    for (;;) {
      const Eigen::VectorXd z = passive_solve(A, b, passive);
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, res.x(j) / (res.x(j) - z(j)));
        }
      }
      if (feasible) {
        res.x = z;
        break;
      }
      res.x += alpha * (z - res.x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && res.x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          res.x(j) = 0.0;
        }
      }
    }
    w = A.transpose() * (b - A * res.x);
  }
  res.residual = (A * res.x - b).norm();
  return res;
}

NnlsResult nnls_tikhonov(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::MatrixXd& L) {
  if (L.cols() != A.cols()) throw Error(ErrorKind::ShapeMismatch, "nnls: penalty width differs");
  const Eigen::Index m = A.rows(), n = A.cols(), p = L.rows();
  Eigen::MatrixXd aug(m + p, n);
  aug.topRows(m) = A;
  aug.bottomRows(p) = L;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + p);
  rhs.head(m) = b;
  NnlsResult r = nnls(aug, rhs);
  r.residual = (A * r.x - b).norm();
  return r;
}

NnlsResult nnls_ridge(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda) {
  if (lambda < 0.0) throw Error(ErrorKind::Usage, "nnls: negative ridge weight");
  return nnls_tikhonov(A, b, std::sqrt(lambda) * Eigen::MatrixXd::Identity(A.cols(), A.cols()));
}

}  // namespace gbq
