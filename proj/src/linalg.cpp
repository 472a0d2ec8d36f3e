#include "crn/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace crn {

SingularValues numerical_rank(const Matrix& a, double cutoff) {
  SingularValues out;
  if (a.size() == 0) {
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(a);
  out.values = svd.singularValues();
  const double top = out.values.size() > 0 ? out.values(0) : 0.0;
  if (top == 0.0) {
    return out;
  }
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    if (out.values(i) > cutoff * top) {
      ++out.rank;
    }
  }
  return out;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) {
    return 0.0;
  }
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double sigma_min(const Matrix& a) {
  if (a.size() == 0) {
    return 0.0;
  }
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  return s(s.size() - 1);
}

double sigma_max(const Matrix& a) { return spectral_norm(a); }

Vector truncated_svd_solve(const Matrix& a, const Vector& b, double cutoff) {
  Vector x = Vector::Zero(a.cols());
  if (a.size() == 0) {
    return x;
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) {
    return x;
  }
  const double threshold = cutoff * s(0);
  Vector utb = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    utb(i) = s(i) > threshold ? utb(i) / s(i) : 0.0;
  }
  x = svd.matrixV() * utb;
  return x;
}

RowRegression::RowRegression(const Matrix& regression, const Matrix& targets) {
  if (regression.cols() != targets.cols()) {
    throw NumericalError("regression and target sample counts differ");
  }
  const Eigen::Index samples = regression.cols();
  const Eigen::Index unknowns = regression.rows();
  const Eigen::Index k = std::min(samples, unknowns);

  Matrix at = regression.transpose();
  Eigen::HouseholderQR<Matrix> qr(at);
  r_ = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  Matrix yt = targets.transpose();
  Matrix qty = qr.householderQ().adjoint() * yt;
  projected_ = qty.topRows(k);

  orthogonal_residual_.resize(targets.rows());
  for (Eigen::Index row = 0; row < targets.rows(); ++row) {
    orthogonal_residual_(row) = k < samples ? qty.col(row).tail(samples - k).norm() : 0.0;
  }
}

Vector RowRegression::solve(int row, const std::vector<int>& support, double cutoff,
                            double* residual) const {
  const Eigen::Index s = static_cast<Eigen::Index>(support.size());
  Matrix sub(r_.rows(), s);
  for (Eigen::Index j = 0; j < s; ++j) {
    sub.col(j) = r_.col(support[j]);
  }
  const Vector rhs = projected_.col(row);
  Vector c = truncated_svd_solve(sub, rhs, cutoff);
  if (residual != nullptr) {
    const double in_span = (rhs - sub * c).norm();
    *residual = std::hypot(in_span, orthogonal_residual_(row));
  }
  return c;
}

double RowRegression::residual(int row, const Vector& coefficients) const {
  const double in_span = (projected_.col(row) - r_ * coefficients).norm();
  return std::hypot(in_span, orthogonal_residual_(row));
}

}  // namespace crn
