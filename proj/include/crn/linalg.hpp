#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace crn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::MatrixXi;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Error hierarchy. The CLI maps each kind to its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class EmptyModelError : public Error {
 public:
  using Error::Error;
};

struct SingularValues {
  int rank = 0;
  Vector values;  // descending
};

/// Count of singular values above `cutoff * sigma_max`.
SingularValues numerical_rank(const Matrix& a, double cutoff);

double spectral_norm(const Matrix& a);

/// Smallest singular value among the first min(rows, cols) (zero when rank deficient).
double sigma_min(const Matrix& a);
double sigma_max(const Matrix& a);

/// Minimal-norm solution of min ||b - A x|| via truncated SVD with relative cutoff.
Vector truncated_svd_solve(const Matrix& a, const Vector& b, double cutoff);

/// Row-space least squares problems  min_c || y - c A ||  where A is (unknowns x samples)
/// and y ranges over the rows of a target matrix. The sample dimension is compressed once
/// with a thin Householder QR of A^T so every subsequent (restricted) solve costs
/// O(unknowns^3) independently of the number of samples.
class RowRegression {
 public:
  RowRegression(const Matrix& regression, const Matrix& targets);

  int unknowns() const { return static_cast<int>(r_.cols()); }
  int rows() const { return static_cast<int>(projected_.cols()); }

  /// Solve row `row` restricted to the columns listed in `support`. Returns
  /// coefficients in support order and the residual 2-norm.
  Vector solve(int row, const std::vector<int>& support, double cutoff,
               double* residual = nullptr) const;

  /// Residual 2-norm of an arbitrary full-length coefficient vector.
  double residual(int row, const Vector& coefficients) const;

  const Matrix& r_factor() const { return r_; }

 private:
  Matrix r_;          // unknowns x unknowns (upper triangular)
  Matrix projected_;  // unknowns x rows, Q^T y
  Vector orthogonal_residual_;  // per row, || (I - QQ^T) y ||
};

}  // namespace crn
