#pragma once

#include "crn/linalg.hpp"

#include <memory>
#include <string>

namespace crn {

/// Equispaced knots t_k = t0 + k h, k = 0..n.
struct UniformGrid {
  double t0 = 0.0;
  double tn = 1.0;
  int n = 3;  // number of intervals

  UniformGrid() = default;
  UniformGrid(double t0_, double tn_, int intervals);

  /// Rejects non-uniform input (relative spacing deviation above 1e-9).
  static UniformGrid from_times(const Vector& times);

  double h() const { return (tn - t0) / n; }
  int points() const { return n + 1; }
  double knot(int k) const { return k == n ? tn : t0 + k * h(); }
  Vector times() const;
};

/// Not-a-knot cubic spline stored by its knot values and second derivatives.
class CubicSpline {
 public:
  CubicSpline(UniformGrid grid, Vector values, Vector second_derivatives);

  const UniformGrid& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  const Vector& second_derivatives() const { return m_; }

  double value(double t) const;
  double derivative(double t) const;
  double third_derivative(double t) const;
  /// Integral of the spline from t0 to t.
  double integral(double t) const;

  Vector derivatives_at_knots() const;
  Vector cumulative_integrals_at_knots() const;

 private:
  int interval(double t) const;

  UniformGrid grid_;
  Vector values_;
  Vector m_;
};

/// Factorizes the not-a-knot system of a grid once and solves it for any data vector.
/// On a uniform grid the not-a-knot conditions pin M_1 and M_{n-1} directly, leaving a
/// diagonally dominant tridiagonal system in the interior second derivatives.
class NotAKnotSolver {
 public:
  explicit NotAKnotSolver(UniformGrid grid);

  const UniformGrid& grid() const { return grid_; }
  CubicSpline interpolate(const Vector& values) const;

 private:
  UniformGrid grid_;
  // Thomas factorization of the reduced system for M_1..M_{n-1}.
  Vector lower_;
  Vector diag_;
  Vector upper_;
};

CubicSpline build_notaknot_spline(const Vector& values, const UniformGrid& grid);
CubicSpline build_notaknot_spline(const Vector& values, const Vector& times);

/// Differentiation matrix L and integration matrix J. Row i of L holds s_i'(t_k) and
/// row i of J holds the integral of s_i from t0 to t_k, for the cardinal spline s_i.
/// For a data row vector v, v L approximates dv/dt and v J the cumulative integral.
struct SplineOperators {
  UniformGrid grid;
  Matrix L;
  Matrix J;
};

SplineOperators build_operators(const UniformGrid& grid);

/// Block-diagonal I_w (x) L and I_w (x) J. The blocks are never materialized in the
/// solver path; `dense_*` exist for inspection and small problems.
class StackedOperators {
 public:
  StackedOperators(std::shared_ptr<const SplineOperators> base, int w);

  int experiments() const { return w_; }
  int block_size() const { return base_->grid.points(); }
  int size() const { return w_ * block_size(); }
  const SplineOperators& base() const { return *base_; }

  /// data (rows x w(n+1)) times L~ / J~, applied block by block.
  Matrix apply_L(const Matrix& data) const;
  Matrix apply_J(const Matrix& data) const;

  Matrix dense_L() const;
  Matrix dense_J() const;

 private:
  Matrix apply(const Matrix& data, const Matrix& op) const;

  std::shared_ptr<const SplineOperators> base_;
  int w_;
};

StackedOperators stack_operators(std::shared_ptr<const SplineOperators> ops, int w);

struct OperatorNorms {
  double L_inf = 0.0;  // max row 1-norm
  double J_inf = 0.0;
  double L_one = 0.0;  // max column 1-norm
  double J_one = 0.0;
  Vector L_columns;    // ||L_{:,k}||_1 per column
  Vector J_columns;
};

OperatorNorms operator_norms(const SplineOperators& ops);

/// Row-major CSV with 17 significant digits.
std::string matrix_csv(const Matrix& m);

}  // namespace crn
