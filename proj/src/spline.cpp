#include "crn/spline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace crn {

UniformGrid::UniformGrid(double t0_, double tn_, int intervals) : t0(t0_), tn(tn_), n(intervals) {
  if (intervals < 3) {
    throw ConfigError("not-a-knot spline needs at least 4 knots (n >= 3)");
  }
  if (!(tn_ > t0_)) {
    throw ConfigError("grid must satisfy t0 < tn");
  }
}

UniformGrid UniformGrid::from_times(const Vector& times) {
  if (times.size() < 4) {
    throw ConfigError("not-a-knot spline needs at least 4 knots (n >= 3)");
  }
  const int n = static_cast<int>(times.size()) - 1;
  UniformGrid grid(times(0), times(n), n);
  const double h = grid.h();
  for (int k = 0; k < n; ++k) {
    const double spacing = times(k + 1) - times(k);
    if (std::abs(spacing - h) > 1e-9 * h) {
      throw ConfigError("spline operators require a uniform grid");
    }
  }
  return grid;
}

Vector UniformGrid::times() const {
  Vector t(points());
  for (int k = 0; k <= n; ++k) {
    t(k) = knot(k);
  }
  return t;
}

CubicSpline::CubicSpline(UniformGrid grid, Vector values, Vector second_derivatives)
    : grid_(grid), values_(std::move(values)), m_(std::move(second_derivatives)) {}

int CubicSpline::interval(double t) const {
  const int k = static_cast<int>(std::floor((t - grid_.t0) / grid_.h()));
  return std::clamp(k, 0, grid_.n - 1);
}

double CubicSpline::value(double t) const {
  const int k = interval(t);
  const double h = grid_.h();
  const double a = grid_.knot(k + 1) - t;
  const double b = t - grid_.knot(k);
  return m_(k) * a * a * a / (6 * h) + m_(k + 1) * b * b * b / (6 * h) +
         (values_(k) / h - m_(k) * h / 6) * a + (values_(k + 1) / h - m_(k + 1) * h / 6) * b;
}

double CubicSpline::derivative(double t) const {
  const int k = interval(t);
  const double h = grid_.h();
  const double a = grid_.knot(k + 1) - t;
  const double b = t - grid_.knot(k);
  return -m_(k) * a * a / (2 * h) + m_(k + 1) * b * b / (2 * h) -
         (values_(k) / h - m_(k) * h / 6) + (values_(k + 1) / h - m_(k + 1) * h / 6);
}

double CubicSpline::third_derivative(double t) const {
  const int k = interval(t);
  return (m_(k + 1) - m_(k)) / grid_.h();
}

double CubicSpline::integral(double t) const {
  const int k = interval(t);
  const double h = grid_.h();
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    total += h * (values_(j) + values_(j + 1)) / 2 - h * h * h * (m_(j) + m_(j + 1)) / 24;
  }
  const double a = grid_.knot(k + 1) - t;
  const double b = t - grid_.knot(k);
  total += m_(k) * (h * h * h * h - a * a * a * a) / (24 * h) + m_(k + 1) * b * b * b * b / (24 * h) +
           (values_(k) / h - m_(k) * h / 6) * (h * h - a * a) / 2 +
           (values_(k + 1) / h - m_(k + 1) * h / 6) * b * b / 2;
  return total;
}

Vector CubicSpline::derivatives_at_knots() const {
  const int n = grid_.n;
  const double h = grid_.h();
  Vector d(n + 1);
  for (int k = 0; k < n; ++k) {
    d(k) = (values_(k + 1) - values_(k)) / h - h * (2 * m_(k) + m_(k + 1)) / 6;
  }
  d(n) = (values_(n) - values_(n - 1)) / h + h * (2 * m_(n) + m_(n - 1)) / 6;
  return d;
}

Vector CubicSpline::cumulative_integrals_at_knots() const {
  const int n = grid_.n;
  const double h = grid_.h();
  Vector c(n + 1);
  c(0) = 0.0;
  for (int k = 0; k < n; ++k) {
    c(k + 1) = c(k) + h * (values_(k) + values_(k + 1)) / 2 - h * h * h * (m_(k) + m_(k + 1)) / 24;
  }
  return c;
}

NotAKnotSolver::NotAKnotSolver(UniformGrid grid) : grid_(grid) {
  const int unknowns = grid_.n - 1;  // M_1 .. M_{n-1}
  lower_ = Vector::Zero(unknowns);
  diag_ = Vector::Zero(unknowns);
  upper_ = Vector::Zero(unknowns);
  Vector a = Vector::Ones(unknowns);
  Vector b = Vector::Constant(unknowns, 4.0);
  Vector c = Vector::Ones(unknowns);
  // Eliminating M_0 = 2 M_1 - M_2 from the first interior equation leaves 6 M_1 = r_1,
  // and symmetrically 6 M_{n-1} = r_{n-1}.
  b(0) = 6.0;
  c(0) = 0.0;
  a(0) = 0.0;
  b(unknowns - 1) = 6.0;
  a(unknowns - 1) = 0.0;
  c(unknowns - 1) = 0.0;
  // Thomas factorization: diag_ holds pivots, upper_ the scaled super-diagonal.
  for (int i = 0; i < unknowns; ++i) {
    const double pivot = i == 0 ? b(0) : b(i) - a(i) * upper_(i - 1);
    diag_(i) = pivot;
    upper_(i) = c(i) / pivot;
    lower_(i) = a(i);
  }
}

CubicSpline NotAKnotSolver::interpolate(const Vector& values) const {
  const int n = grid_.n;
  if (values.size() != n + 1) {
    throw ConfigError("spline data length does not match grid");
  }
  const double h = grid_.h();
  const int unknowns = n - 1;
  Vector r(unknowns);
  for (int k = 1; k <= n - 1; ++k) {
    r(k - 1) = 6.0 / (h * h) * (values(k - 1) - 2 * values(k) + values(k + 1));
  }
  for (int i = 0; i < unknowns; ++i) {
    r(i) = (r(i) - (i > 0 ? lower_(i) * r(i - 1) : 0.0)) / diag_(i);
  }
  for (int i = unknowns - 2; i >= 0; --i) {
    r(i) -= upper_(i) * r(i + 1);
  }
  Vector m(n + 1);
  m.segment(1, unknowns) = r;
  m(0) = 2 * m(1) - m(2);
  m(n) = 2 * m(n - 1) - m(n - 2);
  return CubicSpline(grid_, values, std::move(m));
}

CubicSpline build_notaknot_spline(const Vector& values, const UniformGrid& grid) {
  return NotAKnotSolver(grid).interpolate(values);
}

CubicSpline build_notaknot_spline(const Vector& values, const Vector& times) {
  return build_notaknot_spline(values, UniformGrid::from_times(times));
}

SplineOperators build_operators(const UniformGrid& grid) {
  NotAKnotSolver solver(grid);
  const int p = grid.points();
  SplineOperators ops;
  ops.grid = grid;
  ops.L.resize(p, p);
  ops.J.resize(p, p);
  Vector e = Vector::Zero(p);
  for (int i = 0; i < p; ++i) {
    e(i) = 1.0;
    const CubicSpline s = solver.interpolate(e);
    ops.L.row(i) = s.derivatives_at_knots().transpose();
    ops.J.row(i) = s.cumulative_integrals_at_knots().transpose();
    e(i) = 0.0;
  }
  return ops;
}

StackedOperators::StackedOperators(std::shared_ptr<const SplineOperators> base, int w)
    : base_(std::move(base)), w_(w) {
  if (w < 1) {
    throw ConfigError("stacked operators need w >= 1");
  }
  if (!base_) {
    throw ConfigError("stacked operators need base operators");
  }
}

Matrix StackedOperators::apply(const Matrix& data, const Matrix& op) const {
  const Eigen::Index p = block_size();
  if (data.cols() != static_cast<Eigen::Index>(w_) * p) {
    throw ConfigError("data width does not match the stacked operator");
  }
  Matrix out(data.rows(), data.cols());
  for (int b = 0; b < w_; ++b) {
    out.middleCols(b * p, p).noalias() = data.middleCols(b * p, p) * op;
  }
  return out;
}

Matrix StackedOperators::apply_L(const Matrix& data) const { return apply(data, base_->L); }
Matrix StackedOperators::apply_J(const Matrix& data) const { return apply(data, base_->J); }

Matrix StackedOperators::dense_L() const {
  const Eigen::Index p = block_size();
  Matrix out = Matrix::Zero(size(), size());
  for (int b = 0; b < w_; ++b) {
    out.block(b * p, b * p, p, p) = base_->L;
  }
  return out;
}

Matrix StackedOperators::dense_J() const {
  const Eigen::Index p = block_size();
  Matrix out = Matrix::Zero(size(), size());
  for (int b = 0; b < w_; ++b) {
    out.block(b * p, b * p, p, p) = base_->J;
  }
  return out;
}

StackedOperators stack_operators(std::shared_ptr<const SplineOperators> ops, int w) {
  return StackedOperators(std::move(ops), w);
}

OperatorNorms operator_norms(const SplineOperators& ops) {
  OperatorNorms n;
  n.L_columns = ops.L.cwiseAbs().colwise().sum().transpose();
  n.J_columns = ops.J.cwiseAbs().colwise().sum().transpose();
  n.L_inf = ops.L.cwiseAbs().rowwise().sum().maxCoeff();
  n.J_inf = ops.J.cwiseAbs().rowwise().sum().maxCoeff();
  n.L_one = n.L_columns.maxCoeff();
  n.J_one = n.J_columns.maxCoeff();
  return n;
}

std::string matrix_csv(const Matrix& m) {
  std::string s;
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j > 0) {
        s += ',';
      }
      s += buf;
    }
    s += '\n';
  }
  return s;
}

}  // namespace crn
