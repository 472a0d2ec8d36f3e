#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crn/spline.hpp"

#include <cmath>
#include <numbers>

using namespace crn;

namespace {

Eigen::RowVectorXd sample(const UniformGrid& g, double (*f)(double)) {
  const Vector t = g.times();
  Eigen::RowVectorXd v(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) v(k) = f(t(k));
  return v;
}

}  // namespace

TEST_CASE("not-a-knot spline reproduces cubics") {
  auto q = [](double t) { return t * t * t - 2 * t * t + 1; };
  for (int n : {3, 7, 40}) {
    const UniformGrid g(-1.0, 2.5, n);
    Vector v(n + 1);
    for (int k = 0; k <= n; ++k) v(k) = q(g.knot(k));
    const CubicSpline s = build_notaknot_spline(v, g);
    for (double t = -1.0; t <= 2.5; t += 0.0173) {
      CHECK(std::abs(s.value(t) - q(t)) <= 1e-12 * 10);
      CHECK(std::abs(s.derivative(t) - (3 * t * t - 4 * t)) <= 1e-11);
    }
  }
}

TEST_CASE("constant data gives a constant spline") {
  const UniformGrid g(0.0, 1.0, 9);
  const CubicSpline s = build_notaknot_spline(Vector::Constant(10, 3.5), g);
  for (double t = 0.0; t <= 1.0; t += 0.01) {
    CHECK(s.value(t) == doctest::Approx(3.5).epsilon(1e-14));
  }
}

TEST_CASE("cardinal splines interpolate and form a partition of unity") {
  const UniformGrid g(0.0, 5.0, 12);
  std::vector<CubicSpline> cardinal;
  for (int i = 0; i <= 12; ++i) {
    cardinal.push_back(build_notaknot_spline(Vector::Unit(13, i), g));
    for (int k = 0; k <= 12; ++k) {
      CHECK(cardinal.back().value(g.knot(k)) == doctest::Approx(i == k ? 1.0 : 0.0));
    }
  }
  for (int k = 0; k < 12; ++k) {
    const double mid = g.knot(k) + 0.5 * g.h();
    double sum = 0.0;
    for (const auto& s : cardinal) sum += s.value(mid);
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }
}

TEST_CASE("not-a-knot conditions hold") {
  const UniformGrid g(0.0, 1.0, 8);
  const CubicSpline s = build_notaknot_spline(Vector::Unit(9, 4) + Vector::LinSpaced(9, 0, 1).array().square().matrix(), g);
  const double eps = 1e-9;
  CHECK(s.third_derivative(g.knot(1) - eps) == doctest::Approx(s.third_derivative(g.knot(1) + eps)));
  CHECK(s.third_derivative(g.knot(7) - eps) == doctest::Approx(s.third_derivative(g.knot(7) + eps)));
}

TEST_CASE("spline input validation") {
  CHECK_THROWS_AS(UniformGrid(0.0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(UniformGrid(1.0, 1.0, 5), ConfigError);
  Vector t(5);
  t << 0, 1, 2, 3.5, 4;
  CHECK_THROWS_AS(UniformGrid::from_times(t), ConfigError);
  CHECK_THROWS_AS(build_notaknot_spline(Vector::Zero(4), UniformGrid(0, 1, 5)), ConfigError);
}

TEST_CASE("operators on linear and cubic data") {
  const UniformGrid g(0.0, 1.0, 10);
  const SplineOperators ops = build_operators(g);
  const Eigen::RowVectorXd t = sample(g, [](double x) { return x; });
  CHECK((t * ops.L - Eigen::RowVectorXd::Ones(11)).cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::RowVectorXd t3 = sample(g, [](double x) { return x * x * x; });
  const Eigen::RowVectorXd t4 = sample(g, [](double x) { return x * x * x * x / 4; });
  CHECK((t3 * ops.J - t4).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("operator invariants") {
  for (int n : {3, 10, 200}) {
    const UniformGrid g(2.0, 22.0, n);
    const SplineOperators ops = build_operators(g);
    CHECK(ops.J.col(0).isZero(0.0));
    const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(n + 1);
    CHECK((ones * ops.L).cwiseAbs().maxCoeff() <= 1e-10 * n);
    const Eigen::RowVectorXd elapsed = (g.times().array() - 2.0).matrix().transpose();
    CHECK((ones * ops.J - elapsed).cwiseAbs().maxCoeff() <= 1e-10 * 20.0);
  }
}

TEST_CASE("sin derivative against the interpolation bound") {
  const int n = 100;
  const UniformGrid g(0.0, std::numbers::pi, n);
  const SplineOperators ops = build_operators(g);
  const Eigen::RowVectorXd v = sample(g, [](double x) { return std::sin(x); });
  const Eigen::RowVectorXd dv = sample(g, [](double x) { return std::cos(x); });
  const double bound = (9 + std::sqrt(3.0)) / 216 * std::pow(std::numbers::pi, 3) / std::pow(n, 3);
  CHECK((v * ops.L - dv).cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("spline integral and knot values agree with the operators") {
  const UniformGrid g(0.0, 3.0, 17);
  const Eigen::RowVectorXd v = sample(g, [](double x) { return std::exp(-x) * std::cos(2 * x); });
  const CubicSpline s = build_notaknot_spline(v.transpose(), g);
  const SplineOperators ops = build_operators(g);
  CHECK((s.derivatives_at_knots().transpose() - v * ops.L).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.cumulative_integrals_at_knots().transpose() - v * ops.J).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.integral(g.tn) == doctest::Approx((v * ops.J)(17)));
}

TEST_CASE("convergence orders on smooth data") {
  std::vector<double> ns, ed, ei;
  for (int n : {25, 50, 100, 200, 400}) {
    const UniformGrid g(0.0, 4.0, n);
    const SplineOperators ops = build_operators(g);
    const Eigen::RowVectorXd v = sample(g, [](double x) { return std::exp(std::sin(x)); });
    const Eigen::RowVectorXd dv = sample(g, [](double x) { return std::cos(x) * std::exp(std::sin(x)); });
    // Reference integral by composite Simpson on a fine grid.
    Eigen::RowVectorXd iv(n + 1);
    iv(0) = 0.0;
    for (int k = 1; k <= n; ++k) {
      const int m = 200;
      const double a = g.knot(k - 1), h = (g.knot(k) - a) / m;
      double acc = 0.0;
      for (int j = 0; j <= m; ++j) {
        const double w = (j == 0 || j == m) ? 1 : (j % 2 ? 4 : 2);
        acc += w * std::exp(std::sin(a + j * h));
      }
      iv(k) = iv(k - 1) + acc * h / 3;
    }
    ns.push_back(n);
    ed.push_back((v * ops.L - dv).cwiseAbs().maxCoeff());
    ei.push_back((v * ops.J - iv).cwiseAbs().maxCoeff());
  }
  auto slope = [&](const std::vector<double>& e) {
    Eigen::MatrixXd a(ns.size(), 2);
    Eigen::VectorXd b(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
      a(i, 0) = std::log10(ns[i]);
      a(i, 1) = 1.0;
      b(i) = std::log10(e[i]);
    }
    return a.colPivHouseholderQr().solve(b)(0);
  };
  CHECK(slope(ed) == doctest::Approx(-3.0).epsilon(0.1));
  CHECK(slope(ei) == doctest::Approx(-4.0).epsilon(0.075));
}

TEST_CASE("stacked operators act block by block") {
  auto base = std::make_shared<const SplineOperators>(build_operators(UniformGrid(0.0, 1.0, 9)));
  const StackedOperators one = stack_operators(base, 1);
  CHECK(one.dense_L() == base->L);
  CHECK(one.dense_J() == base->J);

  const StackedOperators two = stack_operators(base, 2);
  const Matrix v = Matrix::Random(3, 20);
  const Matrix lv = two.apply_L(v);
  CHECK(lv.leftCols(10) == v.leftCols(10) * base->L);
  CHECK(lv.rightCols(10) == v.rightCols(10) * base->L);
  CHECK((two.apply_J(v) - v * two.dense_J()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(two.dense_L().block(0, 10, 10, 10).isZero(0.0));

  const StackedOperators six = stack_operators(base, 6);
  CHECK(six.size() == 60);
  CHECK(six.dense_L().rows() == 60);
  CHECK_THROWS_AS(two.apply_L(Matrix::Zero(3, 21)), ConfigError);
  CHECK_THROWS_AS(stack_operators(base, 0), ConfigError);
}

TEST_CASE("operator norms") {
  const SplineOperators ops = build_operators(UniformGrid(0.0, 20.0, 100));
  const OperatorNorms norms = operator_norms(ops);
  CHECK(norms.L_inf == doctest::Approx(ops.L.cwiseAbs().rowwise().sum().maxCoeff()));
  CHECK(norms.J_one == doctest::Approx(ops.J.cwiseAbs().colwise().sum().maxCoeff()));
  CHECK(norms.J_columns(0) == 0.0);
  CHECK(norms.L_columns.size() == 101);

  const std::string csv = matrix_csv(ops.J.topLeftCorner(2, 2));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}
