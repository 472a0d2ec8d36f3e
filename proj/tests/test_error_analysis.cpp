#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crn/error_analysis.hpp"
#include "crn/presets.hpp"

#include <json.hpp>

#include <cmath>

using namespace crn;

TEST_CASE("support mismatch") {
  BoolMatrix a = BoolMatrix::Constant(2, 3, false);
  BoolMatrix b = a;
  CHECK(support_mismatch(a, b) == 0);
  a(0, 1) = true;
  b(1, 2) = true;
  CHECK(support_mismatch(a, b) == 2);
  CHECK(support_mismatch(a, a) == 0);
  CHECK_THROWS_AS(support_mismatch(a, BoolMatrix::Constant(3, 2, false)), ConfigError);

  Matrix c = Matrix::Zero(2, 2);
  c(1, 0) = -3.0;
  CHECK(support_of(c).count() == 1);
  CHECK(support_of(c, 5.0).count() == 0);
}

TEST_CASE("compute_errors against the truth") {
  const Matrix truth = Matrix::Identity(3, 5);
  RecoveryResult dif;
  dif.formulation = Formulation::differential;
  dif.C_ls = truth;
  dif.C_stls = truth;
  dif.support = support_of(truth);
  RecoveryResult integral = dif;
  integral.formulation = Formulation::integral;
  integral.C_ls(0, 4) = 0.5;
  integral.C_stls(0, 4) = 0.5;
  integral.support = support_of(integral.C_stls);
  const ErrorReport r = compute_errors(dif, integral, truth);
  CHECK(r[Method::dif_ls].spectral == 0.0);
  CHECK(r[Method::dif_stls].support_mismatch == 0);
  CHECK(r[Method::int_ls].spectral == doctest::Approx(0.5));
  CHECK(r[Method::int_ls].frobenius == doctest::Approx(0.5));
  CHECK(r[Method::int_stls].support_mismatch == 1);
  CHECK_THROWS_AS(compute_errors(dif, integral, Matrix::Identity(3, 4)), ConfigError);
}

TEST_CASE("geometric mean") {
  CHECK(geometric_mean({1e-2, 1e-4}) == doctest::Approx(1e-3));
  CHECK(geometric_mean({7.0}) == doctest::Approx(7.0));
}

TEST_CASE("fit_decay") {
  std::vector<double> n, e;
  for (int k = 50; k <= 400; k += 50) {
    n.push_back(k);
    e.push_back(3.0 * std::pow(k, -3.0));
  }
  const DecayFit f = fit_decay(n, e, -3.0);
  CHECK(f.slope == doctest::Approx(-3.0).epsilon(1e-10));
  CHECK(f.intercept == doctest::Approx(std::log10(3.0)).epsilon(1e-10));
  CHECK(f.warnings.empty());

  e[2] = 0.0;
  e[5] = std::nan("");
  const DecayFit g = fit_decay(n, e);
  CHECK(g.n.size() == 6);
  CHECK(g.warnings.size() == 2);
  CHECK(g.slope == doctest::Approx(-3.0).epsilon(1e-10));

  CHECK_THROWS_AS(fit_decay({1, 2, 3}, {1, 2, 3}), ConfigError);
  CHECK_THROWS_AS(fit_decay({1, 2, 3, 4, 5}, {1, 0, -1, 2, 3}), ConfigError);
  CHECK_THROWS_AS(fit_decay({1, 2}, {1}), ConfigError);
}

TEST_CASE("aggregate_trials") {
  std::vector<ErrorReport> reports(3);
  for (int i = 0; i < 3; ++i) {
    for (Method m : kMethods) {
      reports[i][m].spectral = std::pow(10.0, -i);
    }
    reports[i][Method::int_stls].support_mismatch = i == 2 ? 17 : i;
    reports[i][Method::int_stls].kirchhoff_mismatch = i == 0 ? std::optional<int>() : i;
  }
  const TrialSummary s = aggregate_trials(reports);
  CHECK(s.trials == 3);
  const MethodSummary& m = s[Method::int_stls];
  CHECK(m.gmean == doctest::Approx(0.1));
  CHECK(m.min == doctest::Approx(0.01));
  CHECK(m.max == doctest::Approx(1.0));
  CHECK(m.used == 3);
  CHECK(m.histogram[0] == 1);
  CHECK(m.histogram[1] == 1);
  CHECK(m.histogram[10] == 1);
  CHECK(m.kirchhoff_size_mismatch == 1);
  CHECK(m.kirchhoff.at(1) == 1);
  CHECK(m.kirchhoff.at(2) == 1);

  const TrialSummary one = aggregate_trials({reports[1]});
  CHECK(one.trials == 1);
  CHECK(one[Method::dif_ls].gmean == doctest::Approx(0.1));
  CHECK_THROWS_AS(aggregate_trials({}), ConfigError);
}

TEST_CASE("C_beta") {
  const MonomialBasis b(2, 2);  // x1, x2, x1^2, x1 x2, x2^2
  Matrix x(2, 2);
  x << 1, 0.5,
       2, 0.25;
  const Vector c = compute_c_beta(b, x);
  CHECK(c(0) == 1.0);
  CHECK(c(1) == 1.0);
  CHECK(c(2) == doctest::Approx(2.0));   // 2 x1
  CHECK(c(3) == doctest::Approx(3.0));   // x2 + x1
  CHECK(c(4) == doctest::Approx(4.0));   // 2 x2
}

TEST_CASE("kappa factors and fourth derivatives") {
  CHECK(kappa_dif_factor() == doctest::Approx((9.0 + std::sqrt(3.0)) / 216.0));
  CHECK(kappa_int_factor() == doctest::Approx(1.0 / 120.0));
  const int p = 2049;
  Matrix s(2, p);
  for (int i = 0; i < p; ++i) {
    const double t = 4.0 * i / (p - 1);
    s(0, i) = std::sin(t);
    s(1, i) = t * t * t;
  }
  const Vector d4 = max_fourth_derivative(s, 0.0, 4.0);
  CHECK(d4(0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(d4(1)) < 1e-4);
  CHECK_THROWS_AS(max_fourth_derivative(Matrix::Ones(1, 5), 0.0, 1.0), ConfigError);
}

TEST_CASE("bounds on clean M1 data") {
  const Preset p = preset_m1();
  ExperimentConfig c;
  c.n_points = 60;
  SimulationOptions so;
  so.integrator.rel_tol = 1e-12;
  so.integrator.abs_tol = 1e-14;
  so.dictionary_integrals = true;
  auto [truth, clean] = simulate_experiments(p.model, *p.rates, 6, c, 4, so);
  auto ops1 = std::make_shared<const SplineOperators>(build_operators(UniformGrid(0.0, 20.0, 59)));
  const StackedOperators ops(ops1, 6);

  BoundInputs in{&truth, &clean, &ops, 0.0, 20.0};
  const BoundReport r = compute_bounds(in);
  CHECK(r.n == 59);
  CHECK(r.epsilon == 0.0);
  CHECK(r.kappas.dif.size() == 4);
  CHECK(r.kappas.integral.size() == 14);
  CHECK(r.J_inf >= 20.0 * (1 - 1e-12));  // last row integrates constants exactly
  CHECK(r.sigma_min_Dint > 0.0);
  const auto checks = verify_bounds(r);
  for (const Inequality& q : checks) {
    // Only the integral side is checked here; the differential end-knot bound is
    // exercised by the acceptance suite.
    if (q.name.find("int") != std::string::npos) {
      INFO(q.name << " " << q.lhs << " " << q.rhs);
      CHECK(q.holds);
    }
  }
  const auto j = nlohmann::json::parse(bounds_json(r, checks));
  CHECK(j["inequalities"].size() == checks.size());

  const TrajectoryBundle gauss = add_noise(clean, 1e-3, 5);
  BoundInputs g{&truth, &gauss, &ops, 0.0, 20.0};
  CHECK_THROWS_AS(compute_bounds(g), ConfigError);

  TrajectoryBundle no_integrals = clean;
  no_integrals.dictionary_integrals.resize(0, 0);
  BoundInputs ni{&truth, &no_integrals, &ops, 0.0, 20.0};
  CHECK_THROWS_AS(compute_bounds(ni), ConfigError);
}

TEST_CASE("method names") {
  CHECK(std::string(method_name(Method::dif_ls)) == "dif_ls");
  CHECK(std::string(method_name(Method::int_stls)) == "int_stls");
}
