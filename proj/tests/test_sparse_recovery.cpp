#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crn/error_analysis.hpp"
#include "crn/presets.hpp"
#include "crn/sparse_recovery.hpp"

#include <json.hpp>

using namespace crn;

namespace {

struct M1Data {
  CrnModel truth;
  TrajectoryBundle bundle;
  std::shared_ptr<const SplineOperators> ops;
};

M1Data m1_data(int points, int w, std::uint64_t seed) {
  const Preset p = preset_m1();
  ExperimentConfig c;
  c.n_points = points;
  SimulationOptions so;
  so.integrator.rel_tol = 1e-12;
  so.integrator.abs_tol = 1e-14;
  auto [truth, bundle] = simulate_experiments(p.model, *p.rates, w, c, seed, so);
  auto ops = std::make_shared<const SplineOperators>(build_operators(UniformGrid(0.0, 20.0, points - 1)));
  return {std::move(truth), std::move(bundle), ops};
}

}  // namespace

TEST_CASE("build_dictionary") {
  const MonomialBasis b(2, 2);
  const DictionaryMatrix ones = build_dictionary(b, Matrix::Ones(2, 1));
  CHECK(ones.D == Matrix::Ones(5, 1));
  Matrix x(2, 1);
  x << 2, 3;
  Vector expect(5);
  expect << 2, 3, 4, 6, 9;
  CHECK(build_dictionary(b, x).D.col(0) == expect);
  CHECK_THROWS_AS(build_dictionary(b, Matrix::Ones(3, 4)), ConfigError);
  CHECK_THROWS_AS(build_dictionary(b, Matrix::Ones(2, 5), 2), ConfigError);
}

TEST_CASE("noisy dictionary deviation is first order in the noise") {
  const MonomialBasis b(3, 2);
  const Matrix x = Matrix::Random(3, 50).cwiseAbs();
  const double eps = 1e-6;
  const Matrix xi = eps * Matrix::Random(3, 50);
  const Matrix delta = build_dictionary(b, x + xi).D - build_dictionary(b, x).D;
  const Vector c_beta = compute_c_beta(b, x);
  for (int beta = 0; beta < b.size(); ++beta) {
    CHECK(delta.row(beta).cwiseAbs().maxCoeff() <= eps * c_beta(beta) + 10 * eps * eps);
  }
}

TEST_CASE("formulation names") {
  CHECK(parse_formulation("dif") == Formulation::differential);
  CHECK(parse_formulation("integral") == Formulation::integral);
  CHECK(std::string(formulation_name(Formulation::differential)) == "differential");
  CHECK_THROWS_AS(parse_formulation("other"), ConfigError);
}

TEST_CASE("recover_ls on clean M1 data at n = 100") {
  const M1Data d = m1_data(100, 6, 21);
  const StackedOperators ops(d.ops, 6);
  const DictionaryMatrix dict = build_dictionary(d.truth.basis, d.bundle.X, 6);
  const RecoveryResult dif = recover_ls(Formulation::differential, d.bundle, dict, ops);
  const RecoveryResult integral = recover_ls(Formulation::integral, d.bundle, dict, ops);
  CHECK(dif.rank == 14);
  CHECK(integral.rank == 14);
  // Thresholds from a reference run: the differential error is limited by the O(h^3)
  // derivative error amplified by 1/sigma_min(D).
  CHECK(spectral_norm(dif.C_ls - d.truth.coefficients) <= 1e-1);
  CHECK(spectral_norm(integral.C_ls - d.truth.coefficients) <= 2e-3);
  CHECK(integral.C_stls.size() == 0);
}

TEST_CASE("single-experiment dictionary is rank deficient") {
  const M1Data d = m1_data(60, 1, 3);
  const StackedOperators ops(d.ops, 1);
  const DictionaryMatrix dict = build_dictionary(d.truth.basis, d.bundle.X, 1);
  const RecoveryResult r = recover_ls(Formulation::integral, d.bundle, dict, ops);
  CHECK(r.rank < 14);
  CHECK(r.C_ls.allFinite());
}

TEST_CASE("recover_problem on exact linear systems") {
  const Matrix d = Matrix::Random(6, 80);
  const Matrix c = Matrix::Random(3, 6);
  const RegressionProblem exact{c * d, d};
  const RecoveryResult r = recover_problem(Formulation::integral, exact, {}, false);
  CHECK((r.C_ls - c).norm() <= 1e-10 * c.norm());

  const RegressionProblem zero{Matrix::Zero(3, 80), d};
  CHECK(recover_problem(Formulation::integral, zero, {}, true).C_ls.isZero(1e-14));
  CHECK(recover_problem(Formulation::integral, zero, {}, true).zeroed == std::vector<bool>(3, true));

  const RegressionProblem empty{Matrix::Zero(3, 80), Matrix::Zero(6, 80)};
  CHECK_THROWS_AS(recover_problem(Formulation::integral, empty, {}, false), NumericalError);
  StlsOptions bad;
  bad.svd_cutoff = 1.5;
  CHECK_THROWS_AS(recover_problem(Formulation::integral, exact, bad, false), ConfigError);
}

TEST_CASE("STLS on two orthogonal columns") {
  Matrix reg = Matrix::Zero(2, 4);
  reg(0, 0) = 1.0;
  reg(0, 1) = 1.0;
  reg(1, 2) = 1.0;
  reg(1, 3) = -1.0;
  const Matrix y = 2.0 * reg.row(0);
  StlsOptions o;
  o.tau = 0.5;
  const StlsResult s = stls(y, reg, o);
  CHECK(s.C(0, 0) == doctest::Approx(2.0));
  CHECK(s.C(0, 1) == 0.0);
  CHECK(s.support(0, 0));
  CHECK_FALSE(s.support(0, 1));
  CHECK(s.iterations[0] >= 0);
  CHECK(s.iterations[0] <= 2);
  CHECK(s.converged[0]);
}

TEST_CASE("STLS with tiny tau equals plain least squares") {
  const Matrix d = Matrix::Random(5, 60);
  const Matrix y = Matrix::Random(2, 60);
  StlsOptions o;
  o.tau = 1e-300;
  const RecoveryResult r = recover_problem(Formulation::differential, {y, d}, o, true);
  CHECK((r.C_stls - r.C_ls).norm() < 1e-14);
  CHECK(r.support.count() == 10);
}

TEST_CASE("STLS invariants on noisy data") {
  const M1Data d = m1_data(50, 6, 8);
  const TrajectoryBundle noisy = add_noise(d.bundle, 1e-2, 4);
  const StackedOperators ops(d.ops, 6);
  const DictionaryMatrix dict = build_dictionary(d.truth.basis, noisy.X, 6);
  const RegressionProblem p = build_regression(Formulation::differential, noisy, dict, ops);
  StlsOptions o;
  o.tau = 5e-2;
  o.max_iter = 3;
  const StlsResult s = stls(p.targets, p.regression, o);
  RowRegression rr(p.regression, p.targets);
  for (int row = 0; row < 4; ++row) {
    // Supports only shrink.
    for (std::size_t k = 1; k < s.history[row].size(); ++k) {
      for (int j : s.history[row][k]) {
        CHECK(std::find(s.history[row][k - 1].begin(), s.history[row][k - 1].end(), j) !=
              s.history[row][k - 1].end());
      }
    }
    // Refit consistency.
    std::vector<int> support;
    for (int j = 0; j < 14; ++j) {
      if (s.support(row, j)) support.push_back(j);
    }
    if (!support.empty()) {
      const Vector refit = rr.solve(row, support, o.svd_cutoff);
      for (std::size_t j = 0; j < support.size(); ++j) {
        CHECK(refit(j) == doctest::Approx(s.C(row, support[j])).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("clean integral STLS recovers the M1 support at n = 100") {
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const M1Data d = m1_data(100, 6, derive_seed(100, trial));
    const StackedOperators ops(d.ops, 6);
    const DictionaryMatrix dict = build_dictionary(d.truth.basis, d.bundle.X, 6);
    const RecoveryResult r = recover(Formulation::integral, d.bundle, dict, ops);
    exact += support_mismatch(r.support, support_of(d.truth.coefficients)) == 0;
  }
  CHECK(exact >= 95);
}

TEST_CASE("recovery JSON") {
  const M1Data d = m1_data(30, 6, 2);
  const StackedOperators ops(d.ops, 6);
  const DictionaryMatrix dict = build_dictionary(d.truth.basis, d.bundle.X, 6);
  const RecoveryResult r = recover(Formulation::integral, d.bundle, dict, ops);
  const auto j = nlohmann::json::parse(recovery_json(r, d.truth.basis, d.truth.species_names));
  CHECK(j["formulation"] == "integral");
  CHECK(j["rank"] == 14);
  CHECK(j["C_stls"].size() == 4);
  CHECK(j["C_stls"][0].size() == 14);
}
