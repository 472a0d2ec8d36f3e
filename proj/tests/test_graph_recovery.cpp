#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crn/driver.hpp"

#include <json.hpp>

#include <random>

using namespace crn;

namespace {

Exponent ex(std::initializer_list<int> v) { return Exponent(v); }

void check_fit_invariants(const KirchhoffFit& fit) {
  const Matrix& k = fit.K;
  for (int j = 0; j < k.cols(); ++j) {
    CHECK(std::abs(k.col(j).sum()) <= 1e-14 * std::max(1.0, k.cwiseAbs().maxCoeff()));
    for (int i = 0; i < k.rows(); ++i) {
      if (i != j) CHECK(k(i, j) >= 0.0);
    }
  }
  for (const Edge& e : fit.edges) {
    CHECK(k(e.target, e.source) > fit.edge_tol);
  }
}

}  // namespace

TEST_CASE("filter_effective on exact M1 coefficients") {
  const Preset p = preset_m1();
  const EffectiveModel m = filter_effective(p.model.coefficients, p.model.basis, 1e-3,
                                            Scheme::active_columns);
  REQUIRE(m.sources() == 3);
  std::set<Exponent> sources;
  for (int i : m.source_indices) sources.insert(p.model.basis.exponent(i));
  CHECK(sources == std::set<Exponent>{ex({1, 0, 1, 0}), ex({0, 0, 0, 1}), ex({0, 1, 1, 0})});
  for (int c = 0; c < m.dim(); ++c) {
    for (int a = 0; a < 4; ++a) {
      CHECK(m.Q_eff(a, c) == p.model.basis.exponent(m.source_indices[c])[a]);
    }
  }
  CHECK_THROWS_AS(filter_effective(Matrix::Zero(4, 14), p.model.basis, 1e-3, Scheme::active_columns),
                  EmptyModelError);
}

TEST_CASE("M20 inactive complexes are invisible to active_columns") {
  const Preset p = preset_m20();
  const EffectiveModel m = filter_effective(p.model.coefficients, p.model.basis, 1e-3,
                                            Scheme::active_columns);
  for (int i : m.source_indices) {
    CHECK(p.model.basis.exponent(i) != ex({0, 0, 0, 0, 1, 0}));
    CHECK(p.model.basis.exponent(i) != ex({0, 0, 0, 0, 0, 1}));
  }
  const EffectiveModel all = filter_effective(p.model.coefficients, p.model.basis, 1e-3,
                                              Scheme::species_as_sources);
  // species_as_sources keeps a superset of the degree-1 active sources.
  for (int i : m.source_indices) {
    if (p.model.basis.degree(i) == 1) {
      CHECK(std::find(all.source_indices.begin(), all.source_indices.end(), i) !=
            all.source_indices.end());
    }
  }
  int degree_one = 0;
  for (int i : all.source_indices) degree_one += p.model.basis.degree(i) == 1;
  CHECK(degree_one == 6);
}

TEST_CASE("zero complex") {
  const Preset p = preset_m1();
  const EffectiveModel m = filter_effective(p.model.coefficients, p.model.basis, 1e-3,
                                            Scheme::active_columns);
  const EffectiveModel z = append_zero_complex(m);
  CHECK(z.zero_complex);
  CHECK(z.dim() == m.dim() + 1);
  CHECK(z.Q_eff.col(z.dim() - 1).isZero(0.0));
  CHECK_THROWS_AS(append_zero_complex(z), ConfigError);

  // Closed network: sink edges fit to zero.
  const KirchhoffFit fit = fit_kirchhoff(z);
  CHECK(fit.K.row(z.dim() - 1).cwiseAbs().maxCoeff() <= fit.edge_tol);
  check_fit_invariants(fit);

  const EffectiveModel auto_zero = filter_effective(p.model.coefficients, p.model.basis, 1e-3,
                                                    Scheme::active_plus_zero);
  CHECK(auto_zero.zero_complex);
}

TEST_CASE("M20 sinks appear on the zero complex") {
  const Preset p = preset_m20();
  const EffectiveModel z = filter_effective(p.model.coefficients, p.model.basis, 1e-3,
                                            Scheme::active_plus_zero);
  const KirchhoffFit fit = fit_kirchhoff(z);
  check_fit_invariants(fit);
  const auto keys = edge_keys(fit, z, p.model.basis);
  const Exponent zero(6, 0);
  CHECK(std::find(keys.begin(), keys.end(), EdgeKey{ex({0, 0, 1, 0, 0, 0}), zero}) != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), EdgeKey{ex({0, 0, 0, 1, 0, 0}), zero}) != keys.end());
  CHECK(keys == edge_keys(p.model, true));
}

TEST_CASE("exact coefficients give the exact graph") {
  for (const std::string name : {"m1", "vdv"}) {
    const Preset p = preset_by_name(name);
    const EffectiveModel m = filter_effective(p.model.coefficients, p.model.basis, 1e-6, p.scheme);
    const KirchhoffFit fit = fit_kirchhoff(m);
    check_fit_invariants(fit);
    CHECK(edge_keys(fit, m, p.model.basis) == edge_keys(p.model));
    CHECK(fit.residual_fro < 1e-12);
  }
  const Preset m20 = preset_m20();
  const EffectiveModel m = filter_effective(m20.model.coefficients, m20.model.basis, 1e-6,
                                            Scheme::species_as_sources);
  CHECK(edge_keys(fit_kirchhoff(m), m, m20.model.basis) == edge_keys(m20.model));
}

TEST_CASE("fit_kirchhoff construct-and-recover") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 3 + trial % 4;
    EffectiveModel m;
    m.Q_eff = Matrix::Identity(r, r) + 0.3 * Matrix::NullaryExpr(r, r, [&] { return unit(rng); });
    Matrix k = Matrix::Zero(r, r);
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i < r; ++i) {
        if (i != j && unit(rng) < 0.6) k(i, j) = 0.1 + unit(rng);
      }
      k(j, j) = -k.col(j).sum();
    }
    m.C_eff = m.Q_eff * k;
    for (int i = 0; i < r; ++i) m.source_indices.push_back(i);
    const KirchhoffFit fit = fit_kirchhoff(m);
    check_fit_invariants(fit);
    CHECK((fit.K - k).norm() <= 1e-8 * std::max(1.0, k.norm()));
    CHECK(fit.residual_fro <= 1e-10);
    CHECK(kirchhoff_kkt_residual(m, fit.K) <= 1e-8);
    CHECK_FALSE(fit.degenerate);
  }
}

TEST_CASE("fit_kirchhoff on zero coefficients") {
  EffectiveModel m;
  m.Q_eff = Matrix::Identity(3, 3);
  m.C_eff = Matrix::Zero(3, 3);
  m.source_indices = {0, 1, 2};
  const KirchhoffFit fit = fit_kirchhoff(m);
  CHECK(fit.K.isZero(0.0));
  CHECK(fit.residual_fro == 0.0);
  CHECK(fit.edges.empty());
}

TEST_CASE("degenerate designs are flagged") {
  EffectiveModel m;
  m.Q_eff = Matrix::Ones(2, 3);  // all complexes identical: q_i - q_j = 0
  m.C_eff = Matrix::Zero(2, 3);
  m.source_indices = {0, 1, 2};
  const KirchhoffFit fit = fit_kirchhoff(m);
  CHECK(fit.degenerate);
  check_fit_invariants(fit);
}

TEST_CASE("NNLS solvers agree and satisfy KKT") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = Matrix::NullaryExpr(12, 5, [&] { return g(rng); });
    const Vector b = Vector::NullaryExpr(12, [&] { return g(rng); });
    const NnlsResult lh = nnls(a, b);
    const NnlsResult pg = nnls_projected_gradient(a, b);
    CHECK(lh.converged);
    CHECK(lh.x.minCoeff() >= 0.0);
    CHECK((lh.x - pg.x).norm() < 1e-6);
    const Vector grad = a.transpose() * (a * lh.x - b);
    for (int i = 0; i < 5; ++i) {
      if (lh.x(i) > 0) CHECK(std::abs(grad(i)) < 1e-9);
      else CHECK(grad(i) > -1e-9);
    }
  }
}

TEST_CASE("graph export") {
  const Preset p = preset_m1();
  const EffectiveModel m = filter_effective(p.model.coefficients, p.model.basis, 1e-3,
                                            Scheme::active_columns);
  const KirchhoffFit fit = fit_kirchhoff(m);
  const std::string dot = export_dot(fit, m, p.model.basis, p.model.species_names);
  CHECK(std::count(dot.begin(), dot.end(), '>') == 4);
  CHECK(dot.find("label=\"A + cat\"") != std::string::npos);
  CHECK(dot.find("label=\"1\"") != std::string::npos);
  CHECK(dot == export_dot(fit, m, p.model.basis, p.model.species_names));

  const EffectiveModel z = append_zero_complex(m);
  const std::string dz = export_dot(fit_kirchhoff(z), z, p.model.basis, p.model.species_names);
  CHECK(dz.find("∅") != std::string::npos);

  KirchhoffFit none = fit;
  none.edges.clear();
  const std::string nodes_only = export_dot(none, m, p.model.basis, p.model.species_names);
  CHECK(nodes_only.find("->") == std::string::npos);
  CHECK(nodes_only.find("c2 [") != std::string::npos);

  const auto j = nlohmann::json::parse(kirchhoff_json(fit, m, p.model.basis, p.model.species_names));
  CHECK(j["edges"].size() == 4);
  CHECK(j["scheme"] == "active_columns");
}

TEST_CASE("M1 graph from clean data at n = 30") {
  // tau just below the smallest sampled rate; the default 1e-2 keeps spurious support
  // entries at this resolution in roughly half the trials.
  nlohmann::json o = {{"model", "m1"}, {"seed", 30}, {"tau", 4e-2}, {"edge_tol", 4e-2}};
  const RunConfig cfg = resolve_config("m1", nullptr, o);
  const ModelContext ctx = load_model_context(cfg);
  OperatorCache cache(cfg.t0, cfg.tn);
  TrialOptions to;
  to.recover_dif = false;
  to.kirchhoff = false;
  int exact = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const TrialResult r = run_trial(cfg, ctx, cache.get(30), trial_seed(cfg.seed, trial), to);
    REQUIRE(r.ok);
    const GraphResult g = recover_graph(r.integral.C_stls, r.truth.basis, cfg);
    exact += edge_keys(g.fit, g.effective, r.truth.basis) == edge_keys(r.truth);
  }
  CHECK(exact >= 17);
}

TEST_CASE("scheme names") {
  CHECK(parse_scheme("active_plus_zero") == Scheme::active_plus_zero);
  CHECK(std::string(scheme_name(Scheme::species_as_sources)) == "species_as_sources");
  CHECK_THROWS_AS(parse_scheme("bogus"), ConfigError);
}
