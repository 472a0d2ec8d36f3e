#include "crn/sparse_recovery.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace crn {

DictionaryMatrix build_dictionary(const MonomialBasis& basis, const Matrix& X, int experiments) {
  if (X.rows() != basis.species_count()) {
    throw ConfigError("data has " + std::to_string(X.rows()) + " rows but the basis has " +
                      std::to_string(basis.species_count()) + " species");
  }
  if (experiments < 1 || X.cols() % experiments != 0) {
    throw ConfigError("data width is not a multiple of the experiment count");
  }
  DictionaryMatrix dict;
  dict.basis = basis;
  dict.experiments = experiments;
  dict.points = static_cast<int>(X.cols() / experiments);
  dict.D.resize(basis.size(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    dict.D.col(j) = evaluate_dictionary(basis, X.col(j));
  }
  return dict;
}

const char* formulation_name(Formulation f) {
  return f == Formulation::differential ? "differential" : "integral";
}

Formulation parse_formulation(const std::string& name) {
  if (name == "differential" || name == "dif") {
    return Formulation::differential;
  }
  if (name == "integral" || name == "int") {
    return Formulation::integral;
  }
  throw ConfigError("unknown formulation '" + name + "'");
}

RegressionProblem build_regression(Formulation f, const TrajectoryBundle& bundle,
                                   const DictionaryMatrix& dict, const StackedOperators& ops) {
  if (ops.experiments() != bundle.experiments || ops.block_size() != bundle.points()) {
    throw ConfigError("spline operators do not match the data grid or experiment count");
  }
  if (dict.D.cols() != bundle.X.cols()) {
    throw ConfigError("dictionary and data sample counts differ");
  }
  RegressionProblem p;
  if (f == Formulation::differential) {
    p.targets = ops.apply_L(bundle.X);
    p.regression = dict.D;
  } else {
    p.targets = bundle.X - bundle.X_ivp;
    p.regression = ops.apply_J(dict.D);
  }
  return p;
}

namespace {

std::vector<int> iota_support(int n) {
  std::vector<int> s(n);
  for (int i = 0; i < n; ++i) {
    s[i] = i;
  }
  return s;
}

}  // namespace

StlsResult stls(const RowRegression& problem, int species, const StlsOptions& options) {
  if (!(options.tau > 0.0)) {
    throw ConfigError("STLS threshold tau must be positive");
  }
  if (options.max_iter < 1) {
    throw ConfigError("STLS max_iter must be at least 1");
  }
  const int n = problem.unknowns();
  StlsResult out;
  out.C = Matrix::Zero(species, n);
  out.support = BoolMatrix::Constant(species, n, false);
  out.iterations.assign(species, 0);
  out.converged.assign(species, false);
  out.zeroed.assign(species, false);
  out.history.resize(species);

  for (int row = 0; row < species; ++row) {
    std::vector<int> support = iota_support(n);
    double residual = 0.0;
    Vector coeffs = problem.solve(row, support, options.svd_cutoff, &residual);
    out.history[row].push_back(support);

    std::vector<int> best_support = support;
    Vector best_coeffs = coeffs;
    double best_residual = residual;
    bool converged = false;
    int iterations = 0;

    while (true) {
      std::vector<int> next;
      for (std::size_t j = 0; j < support.size(); ++j) {
        if (std::abs(coeffs(j)) >= options.tau) {
          next.push_back(support[j]);
        }
      }
      if (next.size() == support.size()) {
        converged = true;
        break;
      }
      if (iterations == options.max_iter) {
        break;
      }
      ++iterations;
      support = std::move(next);
      out.history[row].push_back(support);
      if (support.empty()) {
        coeffs.resize(0);
        residual = problem.residual(row, Vector::Zero(n));
        converged = true;
        break;
      }
      coeffs = problem.solve(row, support, options.svd_cutoff, &residual);
      if (residual < best_residual) {
        best_residual = residual;
        best_support = support;
        best_coeffs = coeffs;
      }
    }

    if (!converged) {
      support = best_support;
      coeffs = best_coeffs;
    }
    for (std::size_t j = 0; j < support.size(); ++j) {
      out.C(row, support[j]) = coeffs(j);
      out.support(row, support[j]) = true;
    }
    out.iterations[row] = iterations;
    out.converged[row] = converged;
    out.zeroed[row] = support.empty();
  }
  return out;
}

StlsResult stls(const Matrix& targets, const Matrix& regression, const StlsOptions& options) {
  RowRegression problem(regression, targets);
  return stls(problem, static_cast<int>(targets.rows()), options);
}

RecoveryResult recover_problem(Formulation f, const RegressionProblem& problem,
                               const StlsOptions& options, bool with_stls) {
  if (!(options.svd_cutoff > 0.0 && options.svd_cutoff < 1.0)) {
    throw ConfigError("svd cutoff must lie in (0, 1)");
  }
  if (problem.regression.size() == 0 || problem.regression.cwiseAbs().maxCoeff() == 0.0) {
    throw NumericalError("dictionary matrix is identically zero");
  }
  const int species = static_cast<int>(problem.targets.rows());
  const int n = static_cast<int>(problem.regression.rows());
  RowRegression rr(problem.regression, problem.targets);

  RecoveryResult out;
  out.formulation = f;
  out.svd_cutoff = options.svd_cutoff;
  // R from the QR of the regression transpose has the same singular values.
  const SingularValues sv = numerical_rank(rr.r_factor(), options.svd_cutoff);
  out.rank = sv.rank;
  out.singular_values = sv.values;

  out.C_ls.resize(species, n);
  const std::vector<int> full = iota_support(n);
  double sq = 0.0;
  for (int row = 0; row < species; ++row) {
    double res = 0.0;
    out.C_ls.row(row) = rr.solve(row, full, options.svd_cutoff, &res).transpose();
    sq += res * res;
  }
  out.residual_ls = std::sqrt(sq);

  if (with_stls) {
    StlsResult s = stls(rr, species, options);
    out.C_stls = std::move(s.C);
    out.support = std::move(s.support);
    out.iterations = std::move(s.iterations);
    out.converged = std::move(s.converged);
    out.zeroed = std::move(s.zeroed);
    out.tau = options.tau;
    out.max_iter = options.max_iter;
    sq = 0.0;
    for (int row = 0; row < species; ++row) {
      const double r = rr.residual(row, out.C_stls.row(row).transpose());
      sq += r * r;
    }
    out.residual_fro = std::sqrt(sq);
  }
  return out;
}

RecoveryResult recover_ls(Formulation f, const TrajectoryBundle& bundle,
                          const DictionaryMatrix& dict, const StackedOperators& ops,
                          double svd_cutoff) {
  StlsOptions options;
  options.svd_cutoff = svd_cutoff;
  return recover_problem(f, build_regression(f, bundle, dict, ops), options, false);
}

RecoveryResult recover(Formulation f, const TrajectoryBundle& bundle, const DictionaryMatrix& dict,
                       const StackedOperators& ops, const StlsOptions& options) {
  return recover_problem(f, build_regression(f, bundle, dict, ops), options, true);
}

namespace {

nlohmann::json matrix_rows(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      r[j] = m(i, j);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

std::string recovery_json(const RecoveryResult& result, const MonomialBasis& basis,
                          const std::vector<std::string>& species) {
  nlohmann::json doc;
  doc["formulation"] = formulation_name(result.formulation);
  doc["tau"] = result.tau;
  doc["max_iter"] = result.max_iter;
  doc["svd_cutoff"] = result.svd_cutoff;
  doc["rank"] = result.rank;
  doc["residual_ls"] = result.residual_ls;
  doc["residual"] = result.residual_fro;
  doc["singular_values"] = std::vector<double>(result.singular_values.data(),
                                               result.singular_values.data() +
                                                   result.singular_values.size());
  std::vector<std::string> complexes;
  for (int i = 0; i < basis.size(); ++i) {
    complexes.push_back(basis.formula(i, species));
  }
  doc["species"] = species;
  doc["complexes"] = complexes;
  doc["C_ls"] = matrix_rows(result.C_ls);
  doc["C_stls"] = matrix_rows(result.C_stls);
  nlohmann::json mask = nlohmann::json::array();
  for (Eigen::Index i = 0; i < result.support.rows(); ++i) {
    std::vector<int> r(result.support.cols());
    for (Eigen::Index j = 0; j < result.support.cols(); ++j) {
      r[j] = result.support(i, j) ? 1 : 0;
    }
    mask.push_back(r);
  }
  doc["support"] = mask;
  doc["iterations"] = result.iterations;
  doc["converged"] = result.converged;
  doc["zeroed_rows"] = result.zeroed;
  return doc.dump(2);
}

}  // namespace crn
