#include "crn/error_analysis.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace crn {

const char* method_name(Method m) {
  switch (m) {
    case Method::dif_ls:
      return "dif_ls";
    case Method::dif_stls:
      return "dif_stls";
    case Method::int_ls:
      return "int_ls";
    case Method::int_stls:
      return "int_stls";
  }
  return "dif_ls";
}

int support_mismatch(const BoolMatrix& a, const BoolMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError("support masks differ in shape");
  }
  int count = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      count += a(i, j) != b(i, j) ? 1 : 0;
    }
  }
  return count;
}

BoolMatrix support_of(const Matrix& c, double tol) {
  BoolMatrix s(c.rows(), c.cols());
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      s(i, j) = std::abs(c(i, j)) > tol;
    }
  }
  return s;
}

void compute_errors(const RecoveryResult& result, const Matrix& truth, ErrorReport& report) {
  const bool dif = result.formulation == Formulation::differential;
  if (result.C_ls.rows() != truth.rows() || result.C_ls.cols() != truth.cols()) {
    throw ConfigError("recovered and true coefficient matrices differ in shape");
  }
  MethodErrors& ls = report[dif ? Method::dif_ls : Method::int_ls];
  ls.spectral = spectral_norm(result.C_ls - truth);
  ls.frobenius = (result.C_ls - truth).norm();
  ls.support_mismatch = support_mismatch(support_of(result.C_ls), support_of(truth));
  if (result.C_stls.size() > 0) {
    MethodErrors& st = report[dif ? Method::dif_stls : Method::int_stls];
    st.spectral = spectral_norm(result.C_stls - truth);
    st.frobenius = (result.C_stls - truth).norm();
    st.support_mismatch = support_mismatch(result.support, support_of(truth));
  }
}

ErrorReport compute_errors(const RecoveryResult& dif, const RecoveryResult& integral,
                           const Matrix& truth) {
  ErrorReport report;
  compute_errors(dif, truth, report);
  compute_errors(integral, truth, report);
  return report;
}

Vector max_fourth_derivative(const Matrix& samples, double t0, double tn) {
  const Eigen::Index p = samples.cols();
  if (p < 9) {
    throw ConfigError("fourth-derivative reference needs at least 9 samples");
  }
  if (!(tn > t0)) {
    throw ConfigError("reference interval must satisfy t0 < tn");
  }
  const double h = (tn - t0) / static_cast<double>(p - 1);
  Eigen::Index stride = static_cast<Eigen::Index>(std::ceil((tn - t0) / 512.0 / h - 1e-9));
  stride = std::clamp<Eigen::Index>(stride, 1, (p - 1) / 8);
  const double hs = h * static_cast<double>(stride);
  const double h4 = hs * hs * hs * hs;

  Vector out = Vector::Zero(samples.rows());
  for (Eigen::Index row = 0; row < samples.rows(); ++row) {
    auto f = [&](Eigen::Index k) { return samples(row, k); };
    double worst = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      double v;
      if (k - 2 * stride >= 0 && k + 2 * stride <= p - 1) {
        v = f(k - 2 * stride) - 4 * f(k - stride) + 6 * f(k) - 4 * f(k + stride) +
            f(k + 2 * stride);
      } else if (k - 2 * stride < 0) {
        v = 3 * f(k) - 14 * f(k + stride) + 26 * f(k + 2 * stride) - 24 * f(k + 3 * stride) +
            11 * f(k + 4 * stride) - 2 * f(k + 5 * stride);
      } else {
        v = 3 * f(k) - 14 * f(k - stride) + 26 * f(k - 2 * stride) - 24 * f(k - 3 * stride) +
            11 * f(k - 4 * stride) - 2 * f(k - 5 * stride);
      }
      worst = std::max(worst, std::abs(v) / h4);
    }
    out(row) = worst;
  }
  return out;
}

double kappa_dif_factor() { return (9.0 + std::sqrt(3.0)) / 216.0; }
double kappa_int_factor() { return 1.0 / 120.0; }

Kappas compute_kappas(const Matrix& dense_states, const Matrix& dense_dictionary, double t0,
                      double tn) {
  const double span = tn - t0;
  Kappas k;
  k.dif = kappa_dif_factor() * span * span * span * max_fourth_derivative(dense_states, t0, tn);
  k.integral = kappa_int_factor() * span * span * span * span *
               max_fourth_derivative(dense_dictionary, t0, tn);
  return k;
}

Kappas reference_kappas(const CrnModel& model, const TrajectoryBundle& bundle, double t0,
                        double tn, int dense_points) {
  const Vector grid = uniform_grid(t0, tn, dense_points);
  IntegratorOptions tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  Kappas out;
  out.dif = Vector::Zero(model.species_count());
  out.integral = Vector::Zero(model.complex_count());
  for (int b = 0; b < bundle.experiments; ++b) {
    const Vector x0 = bundle.X_clean.col(static_cast<Eigen::Index>(b) * bundle.points());
    const Trajectory traj = integrate_at(model, x0, grid, tight);
    Matrix dict(model.complex_count(), grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      dict.col(j) = evaluate_dictionary(model.basis, traj.states.col(j));
    }
    const Kappas k = compute_kappas(traj.states, dict, t0, tn);
    out.dif = out.dif.cwiseMax(k.dif);
    out.integral = out.integral.cwiseMax(k.integral);
  }
  return out;
}

Vector compute_c_beta(const MonomialBasis& basis, const Matrix& X) {
  if (X.rows() != basis.species_count()) {
    throw ConfigError("data rows do not match basis species count");
  }
  Vector c = Vector::Zero(basis.size());
  for (int beta = 0; beta < basis.size(); ++beta) {
    const Exponent& e = basis.exponent(beta);
    for (Eigen::Index col = 0; col < X.cols(); ++col) {
      double total = 0.0;
      for (int alpha = 0; alpha < basis.species_count(); ++alpha) {
        if (e[alpha] == 0) {
          continue;
        }
        double term = e[alpha];
        for (int g = 0; g < basis.species_count(); ++g) {
          const int power = g == alpha ? e[g] - 1 : e[g];
          for (int q = 0; q < power; ++q) {
            term *= X(g, col);
          }
        }
        total += std::abs(term);
      }
      c(beta) = std::max(c(beta), total);
    }
  }
  return c;
}

namespace {

// min ||targets - C regression||_F over C, all rows, truncated SVD.
Matrix least_squares(const Matrix& targets, const Matrix& regression, double cutoff) {
  RowRegression rr(regression, targets);
  std::vector<int> full(regression.rows());
  for (int i = 0; i < static_cast<int>(full.size()); ++i) {
    full[i] = i;
  }
  Matrix c(targets.rows(), regression.rows());
  for (int row = 0; row < targets.rows(); ++row) {
    c.row(row) = rr.solve(row, full, cutoff).transpose();
  }
  return c;
}

// N-th singular value of an N x T matrix (T >= N).
double sigma_rows(const Matrix& a) {
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  return a.rows() <= a.cols() ? s(a.rows() - 1) : 0.0;
}

constexpr double kGolden = 1.6180339887498949;

}  // namespace

BoundReport compute_bounds(const BoundInputs& in) {
  if (in.model == nullptr || in.bundle == nullptr || in.ops == nullptr) {
    throw ConfigError("bound evaluation needs a model, a bundle and operators");
  }
  const CrnModel& model = *in.model;
  const TrajectoryBundle& bundle = *in.bundle;
  const StackedOperators& ops = *in.ops;
  if (bundle.noise_sd > 0.0 && bundle.noise_kind != NoiseKind::truncated) {
    throw ConfigError(
        "bound verification needs bounded noise; rerun with truncated noise "
        "(--noise-kind truncated)");
  }
  if (bundle.dictionary_integrals.cols() != bundle.X.cols()) {
    throw ConfigError("bound verification needs exact dictionary integrals in the bundle");
  }
  if (ops.experiments() != bundle.experiments || ops.block_size() != bundle.points()) {
    throw ConfigError("spline operators do not match the data grid or experiment count");
  }

  BoundReport r;
  r.n = bundle.intervals();
  r.epsilon = bundle.noise_sd > 0.0 ? bundle.noise_bound : 0.0;
  const double eps = r.epsilon;
  const double n = r.n;
  const int m = model.species_count();
  const int nb = model.complex_count();
  const double samples = static_cast<double>(bundle.X.cols());

  const Matrix D = build_dictionary(model.basis, bundle.X_clean, bundle.experiments).D;
  const Matrix Dbar = build_dictionary(model.basis, bundle.X, bundle.experiments).D;
  const Matrix& Dint = bundle.dictionary_integrals;
  const Matrix DbarJ = ops.apply_J(Dbar);

  r.E_dif = bundle.X_dot - ops.apply_L(bundle.X);
  r.E_int = Dint - DbarJ;
  r.delta_xi = Dbar - D;
  r.xi = bundle.X - bundle.X_clean;
  const Matrix X0 = bundle.X_clean - initial_value_matrix(bundle.X_clean, bundle.experiments,
                                                          bundle.points());
  const Matrix Xbar0 = bundle.X - bundle.X_ivp;
  r.xi0 = Xbar0 - X0;

  r.kappas = reference_kappas(model, bundle, in.t0, in.tn, in.dense_points);
  r.c_beta = compute_c_beta(model.basis, bundle.X_clean);
  const OperatorNorms norms = operator_norms(ops.base());
  r.L_inf = norms.L_inf;
  r.J_inf = norms.J_inf;
  r.L_columns = norms.L_columns;
  r.J_columns = norms.J_columns;

  const double slack = 1.0 + 10.0 * eps;
  const double c_max = r.c_beta.maxCoeff();
  r.frobenius_bound_dif =
      std::sqrt(m * samples) * (r.kappas.dif.maxCoeff() / (n * n * n) + eps * r.L_inf);
  r.frobenius_bound_int = std::sqrt(nb * samples) *
                          (r.kappas.integral.maxCoeff() / (n * n * n * n) + eps * c_max * r.J_inf) *
                          slack;

  r.sigma_min_D = sigma_rows(D);
  r.sigma_min_Dbar = sigma_rows(Dbar);
  r.sigma_min_Dint = sigma_rows(Dint);
  r.sigma_min_DbarJ = sigma_rows(DbarJ);
  r.sigma_max_Xdot = spectral_norm(bundle.X_dot);
  r.sigma_max_D = spectral_norm(D);
  r.norm_Xbar0 = spectral_norm(Xbar0);

  const Matrix C_dif = least_squares(bundle.X_dot, D, in.svd_cutoff);
  const Matrix Cbar_dif = least_squares(ops.apply_L(bundle.X), Dbar, in.svd_cutoff);
  const Matrix C_int = least_squares(X0, Dint, in.svd_cutoff);
  const Matrix Cbar_int = least_squares(Xbar0, DbarJ, in.svd_cutoff);
  r.coefficient_error_dif = spectral_norm(C_dif - Cbar_dif);
  r.coefficient_error_int = spectral_norm(C_int - Cbar_int);

  const double e_dif2 = spectral_norm(r.E_dif);
  const double e_int2 = spectral_norm(r.E_int);
  const double delta2 = spectral_norm(r.delta_xi);
  const double xi0_2 = spectral_norm(r.xi0);
  r.coefficient_bound_dif =
      kGolden * delta2 * r.sigma_max_Xdot / (r.sigma_min_D * r.sigma_min_Dbar) +
      e_dif2 / r.sigma_min_Dbar;
  r.coefficient_bound_int =
      kGolden * e_int2 / (r.sigma_min_Dint * r.sigma_min_DbarJ) + xi0_2 / r.sigma_min_Dint;
  r.coefficient_bound_int_scaled =
      kGolden * r.norm_Xbar0 * e_int2 / (r.sigma_min_Dint * r.sigma_min_DbarJ) +
      xi0_2 / r.sigma_min_Dint;

  // X - X_IVP differences two noisy samples, so its entries are bounded by 2 epsilon.
  const double delta_apriori = eps * std::sqrt(nb * samples) * c_max * slack;
  const double xi0_apriori = 2.0 * eps * std::sqrt(m * samples);
  r.coefficient_bound_dif_apriori =
      kGolden * delta_apriori * r.sigma_max_Xdot / (r.sigma_min_D * r.sigma_min_Dbar) +
      r.frobenius_bound_dif / r.sigma_min_Dbar;
  r.coefficient_bound_int_apriori =
      kGolden * r.frobenius_bound_int / (r.sigma_min_Dint * r.sigma_min_DbarJ) +
      xi0_apriori / r.sigma_min_Dint;
  return r;
}

namespace {

// Worst ratio |a| / bound over all entries, reported as the (lhs, rhs) pair attaining it.
// `floor` absorbs rounding in entries whose bound is zero.
template <class BoundFn>
Inequality entrywise(const std::string& name, const Matrix& a, BoundFn bound, double floor) {
  Inequality q;
  q.name = name;
  double worst = -1.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double rhs = bound(i, j) + floor;
      const double lhs = std::abs(a(i, j));
      const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (ratio > worst) {
        worst = ratio;
        q.lhs = lhs;
        q.rhs = rhs;
      }
    }
  }
  q.holds = worst <= 1.0;
  return q;
}

Inequality scalar(const std::string& name, double lhs, double rhs) {
  return {name, lhs, rhs, lhs <= rhs};
}

}  // namespace

std::vector<Inequality> verify_bounds(const BoundReport& r) {
  const double eps = r.epsilon;
  const double n = r.n;
  const Eigen::Index block = r.n + 1;
  const double slack = 1.0 + 10.0 * eps;
  constexpr double unit = std::numeric_limits<double>::epsilon();
  std::vector<Inequality> out;

  const Vector& l_cols = r.L_columns;
  const Vector& j_cols = r.J_columns;
  const double floor_dif = 64 * unit * std::max(1.0, r.sigma_max_Xdot);
  const double floor_int = 64 * unit * std::max(1.0, r.E_int.cwiseAbs().maxCoeff());

  out.push_back(entrywise(
      "entrywise_dif", r.E_dif,
      [&](Eigen::Index a, Eigen::Index j) {
        return r.kappas.dif(a) / (n * n * n) + eps * l_cols(j % block);
      },
      floor_dif));
  out.push_back(entrywise(
      "entrywise_int", r.E_int,
      [&](Eigen::Index b, Eigen::Index j) {
        return (r.kappas.integral(b) / (n * n * n * n) + eps * r.c_beta(b) * j_cols(j % block)) *
               slack;
      },
      floor_int));
  out.push_back(entrywise(
      "data_noise", r.xi, [&](Eigen::Index, Eigen::Index) { return eps; }, 0.0));
  out.push_back(entrywise(
      "dictionary_noise", r.delta_xi,
      [&](Eigen::Index b, Eigen::Index) { return eps * r.c_beta(b) * slack; }, 0.0));
  const double e_dif_f = r.E_dif.norm();
  const double e_int_f = r.E_int.norm();
  out.push_back(scalar("spectral_le_frobenius_dif", spectral_norm(r.E_dif), e_dif_f));
  out.push_back(scalar("spectral_le_frobenius_int", spectral_norm(r.E_int), e_int_f));
  out.push_back(scalar("frobenius_dif", e_dif_f, r.frobenius_bound_dif));
  out.push_back(scalar("frobenius_int", e_int_f, r.frobenius_bound_int));
  out.push_back(scalar("coefficient_dif", r.coefficient_error_dif, r.coefficient_bound_dif));
  out.push_back(scalar("coefficient_int", r.coefficient_error_int, r.coefficient_bound_int));
  return out;
}

std::string bounds_json(const BoundReport& r, const std::vector<Inequality>& checks) {
  nlohmann::json doc;
  doc["n"] = r.n;
  doc["epsilon"] = r.epsilon;
  doc["kappa_dif"] = std::vector<double>(r.kappas.dif.data(), r.kappas.dif.data() + r.kappas.dif.size());
  doc["kappa_int"] = std::vector<double>(r.kappas.integral.data(),
                                         r.kappas.integral.data() + r.kappas.integral.size());
  doc["C_beta"] = std::vector<double>(r.c_beta.data(), r.c_beta.data() + r.c_beta.size());
  doc["L_inf"] = r.L_inf;
  doc["J_inf"] = r.J_inf;
  doc["frobenius_bound_dif"] = r.frobenius_bound_dif;
  doc["frobenius_bound_int"] = r.frobenius_bound_int;
  doc["coefficient_bound_dif"] = r.coefficient_bound_dif;
  doc["coefficient_bound_int"] = r.coefficient_bound_int;
  doc["coefficient_bound_int_scaled"] = r.coefficient_bound_int_scaled;
  doc["coefficient_bound_dif_apriori"] = r.coefficient_bound_dif_apriori;
  doc["coefficient_bound_int_apriori"] = r.coefficient_bound_int_apriori;
  doc["coefficient_error_dif"] = r.coefficient_error_dif;
  doc["coefficient_error_int"] = r.coefficient_error_int;
  doc["sigma_min_D"] = r.sigma_min_D;
  doc["sigma_min_Dbar"] = r.sigma_min_Dbar;
  doc["sigma_min_Dint"] = r.sigma_min_Dint;
  doc["sigma_min_DbarJ"] = r.sigma_min_DbarJ;
  doc["sigma_max_Xdot"] = r.sigma_max_Xdot;
  doc["norm_Xbar0"] = r.norm_Xbar0;
  nlohmann::json list = nlohmann::json::array();
  for (const Inequality& q : checks) {
    list.push_back({{"name", q.name},
                    {"lhs", q.lhs},
                    {"rhs", q.rhs},
                    {"margin", q.rhs - q.lhs},
                    {"holds", q.holds}});
  }
  doc["inequalities"] = list;
  return doc.dump(2);
}

DecayFit fit_decay(const std::vector<double>& n, const std::vector<double>& errors,
                   double reference_slope) {
  if (n.size() != errors.size()) {
    throw ConfigError("decay fit needs matching n and error lists");
  }
  DecayFit fit;
  fit.reference_slope = reference_slope;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i]) || !(n[i] > 0.0)) {
      fit.warnings.push_back("dropped n=" + std::to_string(n[i]) +
                             " (nonpositive or non-finite error)");
      continue;
    }
    fit.n.push_back(n[i]);
    fit.errors.push_back(errors[i]);
  }
  if (fit.n.size() < 4) {
    throw ConfigError("decay fit needs at least 4 usable sweep points");
  }
  const Eigen::Index k = static_cast<Eigen::Index>(fit.n.size());
  Matrix a(k, 2);
  Vector y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    a(i, 0) = std::log10(fit.n[i]);
    a(i, 1) = 1.0;
    y(i) = std::log10(fit.errors[i]);
  }
  const Vector coef = a.colPivHouseholderQr().solve(y);
  fit.slope = coef(0);
  fit.intercept = coef(1);
  return fit;
}

double geometric_mean(const std::vector<double>& values) {
  double sum = 0.0;
  int used = 0;
  for (double v : values) {
    if (v > 0.0 && std::isfinite(v)) {
      sum += std::log(v);
      ++used;
    }
  }
  if (used == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::exp(sum / used);
}

TrialSummary aggregate_trials(const std::vector<ErrorReport>& reports) {
  if (reports.empty()) {
    throw ConfigError("cannot aggregate an empty trial list");
  }
  TrialSummary s;
  s.trials = static_cast<int>(reports.size());
  s.n_points = reports.front().n_points;
  for (Method m : kMethods) {
    MethodSummary& ms = s.methods[static_cast<int>(m)];
    std::vector<double> values;
    ms.min = std::numeric_limits<double>::infinity();
    ms.max = 0.0;
    for (const ErrorReport& r : reports) {
      const MethodErrors& e = r[m];
      values.push_back(e.spectral);
      if (e.spectral > 0.0 && std::isfinite(e.spectral)) {
        ++ms.used;
        ms.min = std::min(ms.min, e.spectral);
        ms.max = std::max(ms.max, e.spectral);
      }
      ++ms.histogram[std::min(e.support_mismatch, 10)];
      if (e.kirchhoff_mismatch) {
        ++ms.kirchhoff[*e.kirchhoff_mismatch];
      } else {
        ++ms.kirchhoff_size_mismatch;
      }
    }
    ms.gmean = geometric_mean(values);
    if (ms.used == 0) {
      ms.min = 0.0;
    }
  }
  return s;
}

}  // namespace crn
