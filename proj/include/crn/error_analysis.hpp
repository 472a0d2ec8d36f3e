#pragma once

#include "crn/graph_recovery.hpp"
#include "crn/linalg.hpp"
#include "crn/mass_action.hpp"
#include "crn/sparse_recovery.hpp"
#include "crn/spline.hpp"
#include "crn/trajectory.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace crn {

enum class Method { dif_ls, dif_stls, int_ls, int_stls };
constexpr std::array<Method, 4> kMethods = {Method::dif_ls, Method::dif_stls, Method::int_ls,
                                            Method::int_stls};
const char* method_name(Method m);

/// Entries present in exactly one of the two masks.
int support_mismatch(const BoolMatrix& a, const BoolMatrix& b);
BoolMatrix support_of(const Matrix& c, double tol = 0.0);

struct MethodErrors {
  double spectral = 0.0;
  double frobenius = 0.0;
  int support_mismatch = 0;  // only meaningful for the STLS methods
  /// Symmetric difference of recovered and reference edge sets; empty when the Kirchhoff
  /// matrices differ in size or the graph step failed.
  std::optional<int> kirchhoff_mismatch;
};

struct ErrorReport {
  std::array<MethodErrors, 4> methods;  // indexed by Method
  std::uint64_t seed = 0;
  int n_points = 0;
  double noise_sd = 0.0;

  const MethodErrors& operator[](Method m) const { return methods[static_cast<int>(m)]; }
  MethodErrors& operator[](Method m) { return methods[static_cast<int>(m)]; }
};

/// Spectral/Frobenius errors of C_ls and C_stls against the true coefficients.
void compute_errors(const RecoveryResult& result, const Matrix& truth, ErrorReport& report);
ErrorReport compute_errors(const RecoveryResult& dif, const RecoveryResult& integral,
                           const Matrix& truth);

/// Max |f''''| per row of `samples`, estimated by finite differences on a uniform dense grid
/// over [t0, tn]. Central 5-point stencils inside, one-sided 6-point stencils at both ends.
/// The stencil spacing is a multiple of the sample spacing no smaller than (tn - t0)/512.
Vector max_fourth_derivative(const Matrix& samples, double t0, double tn);

struct Kappas {
  Vector dif;  // per species
  Vector integral;  // per dictionary row
};

double kappa_dif_factor();  // (9 + sqrt 3) / 216
double kappa_int_factor();  // 1 / 120

/// kappa_dif = (9+sqrt 3)/216 max|x''''| T^3 and kappa_int = 1/120 max|d''''| T^4 from dense
/// samples of the states (M x P) and dictionary (N x P).
Kappas compute_kappas(const Matrix& dense_states, const Matrix& dense_dictionary, double t0,
                      double tn);

/// Integrates each experiment of `bundle` on a dense grid and returns the kappas maximized
/// over experiments.
Kappas reference_kappas(const CrnModel& model, const TrajectoryBundle& bundle, double t0,
                        double tn, int dense_points = 2049);

/// C_beta = max_i sum_alpha |d d_beta / d x_alpha (X[:, i])|.
Vector compute_c_beta(const MonomialBasis& basis, const Matrix& X);

struct Inequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

struct BoundReport {
  int n = 0;  // intervals
  double epsilon = 0.0;
  Kappas kappas;
  Vector c_beta;
  double L_inf = 0.0;
  double J_inf = 0.0;
  Vector L_columns;  // ||L_{:,i}||_1
  Vector J_columns;
  // Measured error matrices over all experiments.
  Matrix E_dif;  // M x w(n+1)
  Matrix E_int;  // N x w(n+1)
  Matrix delta_xi;  // N x w(n+1), Dbar - D
  Matrix xi;        // M x w(n+1), Xbar - X
  Matrix xi0;       // noise of X - X_IVP
  double frobenius_bound_dif = 0.0;
  double frobenius_bound_int = 0.0;
  double coefficient_bound_dif = 0.0;
  double coefficient_bound_int = 0.0;
  /// Same as the integral coefficient bound but with the ||Xbar_0||_2 factor the
  /// perturbation decomposition produces on its second term.
  double coefficient_bound_int_scaled = 0.0;
  /// Coefficient bounds with the measured norms replaced by their a priori bounds
  /// (Frobenius bounds for E, epsilon C_max sqrt(N T) for the dictionary noise).
  double coefficient_bound_dif_apriori = 0.0;
  double coefficient_bound_int_apriori = 0.0;
  double coefficient_error_dif = 0.0;
  double coefficient_error_int = 0.0;
  double sigma_min_D = 0.0;
  double sigma_min_Dbar = 0.0;
  double sigma_min_Dint = 0.0;
  double sigma_min_DbarJ = 0.0;
  double sigma_max_Xdot = 0.0;
  double sigma_max_D = 0.0;
  double norm_Xbar0 = 0.0;
};

struct BoundInputs {
  const CrnModel* model = nullptr;
  const TrajectoryBundle* bundle = nullptr;  // noisy (or clean) observed data
  const StackedOperators* ops = nullptr;
  double t0 = 0.0;
  double tn = 0.0;
  double svd_cutoff = 1e-10;
  int dense_points = 2049;
};

/// Evaluates every quantity entering the entrywise, Frobenius and coefficient bounds.
/// The bundle must carry exact dictionary integrals and truncated (bounded) noise.
BoundReport compute_bounds(const BoundInputs& in);

/// Checks each displayed inequality. Terms that rely on the first-order expansion of the
/// dictionary noise carry the slack factor 1 + 10 epsilon.
std::vector<Inequality> verify_bounds(const BoundReport& report);

std::string bounds_json(const BoundReport& report, const std::vector<Inequality>& checks);

struct DecayFit {
  std::vector<double> n;
  std::vector<double> errors;
  double slope = 0.0;
  double intercept = 0.0;
  double reference_slope = 0.0;
  std::vector<std::string> warnings;
};

/// Least squares slope of log10(error) against log10(n). Nonpositive or non-finite errors
/// are dropped with a warning; fewer than 4 usable points is an error.
DecayFit fit_decay(const std::vector<double>& n, const std::vector<double>& errors,
                   double reference_slope = 0.0);

double geometric_mean(const std::vector<double>& values);

struct MethodSummary {
  double gmean = 0.0;
  double min = 0.0;
  double max = 0.0;
  int used = 0;                   // trials with a positive finite error
  std::array<int, 11> histogram{};  // mismatch 0..9, bin 10 collects >= 10
  std::map<int, int> kirchhoff;     // mismatch value -> count (size-matched trials only)
  int kirchhoff_size_mismatch = 0;
};

struct TrialSummary {
  int n_points = 0;
  int trials = 0;
  std::array<MethodSummary, 4> methods;
  const MethodSummary& operator[](Method m) const { return methods[static_cast<int>(m)]; }
};

TrialSummary aggregate_trials(const std::vector<ErrorReport>& reports);

}  // namespace crn
