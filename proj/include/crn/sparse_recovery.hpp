#pragma once

#include "crn/linalg.hpp"
#include "crn/mass_action.hpp"
#include "crn/spline.hpp"
#include "crn/trajectory.hpp"

#include <string>
#include <vector>

namespace crn {

/// D(i, j) = d_i(X[:, j]) for all samples of all experiments.
struct DictionaryMatrix {
  MonomialBasis basis;
  Matrix D;             // N x w(n+1)
  int experiments = 1;  // w
  int points = 0;       // n + 1 per block
};

DictionaryMatrix build_dictionary(const MonomialBasis& basis, const Matrix& X, int experiments = 1);

enum class Formulation { differential, integral };

const char* formulation_name(Formulation f);
Formulation parse_formulation(const std::string& name);

/// Regression pair  min_C || targets - C regression ||_F.
///   differential: targets = X L~,       regression = D
///   integral:     targets = X - X_IVP,  regression = D J~
struct RegressionProblem {
  Matrix targets;     // M x T
  Matrix regression;  // N x T
};

RegressionProblem build_regression(Formulation f, const TrajectoryBundle& bundle,
                                   const DictionaryMatrix& dict, const StackedOperators& ops);

struct StlsOptions {
  double tau = 1e-2;
  int max_iter = 20;
  double svd_cutoff = 1e-10;
};

struct StlsResult {
  Matrix C;                         // M x N
  BoolMatrix support;               // M x N
  std::vector<int> iterations;      // per row, number of refits after the initial solve
  std::vector<bool> converged;      // support reached a fixed point
  std::vector<bool> zeroed;         // every coefficient thresholded away
  /// Supports visited per row, in order; each is a subset of the previous one.
  std::vector<std::vector<std::vector<int>>> history;
};

/// Row-wise sequentially thresholded least squares: solve on the current support, drop
/// entries with |c| < tau, repeat until the support is a fixed point. Rows that do not
/// settle within max_iter return the visited iterate with the smallest residual.
StlsResult stls(const RowRegression& problem, int species, const StlsOptions& options);
StlsResult stls(const Matrix& targets, const Matrix& regression, const StlsOptions& options);

struct RecoveryResult {
  Formulation formulation = Formulation::integral;
  Matrix C_ls;
  Matrix C_stls;
  BoolMatrix support;
  double residual_ls = 0.0;    // ||targets - C_ls regression||_F
  double residual_fro = 0.0;   // same for C_stls
  int rank = 0;
  Vector singular_values;      // of the regression matrix
  double tau = 0.0;
  int max_iter = 0;
  double svd_cutoff = 0.0;
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<bool> zeroed;
};

/// Unregularized least squares only (C_stls left empty).
RecoveryResult recover_ls(Formulation f, const TrajectoryBundle& bundle,
                          const DictionaryMatrix& dict, const StackedOperators& ops,
                          double svd_cutoff = 1e-10);

/// Least squares followed by STLS on the same regression problem.
RecoveryResult recover(Formulation f, const TrajectoryBundle& bundle, const DictionaryMatrix& dict,
                       const StackedOperators& ops, const StlsOptions& options = {});

/// Same as above on an explicit regression problem (no spline operators involved).
RecoveryResult recover_problem(Formulation f, const RegressionProblem& problem,
                               const StlsOptions& options, bool with_stls = true);

std::string recovery_json(const RecoveryResult& result, const MonomialBasis& basis,
                          const std::vector<std::string>& species);

}  // namespace crn
