#pragma once

#include "crn/linalg.hpp"
#include "crn/mass_action.hpp"

#include <string>
#include <tuple>
#include <vector>

namespace crn {

enum class Scheme { active_columns, active_plus_zero, species_as_sources };

const char* scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

/// Dense reduction of a sparse coefficient matrix to its source complexes.
struct EffectiveModel {
  Matrix C_eff;                     // M x r' (zero column for the zero complex)
  Matrix Q_eff;                     // M x r'
  std::vector<int> source_indices;  // length r, into the basis
  Scheme scheme = Scheme::active_columns;
  bool zero_complex = false;

  int sources() const { return static_cast<int>(source_indices.size()); }
  int dim() const { return static_cast<int>(Q_eff.cols()); }
};

/// Keeps columns whose max |entry| exceeds tau. species_as_sources keeps every degree-1
/// column and thresholds only the nonlinear ones; active_plus_zero also appends the zero
/// complex. Throws EmptyModelError when no column survives.
EffectiveModel filter_effective(const Matrix& C, const MonomialBasis& basis, double tau,
                                Scheme scheme);

EffectiveModel append_zero_complex(const EffectiveModel& model);

struct Edge {
  int source = 0;  // index into the effective model's columns
  int target = 0;
  double rate = 0.0;
};

struct KirchhoffFit {
  Matrix K;  // r' x r'
  double residual_fro = 0.0;
  std::vector<Edge> edges;  // off-diagonal entries above edge_tol, column-major order
  double edge_tol = 0.0;
  bool degenerate = false;  // some column design lacked full column rank
};

struct NnlsResult {
  Vector x;
  int iterations = 0;
  bool converged = true;
};

/// Lawson-Hanson active set method for min ||A x - b||, x >= 0.
NnlsResult nnls(const Matrix& a, const Vector& b, int max_iter = 0);

/// Accelerated projected gradient for the same problem; used for large designs.
NnlsResult nnls_projected_gradient(const Matrix& a, const Vector& b, int max_iter = 20000,
                                   double tol = 1e-13);

struct KirchhoffOptions {
  // Edges kept above edge_rel_tol * max off-diagonal. Smaller values keep the ~1e-3 relative
  // leakage NNLS produces from coefficient errors on clean data.
  double edge_rel_tol = 1e-2;
  int projected_gradient_above = 50;
};

/// min ||C_eff - Q_eff K||_F over K with nonnegative off-diagonals and zero column sums.
/// Separates by column: off-diagonals of column j solve an NNLS problem with design
/// columns q_i - q_j (i != j) and the diagonal is their negated sum.
KirchhoffFit fit_kirchhoff(const EffectiveModel& model, const KirchhoffOptions& options = {});

/// Largest KKT violation of the fit: for each off-diagonal entry the objective gradient
/// must be >= 0 at zero entries and 0 at positive ones. Scaled by nothing.
double kirchhoff_kkt_residual(const EffectiveModel& model, const Matrix& K);

/// Complex label of effective column i ("∅" for the zero complex).
std::string effective_label(const EffectiveModel& model, int i, const MonomialBasis& basis,
                            const std::vector<std::string>& species);

/// Edge set keyed by basis exponent vectors (zero complex -> all-zero exponent), for
/// comparing graphs built on different effective models.
using EdgeKey = std::pair<Exponent, Exponent>;
std::vector<EdgeKey> edge_keys(const KirchhoffFit& fit, const EffectiveModel& model,
                               const MonomialBasis& basis);
std::vector<EdgeKey> edge_keys(const CrnModel& model, bool sinks_to_zero = false);

std::string export_dot(const KirchhoffFit& fit, const EffectiveModel& model,
                       const MonomialBasis& basis, const std::vector<std::string>& species);
std::string kirchhoff_json(const KirchhoffFit& fit, const EffectiveModel& model,
                           const MonomialBasis& basis, const std::vector<std::string>& species);

}  // namespace crn
