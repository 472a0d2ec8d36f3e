#pragma once

#include "crn/linalg.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crn {

using Exponent = std::vector<int>;

/// All complexes (monomial exponent vectors) of M species up to total degree p,
/// excluding the empty complex. Ordering is graded-lexicographic: every degree-1
/// complex in species order, then degree 2, and so on; within a degree, exponent
/// vectors are in descending lexicographic order, e.g. (2,0), (1,1), (0,2).
/// This ordering indexes every matrix in the library and the file formats.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(int species_count, int max_degree);

  int species_count() const { return species_count_; }
  int max_degree() const { return max_degree_; }
  int size() const { return static_cast<int>(exponents_.size()); }

  const Exponent& exponent(int i) const { return exponents_.at(i); }
  const std::vector<Exponent>& exponents() const { return exponents_; }
  int degree(int i) const;

  std::optional<int> index_of(const Exponent& e) const;

  /// Stoichiometry matrix Q (M x N), columns are exponent vectors.
  IntMatrix stoichiometry() const;

  /// Human readable complex, e.g. "A + cat", "2A".
  std::string formula(int i, std::span<const std::string> species) const;

  bool operator==(const MonomialBasis& other) const {
    return species_count_ == other.species_count_ && max_degree_ == other.max_degree_;
  }

 private:
  int species_count_ = 0;
  int max_degree_ = 0;
  std::vector<Exponent> exponents_;
};

MonomialBasis enumerate_monomials(int species_count, int max_degree);

/// Binomial(M + p, p) - 1.
std::int64_t basis_size(int species_count, int max_degree);

/// d(x): entry i equals prod_a x_a^{Q_{a,i}}.
Vector evaluate_dictionary(const MonomialBasis& basis, const Vector& x);

std::string complex_formula(const Exponent& e, std::span<const std::string> species);

struct Reaction {
  int source = 0;
  int target = 0;
  double rate = 0.0;
};

using ReactionList = std::vector<Reaction>;

/// Column-zero-sum matrix with nonnegative off-diagonals.
class KirchhoffMatrix {
 public:
  KirchhoffMatrix() = default;
  explicit KirchhoffMatrix(Matrix entries);

  static KirchhoffMatrix from_reactions(int dim, const ReactionList& reactions);

  const Matrix& entries() const { return entries_; }
  int dim() const { return static_cast<int>(entries_.rows()); }

  /// Checks the column-sum and sign invariants with tolerance relative to max |entry|.
  static bool is_valid(const Matrix& k, double rel_tol = 1e-12);

 private:
  Matrix entries_;
};

struct CrnModel {
  std::vector<std::string> species_names;
  MonomialBasis basis;
  KirchhoffMatrix kirchhoff;
  ReactionList reactions;
  IntMatrix stoichiometry;  // Q, M x N
  Matrix coefficients;      // C = Q K, M x N

  int species_count() const { return basis.species_count(); }
  int complex_count() const { return basis.size(); }
};

CrnModel assemble_model(std::vector<std::string> species_names, const MonomialBasis& basis,
                        const ReactionList& reactions);

/// Mass-action right hand side C d(x).
Vector rhs(const CrnModel& model, const Vector& x);

struct ValidityReport {
  bool valid = true;
  std::vector<std::pair<int, int>> violations;  // (species, complex)
};

/// A polynomial system is a mass-action system iff every negative term of dx_a/dt
/// contains x_a.
ValidityReport validate_mass_action(const Matrix& c, const MonomialBasis& basis,
                                    double tol = 0.0);

/// Max over time of |sum_{a in moiety} x_a(t) - sum_{a in moiety} x_a(t_0)| for one
/// experiment (columns are states).
double conservation_residual(const CrnModel& model, std::span<const int> moiety,
                             const Matrix& trajectory);

// Model file (JSON): species, max_degree, reactions [{source, target, k}] with exponent
// vectors for source and target.
CrnModel load_model_json(const std::string& text);
std::string model_to_json(const CrnModel& model);

}  // namespace crn
