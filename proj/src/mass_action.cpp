#include "crn/mass_action.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace crn {

namespace {

// All exponent vectors of `species` entries summing to `degree`, in descending lex order.
void compositions(int species, int degree, Exponent& current, int position,
                  std::vector<Exponent>& out) {
  if (position == species - 1) {
    current[position] = degree;
    out.push_back(current);
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current[position] = e;
    compositions(species, degree - e, current, position + 1, out);
  }
}

double int_pow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) {
    r *= x;
  }
  return r;
}

}  // namespace

MonomialBasis::MonomialBasis(int species_count, int max_degree)
    : species_count_(species_count), max_degree_(max_degree) {
  if (species_count < 1) {
    throw ConfigError("monomial basis needs at least one species");
  }
  if (max_degree < 1) {
    throw ConfigError("monomial basis needs max_degree >= 1");
  }
  Exponent current(species_count, 0);
  for (int d = 1; d <= max_degree; ++d) {
    compositions(species_count, d, current, 0, exponents_);
  }
}

int MonomialBasis::degree(int i) const {
  const Exponent& e = exponents_.at(i);
  return std::accumulate(e.begin(), e.end(), 0);
}

std::optional<int> MonomialBasis::index_of(const Exponent& e) const {
  if (static_cast<int>(e.size()) != species_count_) {
    return std::nullopt;
  }
  auto it = std::find(exponents_.begin(), exponents_.end(), e);
  if (it == exponents_.end()) {
    return std::nullopt;
  }
  return static_cast<int>(it - exponents_.begin());
}

IntMatrix MonomialBasis::stoichiometry() const {
  IntMatrix q(species_count_, size());
  for (int i = 0; i < size(); ++i) {
    for (int a = 0; a < species_count_; ++a) {
      q(a, i) = exponents_[i][a];
    }
  }
  return q;
}

std::string complex_formula(const Exponent& e, std::span<const std::string> species) {
  std::string out;
  for (std::size_t a = 0; a < e.size(); ++a) {
    if (e[a] == 0) {
      continue;
    }
    if (!out.empty()) {
      out += " + ";
    }
    if (e[a] > 1) {
      out += std::to_string(e[a]);
    }
    out += a < species.size() ? species[a] : "x" + std::to_string(a + 1);
  }
  return out.empty() ? std::string("∅") : out;
}

std::string MonomialBasis::formula(int i, std::span<const std::string> species) const {
  return complex_formula(exponents_.at(i), species);
}

MonomialBasis enumerate_monomials(int species_count, int max_degree) {
  return MonomialBasis(species_count, max_degree);
}

std::int64_t basis_size(int species_count, int max_degree) {
  // C(M+p, p) computed incrementally; exact for the small sizes used here.
  std::int64_t c = 1;
  for (int i = 1; i <= max_degree; ++i) {
    c = c * (species_count + i) / i;
  }
  return c - 1;
}

Vector evaluate_dictionary(const MonomialBasis& basis, const Vector& x) {
  if (x.size() != basis.species_count()) {
    throw ConfigError("state dimension " + std::to_string(x.size()) +
                      " does not match basis species count " +
                      std::to_string(basis.species_count()));
  }
  Vector d(basis.size());
  for (int i = 0; i < basis.size(); ++i) {
    const Exponent& e = basis.exponent(i);
    double v = 1.0;
    for (int a = 0; a < basis.species_count(); ++a) {
      if (e[a] != 0) {
        v *= int_pow(x(a), e[a]);
      }
    }
    d(i) = v;
  }
  return d;
}

KirchhoffMatrix::KirchhoffMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw ConfigError("Kirchhoff matrix must be square");
  }
  if (!is_valid(entries_)) {
    throw ConfigError("matrix violates Kirchhoff column-sum or sign constraints");
  }
}

KirchhoffMatrix KirchhoffMatrix::from_reactions(int dim, const ReactionList& reactions) {
  Matrix k = Matrix::Zero(dim, dim);
  for (const Reaction& r : reactions) {
    if (r.source < 0 || r.source >= dim || r.target < 0 || r.target >= dim) {
      throw ConfigError("reaction references a complex outside the basis");
    }
    if (r.source == r.target) {
      throw ConfigError("reaction is a self-loop");
    }
    if (!(r.rate > 0.0) || !std::isfinite(r.rate)) {
      throw ConfigError("reaction rate constants must be positive and finite");
    }
    k(r.target, r.source) += r.rate;
    k(r.source, r.source) -= r.rate;
  }
  return KirchhoffMatrix(std::move(k));
}

bool KirchhoffMatrix::is_valid(const Matrix& k, double rel_tol) {
  if (k.rows() != k.cols()) {
    return false;
  }
  const double scale = k.size() > 0 ? k.cwiseAbs().maxCoeff() : 0.0;
  const double tol = rel_tol * scale;
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    if (std::abs(k.col(j).sum()) > tol) {
      return false;
    }
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      if (i == j ? k(i, j) > 0.0 : k(i, j) < 0.0) {
        return false;
      }
    }
  }
  return true;
}

CrnModel assemble_model(std::vector<std::string> species_names, const MonomialBasis& basis,
                        const ReactionList& reactions) {
  if (static_cast<int>(species_names.size()) != basis.species_count()) {
    throw ConfigError("species name count does not match basis");
  }
  CrnModel model;
  model.species_names = std::move(species_names);
  model.basis = basis;
  model.kirchhoff = KirchhoffMatrix::from_reactions(basis.size(), reactions);
  model.reactions = reactions;
  model.stoichiometry = basis.stoichiometry();
  model.coefficients = model.stoichiometry.cast<double>() * model.kirchhoff.entries();
  return model;
}

Vector rhs(const CrnModel& model, const Vector& x) {
  if (x.size() != model.species_count()) {
    throw ConfigError("state dimension does not match model");
  }
  return model.coefficients * evaluate_dictionary(model.basis, x);
}

ValidityReport validate_mass_action(const Matrix& c, const MonomialBasis& basis, double tol) {
  if (c.rows() != basis.species_count() || c.cols() != basis.size()) {
    throw ConfigError("coefficient matrix dimensions do not match basis");
  }
  ValidityReport report;
  for (int a = 0; a < c.rows(); ++a) {
    for (int i = 0; i < c.cols(); ++i) {
      if (c(a, i) < -tol && basis.exponent(i)[a] < 1) {
        report.valid = false;
        report.violations.emplace_back(a, i);
      }
    }
  }
  return report;
}

double conservation_residual(const CrnModel& model, std::span<const int> moiety,
                             const Matrix& trajectory) {
  if (moiety.empty()) {
    throw ConfigError("moiety index set is empty");
  }
  if (trajectory.rows() != model.species_count() || trajectory.cols() == 0) {
    throw ConfigError("trajectory does not match model species");
  }
  for (int a : moiety) {
    if (a < 0 || a >= model.species_count()) {
      throw ConfigError("moiety index out of range");
    }
  }
  auto total = [&](Eigen::Index col) {
    double s = 0.0;
    for (int a : moiety) {
      s += trajectory(a, col);
    }
    return s;
  };
  const double initial = total(0);
  double worst = 0.0;
  for (Eigen::Index col = 0; col < trajectory.cols(); ++col) {
    worst = std::max(worst, std::abs(total(col) - initial));
  }
  return worst;
}

CrnModel load_model_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  try {
    auto species = doc.at("species").get<std::vector<std::string>>();
    const int degree = doc.at("max_degree").get<int>();
    MonomialBasis basis(static_cast<int>(species.size()), degree);
    ReactionList reactions;
    for (const auto& r : doc.at("reactions")) {
      auto source = r.at("source").get<Exponent>();
      auto target = r.at("target").get<Exponent>();
      auto si = basis.index_of(source);
      auto ti = basis.index_of(target);
      if (!si || !ti) {
        throw ConfigError("model file: reaction complex is not in the degree-" +
                          std::to_string(degree) + " basis");
      }
      reactions.push_back({*si, *ti, r.at("k").get<double>()});
    }
    return assemble_model(std::move(species), basis, reactions);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

std::string model_to_json(const CrnModel& model) {
  nlohmann::json doc;
  doc["species"] = model.species_names;
  doc["max_degree"] = model.basis.max_degree();
  doc["reactions"] = nlohmann::json::array();
  for (const Reaction& r : model.reactions) {
    doc["reactions"].push_back({{"source", model.basis.exponent(r.source)},
                                {"target", model.basis.exponent(r.target)},
                                {"k", r.rate}});
  }
  return doc.dump(2);
}

}  // namespace crn
