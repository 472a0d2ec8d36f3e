#include "crn/graph_recovery.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace crn {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::active_columns:
      return "active_columns";
    case Scheme::active_plus_zero:
      return "active_plus_zero";
    case Scheme::species_as_sources:
      return "species_as_sources";
  }
  return "active_columns";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "active_columns") {
    return Scheme::active_columns;
  }
  if (name == "active_plus_zero") {
    return Scheme::active_plus_zero;
  }
  if (name == "species_as_sources") {
    return Scheme::species_as_sources;
  }
  throw ConfigError("unknown filtration scheme '" + name + "'");
}

EffectiveModel filter_effective(const Matrix& C, const MonomialBasis& basis, double tau,
                                Scheme scheme) {
  if (!(tau > 0.0)) {
    throw ConfigError("filter threshold tau must be positive");
  }
  if (C.rows() != basis.species_count() || C.cols() != basis.size()) {
    throw ConfigError("coefficient matrix dimensions do not match basis");
  }
  EffectiveModel model;
  model.scheme = scheme;
  for (int i = 0; i < basis.size(); ++i) {
    const bool keep_species = scheme == Scheme::species_as_sources && basis.degree(i) == 1;
    if (keep_species || C.col(i).cwiseAbs().maxCoeff() > tau) {
      model.source_indices.push_back(i);
    }
  }
  const int r = model.sources();
  if (r == 0) {
    throw EmptyModelError("no coefficient column exceeds tau; the effective model is empty");
  }
  model.C_eff.resize(C.rows(), r);
  model.Q_eff.resize(C.rows(), r);
  for (int c = 0; c < r; ++c) {
    const int i = model.source_indices[c];
    model.C_eff.col(c) = C.col(i);
    for (int a = 0; a < basis.species_count(); ++a) {
      model.Q_eff(a, c) = basis.exponent(i)[a];
    }
  }
  if (scheme == Scheme::active_plus_zero) {
    return append_zero_complex(model);
  }
  return model;
}

EffectiveModel append_zero_complex(const EffectiveModel& model) {
  if (model.zero_complex) {
    throw ConfigError("zero complex already appended");
  }
  if (model.sources() == 0) {
    throw EmptyModelError("cannot append a zero complex to an empty model");
  }
  EffectiveModel out = model;
  const Eigen::Index m = model.C_eff.rows();
  out.C_eff.conservativeResize(m, model.dim() + 1);
  out.Q_eff.conservativeResize(m, model.dim() + 1);
  out.C_eff.col(model.dim()).setZero();
  out.Q_eff.col(model.dim()).setZero();
  out.zero_complex = true;
  return out;
}

namespace {

Vector solve_passive(const Matrix& a, const Vector& b, const std::vector<int>& passive) {
  Matrix sub(a.rows(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t j = 0; j < passive.size(); ++j) {
    sub.col(j) = a.col(passive[j]);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub);
  return cod.solve(b);
}

}  // namespace

NnlsResult nnls(const Matrix& a, const Vector& b, int max_iter) {
  const Eigen::Index n = a.cols();
  NnlsResult out;
  out.x = Vector::Zero(n);
  if (n == 0) {
    return out;
  }
  if (max_iter <= 0) {
    max_iter = static_cast<int>(3 * n) + 10;
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = 10.0 * eps * static_cast<double>(std::max(a.rows(), n)) *
                     std::max(1.0, a.cwiseAbs().colwise().sum().maxCoeff()) *
                     std::max(1.0, b.cwiseAbs().maxCoeff());

  std::vector<bool> in_passive(n, false);
  Vector x = Vector::Zero(n);
  Vector grad = a.transpose() * (b - a * x);
  int outer = 0;
  while (true) {
    Eigen::Index best = -1;
    double best_value = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!in_passive[j] && grad(j) > best_value) {
        best_value = grad(j);
        best = j;
      }
    }
    if (best < 0) {
      break;
    }
    if (++outer > max_iter) {
      out.converged = false;
      break;
    }
    in_passive[best] = true;

    while (true) {
      std::vector<int> passive;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (in_passive[j]) {
          passive.push_back(static_cast<int>(j));
        }
      }
      const Vector z = solve_passive(a, b, passive);
      bool feasible = true;
      for (std::size_t k = 0; k < passive.size(); ++k) {
        if (z(k) <= 0.0) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        x.setZero();
        for (std::size_t k = 0; k < passive.size(); ++k) {
          x(passive[k]) = z(k);
        }
        break;
      }
      // Step toward z until the first passive variable hits zero.
      double alpha = std::numeric_limits<double>::infinity();
      std::size_t blocking = 0;
      for (std::size_t k = 0; k < passive.size(); ++k) {
        if (z(k) <= 0.0) {
          const double xi = x(passive[k]);
          const double step = xi / (xi - z(k));
          if (step < alpha) {
            alpha = step;
            blocking = k;
          }
        }
      }
      for (std::size_t k = 0; k < passive.size(); ++k) {
        const int j = passive[k];
        x(j) += alpha * (z(k) - x(j));
        if (k == blocking || x(j) <= 0.0) {
          x(j) = 0.0;
          in_passive[j] = false;
        }
      }
      if (std::none_of(in_passive.begin(), in_passive.end(), [](bool v) { return v; })) {
        break;
      }
    }
    grad = a.transpose() * (b - a * x);
  }
  out.x = x;
  out.iterations = outer;
  return out;
}

NnlsResult nnls_projected_gradient(const Matrix& a, const Vector& b, int max_iter, double tol) {
  const Eigen::Index n = a.cols();
  NnlsResult out;
  out.x = Vector::Zero(n);
  if (n == 0) {
    return out;
  }
  const Matrix ata = a.transpose() * a;
  const Vector atb = a.transpose() * b;
  const double lipschitz = spectral_norm(ata);
  if (lipschitz == 0.0) {
    return out;
  }
  Vector x = Vector::Zero(n), y = x, x_prev = x;
  double t = 1.0;
  out.converged = false;
  for (int it = 1; it <= max_iter; ++it) {
    x_prev = x;
    x = (y - (ata * y - atb) / lipschitz).cwiseMax(0.0);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    out.iterations = it;
    if ((x - x_prev).norm() <= tol * std::max(1.0, x.norm())) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  return out;
}

namespace {

Matrix column_design(const Matrix& q, int j) {
  const Eigen::Index r = q.cols();
  Matrix design(q.rows(), r - 1);
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (i != j) {
      design.col(c++) = q.col(i) - q.col(j);
    }
  }
  return design;
}

}  // namespace

KirchhoffFit fit_kirchhoff(const EffectiveModel& model, const KirchhoffOptions& options) {
  if (model.C_eff.rows() != model.Q_eff.rows() || model.C_eff.cols() != model.Q_eff.cols()) {
    throw ConfigError("effective coefficient and stoichiometry matrices differ in shape");
  }
  const int r = model.dim();
  if (r == 0) {
    throw EmptyModelError("cannot fit a Kirchhoff matrix to an empty model");
  }
  KirchhoffFit fit;
  fit.K = Matrix::Zero(r, r);
  for (int j = 0; j < r; ++j) {
    const Matrix design = column_design(model.Q_eff, j);
    const Vector target = model.C_eff.col(j);
    Vector x;
    if (design.cols() == 0) {
      continue;
    }
    const SingularValues sv = numerical_rank(design, 1e-12);
    const bool deficient = sv.rank < design.cols();
    fit.degenerate |= deficient;
    if (deficient) {
      // A vanishing ridge selects (approximately) the minimal-norm minimizer.
      const double top = sv.values.size() > 0 ? sv.values(0) : 1.0;
      const double ridge = 1e-7 * top;
      Matrix aug(design.rows() + design.cols(), design.cols());
      aug << design, ridge * Matrix::Identity(design.cols(), design.cols());
      Vector rhs = Vector::Zero(aug.rows());
      rhs.head(design.rows()) = target;
      x = design.cols() > options.projected_gradient_above ? nnls_projected_gradient(aug, rhs).x
                                                          : nnls(aug, rhs).x;
    } else {
      x = design.cols() > options.projected_gradient_above ? nnls_projected_gradient(design, target).x
                                                          : nnls(design, target).x;
    }
    int c = 0;
    double total = 0.0;
    for (int i = 0; i < r; ++i) {
      if (i == j) {
        continue;
      }
      fit.K(i, j) = x(c);
      total += x(c);
      ++c;
    }
    fit.K(j, j) = -total;
  }
  fit.residual_fro = (model.C_eff - model.Q_eff * fit.K).norm();

  double max_off = 0.0;
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) {
      if (i != j) {
        max_off = std::max(max_off, fit.K(i, j));
      }
    }
  }
  fit.edge_tol = options.edge_rel_tol * max_off;
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) {
      if (i != j && fit.K(i, j) > fit.edge_tol) {
        fit.edges.push_back({j, i, fit.K(i, j)});
      }
    }
  }
  return fit;
}

double kirchhoff_kkt_residual(const EffectiveModel& model, const Matrix& K) {
  const Matrix residual = model.Q_eff * K - model.C_eff;
  const int r = model.dim();
  double worst = 0.0;
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) {
      if (i == j) {
        continue;
      }
      // d/dK_ij of ||Q K - C||^2 with K_jj = -sum_i K_ij.
      const double g = 2.0 * (model.Q_eff.col(i) - model.Q_eff.col(j)).dot(residual.col(j));
      const double violation = K(i, j) > 0.0 ? std::abs(g) : std::max(0.0, -g);
      worst = std::max(worst, violation);
    }
  }
  return worst;
}

std::string effective_label(const EffectiveModel& model, int i, const MonomialBasis& basis,
                            const std::vector<std::string>& species) {
  if (i >= model.sources()) {
    return "∅";
  }
  return basis.formula(model.source_indices[i], species);
}

namespace {

Exponent effective_exponent(const EffectiveModel& model, int i, const MonomialBasis& basis) {
  if (i >= model.sources()) {
    return Exponent(basis.species_count(), 0);
  }
  return basis.exponent(model.source_indices[i]);
}

}  // namespace

std::vector<EdgeKey> edge_keys(const KirchhoffFit& fit, const EffectiveModel& model,
                               const MonomialBasis& basis) {
  std::vector<EdgeKey> keys;
  for (const Edge& e : fit.edges) {
    keys.emplace_back(effective_exponent(model, e.source, basis),
                      effective_exponent(model, e.target, basis));
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<EdgeKey> edge_keys(const CrnModel& model, bool sinks_to_zero) {
  std::set<int> sources;
  for (const Reaction& r : model.reactions) {
    sources.insert(r.source);
  }
  std::vector<EdgeKey> keys;
  for (const Reaction& r : model.reactions) {
    Exponent target = model.basis.exponent(r.target);
    if (sinks_to_zero && !sources.count(r.target)) {
      target.assign(target.size(), 0);
    }
    keys.emplace_back(model.basis.exponent(r.source), target);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

namespace {

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape_label(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
    }
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dot(const KirchhoffFit& fit, const EffectiveModel& model,
                       const MonomialBasis& basis, const std::vector<std::string>& species) {
  std::string s = "digraph crn {\n  rankdir=LR;\n";
  for (int i = 0; i < model.dim(); ++i) {
    s += "  c" + std::to_string(i) + " [label=\"" +
         escape_label(effective_label(model, i, basis, species)) + "\"];\n";
  }
  std::vector<Edge> edges = fit.edges;
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  });
  for (const Edge& e : edges) {
    s += "  c" + std::to_string(e.source) + " -> c" + std::to_string(e.target) + " [label=\"" +
         format_rate(e.rate) + "\"];\n";
  }
  s += "}\n";
  return s;
}

std::string kirchhoff_json(const KirchhoffFit& fit, const EffectiveModel& model,
                           const MonomialBasis& basis, const std::vector<std::string>& species) {
  nlohmann::json doc;
  doc["scheme"] = scheme_name(model.scheme);
  doc["zero_complex"] = model.zero_complex;
  doc["residual"] = fit.residual_fro;
  doc["edge_tol"] = fit.edge_tol;
  doc["degenerate"] = fit.degenerate;
  std::vector<std::string> labels;
  for (int i = 0; i < model.dim(); ++i) {
    labels.push_back(effective_label(model, i, basis, species));
  }
  doc["complexes"] = labels;
  doc["source_indices"] = model.source_indices;
  nlohmann::json k = nlohmann::json::array();
  for (Eigen::Index i = 0; i < fit.K.rows(); ++i) {
    std::vector<double> row(fit.K.cols());
    for (Eigen::Index j = 0; j < fit.K.cols(); ++j) {
      row[j] = fit.K(i, j);
    }
    k.push_back(row);
  }
  doc["K"] = k;
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : fit.edges) {
    edges.push_back({{"source", labels[e.source]}, {"target", labels[e.target]}, {"rate", e.rate}});
  }
  doc["edges"] = edges;
  return doc.dump(2);
}

}  // namespace crn
