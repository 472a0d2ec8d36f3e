// Python bindings. Configuration crosses the boundary as JSON text; matrices as numpy arrays.
#include "crn/driver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace crn;
using nlohmann::json;

namespace {

json parse_doc(const std::string& text) { return text.empty() ? json() : json::parse(text); }

RunConfig config_from(const std::string& model, const std::string& file_doc,
                      const std::string& cli_doc) {
  return resolve_config(model, parse_doc(file_doc), parse_doc(cli_doc));
}

py::dict recovery_dict(const RecoveryResult& r) {
  py::dict d;
  d["formulation"] = formulation_name(r.formulation);
  d["C_ls"] = r.C_ls;
  d["C_stls"] = r.C_stls;
  d["support"] = r.support;
  d["rank"] = r.rank;
  d["singular_values"] = r.singular_values;
  d["residual_ls"] = r.residual_ls;
  d["residual_stls"] = r.residual_fro;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  return d;
}

py::dict model_dict(const CrnModel& m) {
  py::dict d;
  d["species"] = m.species_names;
  d["exponents"] = m.basis.exponents();
  d["coefficients"] = m.coefficients;
  d["kirchhoff"] = m.kirchhoff.entries();
  d["json"] = model_to_json(m);
  return d;
}

py::dict graph_dict(const GraphResult& g, const MonomialBasis& basis,
                    const std::vector<std::string>& species) {
  py::dict d;
  d["K"] = g.fit.K;
  d["Q_eff"] = g.effective.Q_eff;
  d["C_eff"] = g.effective.C_eff;
  d["source_indices"] = g.effective.source_indices;
  d["zero_complex"] = g.effective.zero_complex;
  d["residual"] = g.fit.residual_fro;
  py::list edges;
  for (const Edge& e : g.fit.edges) {
    edges.append(py::make_tuple(effective_label(g.effective, e.source, basis, species),
                                effective_label(g.effective, e.target, basis, species), e.rate));
  }
  d["edges"] = edges;
  d["dot"] = export_dot(g.fit, g.effective, basis, species);
  return d;
}

py::dict command(const std::string& name, const std::string& model, const std::string& file_doc,
                 const std::string& cli_doc) {
  const RunConfig cfg = config_from(model, file_doc, cli_doc);
  CommandOutput out;
  if (name == "simulate") out = cmd_simulate(cfg);
  else if (name == "recover") out = cmd_recover(cfg);
  else if (name == "sweep") out = cmd_sweep(cfg);
  else if (name == "mismatch") out = cmd_mismatch(cfg);
  else if (name == "dump-operators") out = cmd_dump_operators(cfg);
  else throw ConfigError("unknown command '" + name + "'");
  py::dict d;
  d["files"] = out.files;
  d["summary"] = out.summary;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mass-action network recovery from concentration time series";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<EmptyModelError>(m, "EmptyModelError", base.ptr());

  m.def("monomials", [](int species, int degree) { return MonomialBasis(species, degree).exponents(); },
        py::arg("species"), py::arg("degree"));
  m.def("dictionary", [](int species, int degree, const Matrix& x) {
          return build_dictionary(MonomialBasis(species, degree), x).D;
        },
        py::arg("species"), py::arg("degree"), py::arg("X"));

  m.def("preset_model", [](const std::string& name) { return model_dict(preset_by_name(name).model); },
        py::arg("name"));
  m.def("load_model", [](const std::string& text) { return model_dict(load_model_json(text)); },
        py::arg("text"));
  m.def("model_rhs", [](const std::string& text, const Vector& x) { return rhs(load_model_json(text), x); },
        py::arg("model_json"), py::arg("x"));

  m.def("spline_operators", [](double t0, double tn, int intervals) {
          const SplineOperators ops = build_operators(UniformGrid(t0, tn, intervals));
          return py::make_tuple(ops.L, ops.J);
        },
        py::arg("t0"), py::arg("tn"), py::arg("intervals"));

  m.def("recover_problem",
        [](const Matrix& targets, const Matrix& regression, double tau, int max_iter,
           double svd_cutoff, bool stls) {
          const StlsOptions o{tau, max_iter, svd_cutoff};
          return recovery_dict(recover_problem(Formulation::integral, {targets, regression}, o, stls));
        },
        py::arg("targets"), py::arg("regression"), py::arg("tau") = 1e-2, py::arg("max_iter") = 20,
        py::arg("svd_cutoff") = 1e-10, py::arg("stls") = true);

  m.def("fit_graph",
        [](const Matrix& C, const std::vector<std::string>& species, int degree, double tau,
           const std::string& scheme, double edge_tol) {
          RunConfig cfg;
          cfg.tau = tau;
          cfg.scheme = scheme;
          cfg.edge_tol = edge_tol;
          const MonomialBasis basis(static_cast<int>(species.size()), degree);
          return graph_dict(recover_graph(C, basis, cfg), basis, species);
        },
        py::arg("C"), py::arg("species"), py::arg("degree") = 2, py::arg("tau") = 1e-2,
        py::arg("scheme") = "active_columns", py::arg("edge_tol") = 1e-2);

  m.def("nnls", [](const Matrix& a, const Vector& b) { return nnls(a, b).x; }, py::arg("A"),
        py::arg("b"));

  m.def("resolve_config",
        [](const std::string& model, const std::string& file_doc, const std::string& cli_doc) {
          return config_to_json(config_from(model, file_doc, cli_doc)).dump();
        },
        py::arg("model"), py::arg("file_doc"), py::arg("cli_doc"));

  m.def("run_trial",
        [](const std::string& model, const std::string& cli_doc, int n_points, int trial) {
          const RunConfig cfg = config_from(model, "", cli_doc);
          const ModelContext ctx = load_model_context(cfg);
          OperatorCache cache(cfg.t0, cfg.tn);
          TrialOptions to;
          to.keep_data = true;
          to.rethrow = true;
          to.kirchhoff = false;
          const TrialResult r =
              run_trial(cfg, ctx, cache.get(n_points), trial_seed(cfg.seed, trial), to);
          py::dict d;
          d["truth"] = model_dict(r.truth);
          d["grid"] = r.bundle.grid;
          d["X"] = r.bundle.X;
          d["X_clean"] = r.bundle.X_clean;
          d["differential"] = recovery_dict(r.dif);
          d["integral"] = recovery_dict(r.integral);
          py::dict errors;
          for (Method meth : kMethods) {
            errors[method_name(meth)] = py::make_tuple(r.report[meth].spectral,
                                                       r.report[meth].support_mismatch);
          }
          d["errors"] = errors;
          return d;
        },
        py::arg("model"), py::arg("cli_doc"), py::arg("n_points"), py::arg("trial") = 0);

  m.def("command", &command, py::arg("name"), py::arg("model"), py::arg("file_doc"),
        py::arg("cli_doc"));
}
