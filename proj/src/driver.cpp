#include "crn/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace crn {

namespace fs = std::filesystem;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<int> SweepSpec::values() const {
  std::vector<int> v;
  for (int n = start; n <= stop; n += step) {
    v.push_back(n);
  }
  return v;
}

void RunConfig::validate() const {
  if (w < 1) {
    throw ConfigError("w must be at least 1");
  }
  if (!(tn > t0)) {
    throw ConfigError("t0 must be smaller than tn");
  }
  if (n_points < 4) {
    throw ConfigError("n_points must be at least 4");
  }
  if (sweep.start < 4 || sweep.step < 1 || sweep.stop < sweep.start) {
    throw ConfigError("sweep needs 4 <= start <= stop and step >= 1");
  }
  if (resolutions.empty()) {
    throw ConfigError("mismatch needs at least one resolution");
  }
  for (int r : resolutions) {
    if (r < 4) {
      throw ConfigError("every resolution must be at least 4 points");
    }
  }
  if (trials < 1) {
    throw ConfigError("trials must be at least 1");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw ConfigError("noise_sd must be finite and nonnegative");
  }
  if (noise_kind != "gaussian" && noise_kind != "truncated") {
    throw ConfigError("noise_kind must be gaussian or truncated");
  }
  if (!(tau > 0.0)) {
    throw ConfigError("tau must be positive");
  }
  if (max_iter < 1) {
    throw ConfigError("max_iter must be at least 1");
  }
  if (!(svd_cutoff > 0.0 && svd_cutoff < 1.0)) {
    throw ConfigError("svd_cutoff must lie in (0, 1)");
  }
  if (!(edge_tol >= 0.0)) {
    throw ConfigError("edge_tol must be nonnegative");
  }
  parse_scheme(scheme);
  if (formulations.empty()) {
    throw ConfigError("at least one formulation is required");
  }
  for (const auto& f : formulations) {
    parse_formulation(f);
  }
  if (threads < 1) {
    throw ConfigError("threads must be at least 1");
  }
  if (!(k_min > 0.0) || !(k_max >= k_min)) {
    throw ConfigError("rate range must satisfy 0 < k_min <= k_max");
  }
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json d;
  d["model"] = c.model;
  d["w"] = c.w;
  d["t0"] = c.t0;
  d["tn"] = c.tn;
  d["n_points"] = c.n_points;
  d["sweep"] = {{"start", c.sweep.start}, {"stop", c.sweep.stop}, {"step", c.sweep.step}};
  d["resolutions"] = c.resolutions;
  d["trials"] = c.trials;
  d["noise_sd"] = c.noise_sd;
  d["noise_kind"] = c.noise_kind;
  d["truncation"] = c.truncation;
  d["clip_negative"] = c.clip_negative;
  d["tau"] = c.tau;
  d["max_iter"] = c.max_iter;
  d["svd_cutoff"] = c.svd_cutoff;
  d["edge_tol"] = c.edge_tol;
  d["scheme"] = c.scheme;
  d["formulations"] = c.formulations;
  d["seed"] = c.seed;
  d["output_dir"] = c.output_dir;
  d["threads"] = c.threads;
  d["rel_tol"] = c.rel_tol;
  d["abs_tol"] = c.abs_tol;
  d["k_min"] = c.k_min;
  d["k_max"] = c.k_max;
  d["sample_rates"] = c.sample_rates;
  d["bounds"] = c.bounds;
  return d;
}

void apply_config_json(RunConfig& c, const nlohmann::json& doc) {
  if (doc.is_null()) {
    return;
  }
  if (!doc.is_object()) {
    throw ConfigError("config document must be a JSON object");
  }
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "model") c.model = v.get<std::string>();
      else if (key == "w") c.w = v.get<int>();
      else if (key == "t0") c.t0 = v.get<double>();
      else if (key == "tn") c.tn = v.get<double>();
      else if (key == "n_points") c.n_points = v.get<int>();
      else if (key == "sweep") {
        if (v.contains("start")) c.sweep.start = v.at("start").get<int>();
        if (v.contains("stop")) c.sweep.stop = v.at("stop").get<int>();
        if (v.contains("step")) c.sweep.step = v.at("step").get<int>();
      }
      else if (key == "resolutions") c.resolutions = v.get<std::vector<int>>();
      else if (key == "trials") c.trials = v.get<int>();
      else if (key == "noise_sd") c.noise_sd = v.get<double>();
      else if (key == "noise_kind") c.noise_kind = v.get<std::string>();
      else if (key == "truncation") c.truncation = v.get<double>();
      else if (key == "clip_negative") c.clip_negative = v.get<bool>();
      else if (key == "tau") c.tau = v.get<double>();
      else if (key == "max_iter") c.max_iter = v.get<int>();
      else if (key == "svd_cutoff") c.svd_cutoff = v.get<double>();
      else if (key == "edge_tol") c.edge_tol = v.get<double>();
      else if (key == "scheme") c.scheme = v.get<std::string>();
      else if (key == "formulations") c.formulations = v.get<std::vector<std::string>>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "threads") c.threads = v.get<int>();
      else if (key == "rel_tol") c.rel_tol = v.get<double>();
      else if (key == "abs_tol") c.abs_tol = v.get<double>();
      else if (key == "k_min") c.k_min = v.get<double>();
      else if (key == "k_max") c.k_max = v.get<double>();
      else if (key == "sample_rates") c.sample_rates = v.get<bool>();
      else if (key == "bounds") c.bounds = v.get<bool>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

namespace {

bool is_preset(const std::string& name) {
  const auto names = preset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RunConfig resolve_config(const std::string& model, const nlohmann::json& file_doc,
                         const nlohmann::json& cli_doc) {
  std::string name = model;
  if (file_doc.is_object() && file_doc.contains("model")) {
    name = file_doc.at("model").get<std::string>();
  }
  if (cli_doc.is_object() && cli_doc.contains("model")) {
    name = cli_doc.at("model").get<std::string>();
  }
  RunConfig cfg;
  cfg.model = name;
  if (is_preset(name)) {
    const Preset p = preset_by_name(name);
    cfg.w = p.w;
    cfg.t0 = p.t0;
    cfg.tn = p.tn;
    cfg.tau = p.tau;
    cfg.scheme = scheme_name(p.scheme);
    cfg.sample_rates = p.rates.has_value();
    if (p.rates) {
      cfg.k_min = p.rates->k_min;
      cfg.k_max = p.rates->k_max;
    }
  } else {
    cfg.sample_rates = false;
  }
  apply_config_json(cfg, file_doc);
  apply_config_json(cfg, cli_doc);
  cfg.validate();
  return cfg;
}

ModelContext load_model_context(const RunConfig& cfg) {
  ModelContext ctx;
  ctx.name = cfg.model;
  if (is_preset(cfg.model)) {
    ctx.model = preset_by_name(cfg.model).model;
  } else {
    ctx.model = load_model_json(read_file(cfg.model));
  }
  if (cfg.sample_rates) {
    ctx.rates = RateRange{cfg.k_min, cfg.k_max};
  }
  return ctx;
}

std::shared_ptr<const SplineOperators> OperatorCache::get(int n_points) {
  auto it = cache_.find(n_points);
  if (it != cache_.end()) {
    return it->second;
  }
  auto ops = std::make_shared<const SplineOperators>(
      build_operators(UniformGrid(t0_, tn_, n_points - 1)));
  cache_.emplace(n_points, ops);
  return ops;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return derive_seed(seed, static_cast<std::uint64_t>(trial));
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

GraphResult recover_graph(const Matrix& C, const MonomialBasis& basis, const RunConfig& cfg) {
  GraphResult g;
  g.effective = filter_effective(C, basis, cfg.tau, parse_scheme(cfg.scheme));
  KirchhoffOptions ko;
  ko.edge_rel_tol = cfg.edge_tol;
  g.fit = fit_kirchhoff(g.effective, ko);
  return g;
}

namespace {

int edge_difference(const std::vector<EdgeKey>& a, const std::vector<EdgeKey>& b) {
  std::vector<EdgeKey> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  return static_cast<int>(diff.size());
}

}  // namespace

TrialResult run_trial(const RunConfig& cfg, const ModelContext& ctx,
                      std::shared_ptr<const SplineOperators> ops, std::uint64_t seed,
                      const TrialOptions& options) {
  TrialResult res;
  try {
    const int n_points = ops->grid.points();
    ExperimentConfig ec;
    ec.t0 = cfg.t0;
    ec.tn = cfg.tn;
    ec.n_points = n_points;
    SimulationOptions so;
    so.integrator.rel_tol = cfg.rel_tol;
    so.integrator.abs_tol = cfg.abs_tol;
    const bool bounded = cfg.noise_sd == 0.0 || cfg.noise_kind == "truncated";
    so.dictionary_integrals = options.bounds && bounded;

    const std::uint64_t sim_seed = derive_seed(seed, 1);
    auto [truth, bundle] =
        ctx.rates ? simulate_experiments(ctx.model, *ctx.rates, cfg.w, ec, sim_seed, so)
                  : simulate_fixed_rates(ctx.model, cfg.w, ec, sim_seed, so);
    if (cfg.noise_sd > 0.0) {
      NoiseOptions no;
      no.kind = cfg.noise_kind == "truncated" ? NoiseKind::truncated : NoiseKind::gaussian;
      no.truncation = cfg.truncation;
      no.clip_negative = cfg.clip_negative;
      bundle = add_noise(bundle, cfg.noise_sd, derive_seed(seed, 1000003ULL + n_points), no);
    }

    const StackedOperators stacked(ops, cfg.w);
    const DictionaryMatrix dict = build_dictionary(truth.basis, bundle.X, cfg.w);
    StlsOptions stls_options;
    stls_options.tau = cfg.tau;
    stls_options.max_iter = cfg.max_iter;
    stls_options.svd_cutoff = cfg.svd_cutoff;

    res.report.seed = seed;
    res.report.n_points = n_points;
    res.report.noise_sd = cfg.noise_sd;
    if (options.recover_dif) {
      res.dif = recover(Formulation::differential, bundle, dict, stacked, stls_options);
      compute_errors(res.dif, truth.coefficients, res.report);
    }
    if (options.recover_int) {
      res.integral = recover(Formulation::integral, bundle, dict, stacked, stls_options);
      compute_errors(res.integral, truth.coefficients, res.report);
    }

    if (options.kirchhoff) {
      std::optional<GraphResult> reference;
      try {
        reference = recover_graph(truth.coefficients, truth.basis, cfg);
      } catch (const EmptyModelError&) {
      }
      const std::vector<EdgeKey> ref_keys =
          reference ? edge_keys(reference->fit, reference->effective, truth.basis)
                    : std::vector<EdgeKey>{};
      auto score = [&](const RecoveryResult& r, Method m) {
        if (!reference || r.C_stls.size() == 0) {
          return;
        }
        try {
          const GraphResult g = recover_graph(r.C_stls, truth.basis, cfg);
          if (g.effective.dim() == reference->effective.dim()) {
            res.report[m].kirchhoff_mismatch =
                edge_difference(edge_keys(g.fit, g.effective, truth.basis), ref_keys);
          }
        } catch (const EmptyModelError&) {
        }
      };
      if (options.recover_dif) {
        score(res.dif, Method::dif_stls);
      }
      if (options.recover_int) {
        score(res.integral, Method::int_stls);
      }
    }

    if (options.bounds && bounded) {
      BoundInputs in;
      in.model = &truth;
      in.bundle = &bundle;
      in.ops = &stacked;
      in.t0 = cfg.t0;
      in.tn = cfg.tn;
      in.svd_cutoff = cfg.svd_cutoff;
      res.bounds = compute_bounds(in);
      // The error matrices are large and only needed for verification.
      if (!options.keep_data) {
        res.bounds->E_dif.resize(0, 0);
        res.bounds->E_int.resize(0, 0);
        res.bounds->delta_xi.resize(0, 0);
        res.bounds->xi.resize(0, 0);
        res.bounds->xi0.resize(0, 0);
      }
    }
    res.truth = std::move(truth);
    if (options.keep_data) {
      res.bundle = std::move(bundle);
    }
    res.ok = true;
  } catch (const std::exception& e) {
    if (options.rethrow) {
      throw;
    }
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const EmptyModelError*>(&e) != nullptr) {
    return 4;
  }
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) {
    return 3;
  }
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
    return 2;
  }
  return 3;
}

namespace {

class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) {
      throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    }
  }

  void write(const std::string& name, const std::string& content, CommandOutput& out) const {
    const fs::path path = fs::path(dir_) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) {
      throw ConfigError("cannot write '" + path.string() + "'");
    }
    f << content;
    out.files.push_back(path.string());
  }

 private:
  std::string dir_;
};

bool wants(const RunConfig& cfg, Formulation f) {
  for (const auto& name : cfg.formulations) {
    if (parse_formulation(name) == f) {
      return true;
    }
  }
  return false;
}

std::string config_dump(const RunConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

}  // namespace

CommandOutput cmd_simulate(const RunConfig& cfg) {
  CommandOutput out;
  const ModelContext ctx = load_model_context(cfg);
  ExperimentConfig ec;
  ec.t0 = cfg.t0;
  ec.tn = cfg.tn;
  ec.n_points = cfg.n_points;
  SimulationOptions so;
  so.integrator.rel_tol = cfg.rel_tol;
  so.integrator.abs_tol = cfg.abs_tol;
  const std::uint64_t seed = trial_seed(cfg.seed, 0);
  auto [truth, bundle] =
      ctx.rates ? simulate_experiments(ctx.model, *ctx.rates, cfg.w, ec, derive_seed(seed, 1), so)
                : simulate_fixed_rates(ctx.model, cfg.w, ec, derive_seed(seed, 1), so);
  if (cfg.noise_sd > 0.0) {
    NoiseOptions no;
    no.kind = cfg.noise_kind == "truncated" ? NoiseKind::truncated : NoiseKind::gaussian;
    no.truncation = cfg.truncation;
    no.clip_negative = cfg.clip_negative;
    bundle = add_noise(bundle, cfg.noise_sd, derive_seed(seed, 1000003ULL + cfg.n_points), no);
  }
  const OutputDir dir(cfg.output_dir);
  dir.write("trajectory.csv", trajectory_csv(bundle, truth.species_names), out);
  dir.write("metadata.json", bundle_metadata_json(bundle, cfg.t0, cfg.tn) + "\n", out);
  dir.write("model.json", model_to_json(truth) + "\n", out);
  dir.write("config.json", config_dump(cfg), out);
  out.summary = "simulated " + std::to_string(bundle.experiments) + " experiments x " +
                std::to_string(bundle.points()) + " points" +
                (bundle.stats.negative_excursion ? " (negative excursion flagged)" : "");
  return out;
}

CommandOutput cmd_recover(const RunConfig& cfg) {
  CommandOutput out;
  const ModelContext ctx = load_model_context(cfg);
  OperatorCache cache(cfg.t0, cfg.tn);
  TrialOptions to;
  to.recover_dif = wants(cfg, Formulation::differential);
  to.recover_int = wants(cfg, Formulation::integral);
  to.kirchhoff = false;
  to.rethrow = true;
  to.keep_data = true;
  const TrialResult r =
      run_trial(cfg, ctx, cache.get(cfg.n_points), trial_seed(cfg.seed, 0), to);

  const OutputDir dir(cfg.output_dir);
  dir.write("config.json", config_dump(cfg), out);
  dir.write("model.json", model_to_json(r.truth) + "\n", out);
  std::ostringstream summary;
  std::string empty_error;
  nlohmann::json errors;
  for (Formulation f : {Formulation::differential, Formulation::integral}) {
    if (!wants(cfg, f)) {
      continue;
    }
    const RecoveryResult& rec = f == Formulation::differential ? r.dif : r.integral;
    const std::string tag = formulation_name(f);
    const Method ls = f == Formulation::differential ? Method::dif_ls : Method::int_ls;
    const Method st = f == Formulation::differential ? Method::dif_stls : Method::int_stls;
    errors[tag] = {{"ls_spectral_error", r.report[ls].spectral},
                   {"stls_spectral_error", r.report[st].spectral},
                   {"stls_support_mismatch", r.report[st].support_mismatch},
                   {"rank", rec.rank}};
    dir.write("recovery_" + tag + ".json",
              recovery_json(rec, r.truth.basis, r.truth.species_names) + "\n", out);
    summary << tag << ": rank " << rec.rank << ", ||dC_ls|| " << fmt6(r.report[ls].spectral)
            << ", ||dC_stls|| " << fmt6(r.report[st].spectral) << ", mismatch "
            << r.report[st].support_mismatch;
    try {
      const GraphResult g = recover_graph(rec.C_stls, r.truth.basis, cfg);
      dir.write("kirchhoff_" + tag + ".json",
                kirchhoff_json(g.fit, g.effective, r.truth.basis, r.truth.species_names) + "\n",
                out);
      dir.write("graph_" + tag + ".dot",
                export_dot(g.fit, g.effective, r.truth.basis, r.truth.species_names), out);
      summary << ", " << g.fit.edges.size() << " edges\n";
    } catch (const EmptyModelError& e) {
      summary << ", empty effective model\n";
      empty_error = tag + ": " + e.what();
    }
  }
  dir.write("errors.json", errors.dump(2) + "\n", out);
  out.summary = summary.str();
  if (!empty_error.empty()) {
    throw EmptyModelError(empty_error);
  }
  return out;
}

namespace {

struct TheorySlopes {
  double dif;
  double integral;
};

TheorySlopes theory_slopes(double noise_sd) {
  return noise_sd > 0.0 ? TheorySlopes{1.5, 0.5} : TheorySlopes{-2.5, -3.5};
}

double reference_slope(Method m, const TheorySlopes& t) {
  return m == Method::dif_ls || m == Method::dif_stls ? t.dif : t.integral;
}

}  // namespace

CommandOutput cmd_sweep(const RunConfig& cfg) {
  CommandOutput out;
  const ModelContext ctx = load_model_context(cfg);
  const std::vector<int> sizes = cfg.sweep.values();
  OperatorCache cache(cfg.t0, cfg.tn);
  std::vector<std::shared_ptr<const SplineOperators>> ops;
  for (int n : sizes) {
    ops.push_back(cache.get(n));
  }
  const bool bounded = cfg.noise_sd == 0.0 || cfg.noise_kind == "truncated";
  TrialOptions to;
  to.bounds = cfg.bounds && bounded;

  const int tasks = static_cast<int>(sizes.size()) * cfg.trials;
  std::vector<TrialResult> results(tasks);
  parallel_for(tasks, cfg.threads, [&](int i) {
    const int ni = i / cfg.trials;
    const int trial = i % cfg.trials;
    results[i] = run_trial(cfg, ctx, ops[ni], trial_seed(cfg.seed, trial), to);
    results[i].truth = CrnModel{};
  });

  const TheorySlopes theory = theory_slopes(cfg.noise_sd);
  std::string trials_csv = "n,trial,method,spectral_error,frobenius_error,support_mismatch\n";
  std::vector<TrialSummary> summaries;
  std::vector<double> ns;
  std::vector<double> bound_dif, bound_int;
  nlohmann::json failures = nlohmann::json::array();
  for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
    std::vector<ErrorReport> reports;
    std::vector<double> bd, bi;
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const TrialResult& r = results[ni * cfg.trials + trial];
      if (!r.ok) {
        failures.push_back({{"n", sizes[ni]}, {"trial", trial}, {"error", r.error}});
        continue;
      }
      reports.push_back(r.report);
      for (Method m : kMethods) {
        trials_csv += std::to_string(sizes[ni]) + "," + std::to_string(trial) + "," +
                      method_name(m) + "," + fmt6(r.report[m].spectral) + "," +
                      fmt6(r.report[m].frobenius) + "," +
                      std::to_string(r.report[m].support_mismatch) + "\n";
      }
      if (r.bounds) {
        bd.push_back(r.bounds->coefficient_bound_dif_apriori);
        bi.push_back(r.bounds->coefficient_bound_int_apriori);
      }
    }
    if (reports.empty()) {
      continue;
    }
    summaries.push_back(aggregate_trials(reports));
    ns.push_back(sizes[ni]);
    bound_dif.push_back(bd.empty() ? 0.0 : geometric_mean(bd));
    bound_int.push_back(bi.empty() ? 0.0 : geometric_mean(bi));
  }

  nlohmann::json fits;
  std::string sweep_csv = "n,method,gmean_error,slope_window\n";
  auto emit_series = [&](const std::string& name, const std::vector<double>& values,
                         double ref_slope) {
    double slope = std::nan("");
    nlohmann::json entry;
    entry["reference_slope"] = ref_slope;
    try {
      const DecayFit fit = fit_decay(ns, values, ref_slope);
      slope = fit.slope;
      entry["slope"] = fit.slope;
      entry["intercept"] = fit.intercept;
      entry["warnings"] = fit.warnings;
    } catch (const ConfigError& e) {
      entry["slope"] = nullptr;
      entry["warnings"] = {e.what()};
    }
    fits[name] = entry;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      sweep_csv += std::to_string(static_cast<int>(ns[i])) + "," + name + "," + fmt6(values[i]) +
                   "," + fmt6(slope) + "\n";
    }
  };
  for (Method m : kMethods) {
    std::vector<double> g;
    for (const TrialSummary& s : summaries) {
      g.push_back(s[m].gmean);
    }
    emit_series(method_name(m), g, reference_slope(m, theory));
  }
  if (to.bounds && !ns.empty()) {
    emit_series("dif_bound", bound_dif, theory.dif);
    emit_series("int_bound", bound_int, theory.integral);
  }
  // Slope-only reference lines anchored at the first LS point.
  if (!ns.empty()) {
    for (auto [name, method, slope] :
         {std::tuple{"dif_theory", Method::dif_ls, theory.dif},
          std::tuple{"int_theory", Method::int_ls, theory.integral}}) {
      const double anchor = summaries.front()[method].gmean;
      for (std::size_t i = 0; i < ns.size(); ++i) {
        sweep_csv += std::to_string(static_cast<int>(ns[i])) + "," + name + "," +
                     fmt6(anchor * std::pow(ns[i] / ns.front(), slope)) + "," + fmt6(slope) + "\n";
      }
    }
  }
  fits["failed_trials"] = failures.size();
  fits["failures"] = failures;
  fits["trials"] = cfg.trials;

  const OutputDir dir(cfg.output_dir);
  dir.write("config.json", config_dump(cfg), out);
  dir.write("sweep.csv", sweep_csv, out);
  dir.write("trials.csv", trials_csv, out);
  dir.write("fits.json", fits.dump(2) + "\n", out);
  std::ostringstream summary;
  for (Method m : kMethods) {
    const auto& f = fits[method_name(m)];
    summary << method_name(m) << " slope "
            << (f["slope"].is_null() ? std::string("n/a") : fmt6(f["slope"].get<double>()))
            << " (theory " << fmt6(f["reference_slope"].get<double>()) << ")\n";
  }
  summary << failures.size() << " failed trials\n";
  out.summary = summary.str();
  return out;
}

CommandOutput cmd_mismatch(const RunConfig& cfg) {
  CommandOutput out;
  const ModelContext ctx = load_model_context(cfg);
  OperatorCache cache(cfg.t0, cfg.tn);
  std::vector<std::shared_ptr<const SplineOperators>> ops;
  for (int n : cfg.resolutions) {
    ops.push_back(cache.get(n));
  }
  const int tasks = static_cast<int>(cfg.resolutions.size()) * cfg.trials;
  std::vector<TrialResult> results(tasks);
  TrialOptions to;
  parallel_for(tasks, cfg.threads, [&](int i) {
    const int ni = i / cfg.trials;
    const int trial = i % cfg.trials;
    results[i] = run_trial(cfg, ctx, ops[ni], trial_seed(cfg.seed, trial), to);
    results[i].truth = CrnModel{};
  });

  std::string hist = "n,method,mismatch_bin,count\n";
  std::string kirch = "n,method,kirchhoff_mismatch,count\n";
  std::ostringstream summary;
  int failed = 0;
  for (std::size_t ni = 0; ni < cfg.resolutions.size(); ++ni) {
    std::vector<ErrorReport> reports;
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const TrialResult& r = results[ni * cfg.trials + trial];
      if (r.ok) {
        reports.push_back(r.report);
      } else {
        ++failed;
      }
    }
    if (reports.empty()) {
      continue;
    }
    const TrialSummary s = aggregate_trials(reports);
    const std::string n = std::to_string(cfg.resolutions[ni]);
    for (Method m : {Method::dif_stls, Method::int_stls}) {
      for (int b = 0; b <= 10; ++b) {
        hist += n + "," + method_name(m) + "," + std::to_string(b) + "," +
                std::to_string(s[m].histogram[b]) + "\n";
      }
      for (const auto& [value, count] : s[m].kirchhoff) {
        kirch += n + "," + method_name(m) + "," + std::to_string(value) + "," +
                 std::to_string(count) + "\n";
      }
      kirch += n + "," + method_name(m) + ",size-mismatch," +
               std::to_string(s[m].kirchhoff_size_mismatch) + "\n";
      summary << "n=" << n << " " << method_name(m) << ": zero mismatch "
              << s[m].histogram[0] << "/" << s.trials << "\n";
    }
  }
  summary << failed << " failed trials\n";
  const OutputDir dir(cfg.output_dir);
  dir.write("config.json", config_dump(cfg), out);
  dir.write("mismatch_histogram.csv", hist, out);
  dir.write("kirchhoff_mismatch.csv", kirch, out);
  out.summary = summary.str();
  return out;
}

CommandOutput cmd_dump_operators(const RunConfig& cfg) {
  CommandOutput out;
  const SplineOperators ops = build_operators(UniformGrid(cfg.t0, cfg.tn, cfg.n_points - 1));
  const OutputDir dir(cfg.output_dir);
  dir.write("L.csv", matrix_csv(ops.L), out);
  dir.write("J.csv", matrix_csv(ops.J), out);
  const OperatorNorms norms = operator_norms(ops);
  out.summary = "n_points " + std::to_string(cfg.n_points) + ", ||L||_inf " + fmt6(norms.L_inf) +
                ", ||J||_inf " + fmt6(norms.J_inf) + "\n";
  return out;
}

}  // namespace crn
