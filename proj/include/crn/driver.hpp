#pragma once

#include "crn/error_analysis.hpp"
#include "crn/graph_recovery.hpp"
#include "crn/presets.hpp"
#include "crn/sparse_recovery.hpp"
#include "crn/spline.hpp"
#include "crn/trajectory.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace crn {

struct SweepSpec {
  int start = 50;
  int stop = 1000;
  int step = 50;
  std::vector<int> values() const;
};

/// Resolved run configuration. Field names double as the JSON config keys.
struct RunConfig {
  std::string model = "m1";  // preset name or path to a model JSON file
  int w = 6;
  double t0 = 0.0;
  double tn = 20.0;
  int n_points = 50;                       // grid size for single runs
  SweepSpec sweep;                         // grid sizes for `sweep`
  std::vector<int> resolutions = {25, 50, 75, 100};  // grid sizes for `mismatch`
  int trials = 1;
  double noise_sd = 0.0;
  std::string noise_kind = "gaussian";
  double truncation = 3.0;
  bool clip_negative = false;
  double tau = 1e-2;
  int max_iter = 20;
  double svd_cutoff = 1e-10;
  double edge_tol = 1e-2;  // relative to the largest fitted rate
  std::string scheme = "active_columns";
  std::vector<std::string> formulations = {"differential", "integral"};
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int threads = 1;
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  double k_min = 5e-2;
  double k_max = 1.0;
  bool sample_rates = true;
  bool bounds = true;  // evaluate the a priori coefficient bounds in sweeps

  void validate() const;
};

nlohmann::json config_to_json(const RunConfig& cfg);
/// Overwrites the fields present in `doc`; unknown keys are a ConfigError.
void apply_config_json(RunConfig& cfg, const nlohmann::json& doc);

/// Preset defaults for `model` (or generic defaults for a model file), then the config file
/// document, then explicit command line values.
RunConfig resolve_config(const std::string& model, const nlohmann::json& file_doc,
                         const nlohmann::json& cli_doc);

/// The ground-truth model template and protocol selected by a config.
struct ModelContext {
  CrnModel model;
  std::optional<RateRange> rates;
  std::string name;
};
ModelContext load_model_context(const RunConfig& cfg);

/// Spline operators keyed by grid size, built once and shared read-only across trials.
class OperatorCache {
 public:
  OperatorCache(double t0, double tn) : t0_(t0), tn_(tn) {}
  std::shared_ptr<const SplineOperators> get(int n_points);

 private:
  double t0_;
  double tn_;
  std::map<int, std::shared_ptr<const SplineOperators>> cache_;
};

struct TrialResult {
  bool ok = false;
  std::string error;
  CrnModel truth;
  TrajectoryBundle bundle;
  RecoveryResult dif;
  RecoveryResult integral;
  ErrorReport report;
  std::optional<BoundReport> bounds;
};

struct TrialOptions {
  bool recover_dif = true;
  bool recover_int = true;
  bool kirchhoff = true;
  bool bounds = false;
  bool keep_data = false;  // keep bundle in the result
  bool rethrow = false;    // propagate failures instead of recording them
};

/// One realization: simulate (rates and initial states from `trial_seed`), add noise
/// (seeded per trial and grid size), recover with both formulations, score against truth.
/// Failures are returned with ok = false unless options.rethrow is set.
TrialResult run_trial(const RunConfig& cfg, const ModelContext& ctx,
                      std::shared_ptr<const SplineOperators> ops, std::uint64_t trial_seed,
                      const TrialOptions& options);

std::uint64_t trial_seed(std::uint64_t seed, int trial);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index runs exactly once.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Graph pipeline on one coefficient matrix: filter under the configured scheme and fit.
struct GraphResult {
  EffectiveModel effective;
  KirchhoffFit fit;
};
GraphResult recover_graph(const Matrix& C, const MonomialBasis& basis, const RunConfig& cfg);

// Commands. Each writes into cfg.output_dir and returns a process exit code.
struct CommandOutput {
  std::vector<std::string> files;
  std::string summary;
};
CommandOutput cmd_simulate(const RunConfig& cfg);
CommandOutput cmd_recover(const RunConfig& cfg);
CommandOutput cmd_sweep(const RunConfig& cfg);
CommandOutput cmd_mismatch(const RunConfig& cfg);
CommandOutput cmd_dump_operators(const RunConfig& cfg);

/// Exit code for an exception escaping a command: 2 config, 3 numerical, 4 empty model.
int exit_code_for(const std::exception& e);

/// %.6g / %.17g helpers used by every writer.
std::string fmt6(double v);
std::string fmt17(double v);

}  // namespace crn
