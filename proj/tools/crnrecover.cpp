// Command line front end: simulate, recover, sweep, mismatch, dump-operators.
#include "crn/driver.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

// Raw flag storage; only flags that were given end up in the override document.
struct Flags {
  std::string model;
  std::string config;
  int w = 0;
  int n = 0;
  double t0 = 0.0;
  double tn = 0.0;
  int sweep_start = 0;
  int sweep_stop = 0;
  int sweep_step = 0;
  std::vector<int> resolutions;
  int trials = 0;
  double noise_sd = 0.0;
  std::string noise_kind;
  double truncation = 0.0;
  bool clip_negative = false;
  double tau = 0.0;
  int max_iter = 0;
  double svd_cutoff = 0.0;
  double edge_tol = 0.0;
  std::string scheme;
  std::vector<std::string> formulations;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  bool fixed_rates = false;
  bool no_bounds = false;
};

struct Bound {
  CLI::Option* opt;
  std::function<void(nlohmann::json&)> put;
};

std::vector<Bound> add_flags(CLI::App* app, Flags& f) {
  std::vector<Bound> b;
  auto add = [&](const std::string& name, auto& target, const std::string& key,
                 const std::string& help) {
    CLI::Option* o = app->add_option(name, target, help);
    b.push_back({o, [&target, key](nlohmann::json& d) { d[key] = target; }});
    return o;
  };
  app->add_option("--model", f.model, "preset (m1, m20, vdv) or model JSON file");
  app->add_option("--config", f.config, "JSON config file; command line values take precedence");
  add("--w", f.w, "w", "number of experiments");
  add("--n", f.n, "n_points", "grid points per experiment");
  add("--t0", f.t0, "t0", "start time");
  add("--tn", f.tn, "tn", "end time");
  CLI::Option* start = app->add_option("--sweep-start", f.sweep_start, "first grid size");
  CLI::Option* stop = app->add_option("--sweep-stop", f.sweep_stop, "last grid size");
  CLI::Option* step = app->add_option("--sweep-step", f.sweep_step, "grid size increment");
  b.push_back({start, [&f](nlohmann::json& d) { d["sweep"]["start"] = f.sweep_start; }});
  b.push_back({stop, [&f](nlohmann::json& d) { d["sweep"]["stop"] = f.sweep_stop; }});
  b.push_back({step, [&f](nlohmann::json& d) { d["sweep"]["step"] = f.sweep_step; }});
  add("--resolutions", f.resolutions, "resolutions", "grid sizes for mismatch")->delimiter(',');
  add("--trials", f.trials, "trials", "trials per grid size");
  add("--noise-sd", f.noise_sd, "noise_sd", "noise standard deviation");
  add("--noise-kind", f.noise_kind, "noise_kind", "gaussian or truncated");
  add("--truncation", f.truncation, "truncation", "truncation in standard deviations");
  CLI::Option* clip = app->add_flag("--clip-negative", f.clip_negative,
                                    "clip negative noisy samples to zero");
  b.push_back({clip, [&f](nlohmann::json& d) { d["clip_negative"] = f.clip_negative; }});
  add("--tau", f.tau, "tau", "STLS threshold");
  add("--max-iter", f.max_iter, "max_iter", "STLS iteration limit");
  add("--svd-cutoff", f.svd_cutoff, "svd_cutoff", "relative singular value cutoff");
  add("--edge-tol", f.edge_tol, "edge_tol", "relative edge threshold for the Kirchhoff fit");
  add("--scheme", f.scheme, "scheme",
      "active_columns, active_plus_zero or species_as_sources");
  add("--formulation", f.formulations, "formulations", "differential and/or integral")
      ->delimiter(',');
  add("--seed", f.seed, "seed", "master seed");
  add("--out", f.out, "output_dir", "output directory");
  add("--threads", f.threads, "threads", "worker threads");
  add("--rel-tol", f.rel_tol, "rel_tol", "integrator relative tolerance");
  add("--abs-tol", f.abs_tol, "abs_tol", "integrator absolute tolerance");
  CLI::Option* fixed = app->add_flag("--fixed-rates", f.fixed_rates,
                                     "use the model's rates instead of sampling them");
  b.push_back({fixed, [](nlohmann::json& d) { d["sample_rates"] = false; }});
  CLI::Option* nb = app->add_flag("--no-bounds", f.no_bounds, "skip error bound evaluation");
  b.push_back({nb, [](nlohmann::json& d) { d["bounds"] = false; }});
  return b;
}

nlohmann::json read_config_file(const std::string& path) {
  if (path.empty()) {
    return nullptr;
  }
  std::ifstream in(path);
  if (!in) {
    throw crn::ConfigError("cannot read config file '" + path + "'");
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw crn::ConfigError("config file '" + path + "': " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recover mass-action reaction networks from concentration time series"};
  app.require_subcommand(1);

  using Command = crn::CommandOutput (*)(const crn::RunConfig&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"simulate", "simulate trajectories and write them as CSV", crn::cmd_simulate},
      {"recover", "recover coefficients and a reaction graph from one data set", crn::cmd_recover},
      {"sweep", "error decay over a range of grid sizes", crn::cmd_sweep},
      {"mismatch", "support and graph mismatch histograms over trials", crn::cmd_mismatch},
      {"dump-operators", "write the spline operators L and J", crn::cmd_dump_operators},
  };

  std::vector<Flags> flags(commands.size());
  std::vector<std::vector<Bound>> bound(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(std::get<0>(commands[i]), std::get<1>(commands[i]));
    bound[i] = add_flags(sub, flags[i]);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) {
      continue;
    }
    try {
      nlohmann::json cli = nlohmann::json::object();
      for (const Bound& b : bound[i]) {
        if (b.opt->count() > 0) {
          b.put(cli);
        }
      }
      if (!flags[i].model.empty()) {
        cli["model"] = flags[i].model;
      }
      const crn::RunConfig cfg =
          crn::resolve_config("m1", read_config_file(flags[i].config), cli);
      const crn::CommandOutput out = std::get<2>(commands[i])(cfg);
      std::cout << out.summary;
      if (!out.summary.empty() && out.summary.back() != '\n') {
        std::cout << '\n';
      }
      for (const auto& file : out.files) {
        std::cout << "wrote " << file << '\n';
      }
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return crn::exit_code_for(e);
    }
  }
  return 2;
}
