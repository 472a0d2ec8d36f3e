#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crn/driver.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace crn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("crn_test_driver_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

RunConfig small(const std::string& name, json extra = json::object()) {
  json cli = {{"n_points", 20}, {"output_dir", scratch(name).string()}};
  cli.update(extra);
  return resolve_config("m1", nullptr, cli);
}

}  // namespace

TEST_CASE("config precedence") {
  const json file = {{"tau", 0.5}, {"w", 3}, {"seed", 11}};
  const json cli = {{"tau", 0.25}};
  const RunConfig c = resolve_config("m1", file, cli);
  CHECK(c.tau == 0.25);
  CHECK(c.w == 3);
  CHECK(c.seed == 11);
  CHECK(c.tn == 20.0);

  const RunConfig v = resolve_config("vdv", nullptr, nullptr);
  CHECK(v.w == 4);
  CHECK(v.tau == 1e-4);
  CHECK(v.scheme == "species_as_sources");
  CHECK_FALSE(v.sample_rates);

  const RunConfig m = resolve_config("m1", json{{"model", "m20"}}, nullptr);
  CHECK(m.model == "m20");
  CHECK(m.w == 8);
  CHECK(m.scheme == "active_plus_zero");
}

TEST_CASE("config round trip and rejection") {
  RunConfig c = resolve_config("m1", nullptr, json{{"sweep", {{"start", 20}}}});
  CHECK(c.sweep.start == 20);
  CHECK(c.sweep.stop == 1000);
  RunConfig d;
  apply_config_json(d, config_to_json(c));
  CHECK(config_to_json(d) == config_to_json(c));

  CHECK_THROWS_AS(resolve_config("m1", json{{"bogus", 1}}, nullptr), ConfigError);
  CHECK_THROWS_AS(resolve_config("m1", nullptr, json{{"n_points", 3}}), ConfigError);
  CHECK_THROWS_AS(resolve_config("m1", nullptr, json{{"svd_cutoff", 0.0}}), ConfigError);
  CHECK_THROWS_AS(resolve_config("m1", nullptr, json{{"scheme", "x"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config("m1", nullptr, json{{"tau", "big"}}), ConfigError);
  // Non-preset names are model file paths, checked on load.
  CHECK_THROWS_AS(load_model_context(resolve_config("nope", nullptr, nullptr)), ConfigError);

  SweepSpec s{50, 200, 50};
  CHECK(s.values() == std::vector<int>{50, 100, 150, 200});
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(NumericalError("x")) == 3);
  CHECK(exit_code_for(EmptyModelError("x")) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 3);
}

TEST_CASE("parallel_for runs every index once") {
  for (int threads : {1, 3}) {
    std::vector<std::atomic<int>> hits(57);
    parallel_for(57, threads, [&](int i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(5, 2, [](int i) {
                    if (i == 3) throw NumericalError("boom");
                  }),
                  NumericalError);
}

TEST_CASE("simulate writes clean and noisy blocks") {
  RunConfig c = small("sim", {{"noise_sd", 1e-3}, {"seed", 5}});
  cmd_simulate(c);
  const fs::path dir = c.output_dir;
  for (const char* f : {"trajectory.csv", "metadata.json", "model.json", "config.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto rows = lines(slurp(dir / "trajectory.csv"));
  CHECK(rows.front() == "t,exp,A,P,cat,catA,noisy");
  CHECK(rows.size() == 1 + 2 * 6 * 20);

  const std::string first = slurp(dir / "trajectory.csv");
  cmd_simulate(c);
  CHECK(slurp(dir / "trajectory.csv") == first);

  RunConfig clean = small("sim_clean", {{"seed", 5}});
  cmd_simulate(clean);
  const auto crow = lines(slurp(fs::path(clean.output_dir) / "trajectory.csv"));
  for (int i = 1; i <= 6 * 20; ++i) {
    const std::string a = crow[i].substr(0, crow[i].rfind(','));
    const std::string b = crow[i + 6 * 20].substr(0, crow[i + 6 * 20].rfind(','));
    CHECK(a == b);
  }
}

TEST_CASE("recover writes every artifact") {
  RunConfig c = small("rec", {{"n_points", 60}, {"seed", 2}});
  const CommandOutput out = cmd_recover(c);
  const fs::path dir = c.output_dir;
  for (const char* f : {"recovery_differential.json", "recovery_integral.json",
                        "kirchhoff_integral.json", "graph_integral.dot", "errors.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const json e = json::parse(slurp(dir / "errors.json"));
  CHECK(e["integral"]["rank"] == 14);
  CHECK(e["integral"]["ls_spectral_error"].get<double>() < 1e-2);
  CHECK_FALSE(out.summary.empty());

  RunConfig empty = small("rec_empty", {{"tau", 100.0}});
  CHECK_THROWS_AS(cmd_recover(empty), EmptyModelError);
  CHECK(fs::exists(fs::path(empty.output_dir) / "errors.json"));
}

TEST_CASE("single-row sweep") {
  RunConfig c = small("sweep", {{"sweep", {{"start", 40}, {"stop", 40}, {"step", 10}}},
                                {"trials", 2}, {"bounds", false}});
  cmd_sweep(c);
  const fs::path dir = c.output_dir;
  const auto rows = lines(slurp(dir / "sweep.csv"));
  CHECK(rows.front() == "n,method,gmean_error,slope_window");
  CHECK(rows.size() == 1 + 4 + 2);
  const json fits = json::parse(slurp(dir / "fits.json"));
  CHECK(fits["dif_ls"]["slope"].is_null());
  CHECK(fits["failed_trials"] == 0);
  CHECK(lines(slurp(dir / "trials.csv")).size() == 1 + 2 * 4);
}

TEST_CASE("mismatch with one trial") {
  RunConfig c = small("mm", {{"resolutions", {30}}, {"trials", 1}});
  cmd_mismatch(c);
  const auto rows = lines(slurp(fs::path(c.output_dir) / "mismatch_histogram.csv"));
  CHECK(rows.front() == "n,method,mismatch_bin,count");
  CHECK(rows.size() == 1 + 2 * 11);
  int total = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    total += std::stoi(rows[i].substr(rows[i].rfind(',') + 1));
  }
  CHECK(total == 2);
  CHECK(fs::exists(fs::path(c.output_dir) / "kirchhoff_mismatch.csv"));
}

TEST_CASE("dump-operators") {
  RunConfig c = small("ops", {{"n_points", 11}});
  cmd_dump_operators(c);
  const auto l = lines(slurp(fs::path(c.output_dir) / "L.csv"));
  CHECK(l.size() == 11);
  CHECK(std::count(l[0].begin(), l[0].end(), ',') == 10);
}
