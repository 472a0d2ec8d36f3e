#include "crn/trajectory.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace crn {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void ExperimentConfig::validate(int species_count) const {
  if (!(tn > t0) || !std::isfinite(t0) || !std::isfinite(tn)) {
    throw ConfigError("experiment interval must satisfy t0 < tn");
  }
  if (n_points < 4) {
    throw ConfigError("experiment needs at least 4 time points");
  }
  if (initial_state.size() != 0) {
    if (initial_state.size() != species_count) {
      throw ConfigError("initial state dimension does not match model");
    }
    for (Eigen::Index i = 0; i < initial_state.size(); ++i) {
      if (!std::isfinite(initial_state(i)) || initial_state(i) < 0.0) {
        throw ConfigError("initial state must be finite and nonnegative");
      }
    }
  }
}

Vector uniform_grid(double t0, double tn, int n_points) {
  Vector grid(n_points);
  const double h = (tn - t0) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    grid(i) = t0 + i * h;
  }
  grid(n_points - 1) = tn;
  return grid;
}

Trajectory integrate_at(const CrnModel& model, const Vector& x0, const Vector& times,
                        const IntegratorOptions& options, bool with_dictionary_integrals) {
  const int m = model.species_count();
  const int n = model.complex_count();
  if (x0.size() != m) {
    throw ConfigError("initial state dimension does not match model");
  }
  if (!(options.rel_tol > 0.0 && options.rel_tol <= 1e-3 && options.abs_tol > 0.0 &&
        options.abs_tol <= 1e-3)) {
    throw ConfigError("integrator tolerances must lie in (0, 1e-3]");
  }
  for (Eigen::Index i = 1; i < times.size(); ++i) {
    if (!(times(i) > times(i - 1))) {
      throw ConfigError("output times must be strictly increasing");
    }
  }

  Trajectory traj;
  traj.times = times;
  if (!with_dictionary_integrals) {
    auto f = [&](double, const Vector& x) -> Vector { return rhs(model, x); };
    traj.states = dormand_prince(f, x0, times, options, &traj.stats);
  } else {
    // Augmented system (x, z) with z' = d(x); only x enters the error control scale
    // through abs/rel tolerances, z is controlled like any other component.
    auto f = [&](double, const Vector& y) -> Vector {
      Vector out(m + n);
      const Vector d = evaluate_dictionary(model.basis, y.head(m));
      out.head(m) = model.coefficients * d;
      out.tail(n) = d;
      return out;
    };
    Vector y0 = Vector::Zero(m + n);
    y0.head(m) = x0;
    Matrix full = dormand_prince(f, y0, times, options, &traj.stats);
    traj.states = full.topRows(m);
    traj.dictionary_integrals = full.bottomRows(n);
  }
  traj.stats.min_state = traj.states.size() > 0 ? traj.states.minCoeff() : 0.0;
  traj.stats.negative_excursion = traj.stats.min_state < -options.abs_tol;
  return traj;
}

Trajectory integrate_ode(const CrnModel& model, const ExperimentConfig& config,
                         const IntegratorOptions& options) {
  config.validate(model.species_count());
  if (config.initial_state.size() != model.species_count()) {
    throw ConfigError("experiment has no initial state");
  }
  return integrate_at(model, config.initial_state,
                      uniform_grid(config.t0, config.tn, config.n_points), options);
}

Matrix initial_value_matrix(const Matrix& x, int experiments, int points) {
  Matrix ivp(x.rows(), x.cols());
  for (int b = 0; b < experiments; ++b) {
    const Vector first = x.col(static_cast<Eigen::Index>(b) * points);
    for (int j = 0; j < points; ++j) {
      ivp.col(static_cast<Eigen::Index>(b) * points + j) = first;
    }
  }
  return ivp;
}

TrajectoryBundle simulate_bundle(const CrnModel& model, const Matrix& initial_states,
                                 double t0, double tn, int n_points,
                                 const SimulationOptions& options) {
  ExperimentConfig probe{t0, tn, n_points, {}, 0};
  probe.validate(model.species_count());
  const int w = static_cast<int>(initial_states.cols());
  if (w < 1) {
    throw ConfigError("at least one experiment is required");
  }
  const int m = model.species_count();
  const int n = model.complex_count();

  TrajectoryBundle bundle;
  bundle.experiments = w;
  bundle.grid = uniform_grid(t0, tn, n_points);
  bundle.X.resize(m, static_cast<Eigen::Index>(w) * n_points);
  bundle.X_dot.resize(m, bundle.X.cols());
  if (options.dictionary_integrals) {
    bundle.dictionary_integrals.resize(n, bundle.X.cols());
  }
  bundle.stats.min_state = std::numeric_limits<double>::infinity();
  for (int b = 0; b < w; ++b) {
    Trajectory traj = integrate_at(model, initial_states.col(b), bundle.grid,
                                   options.integrator, options.dictionary_integrals);
    const Eigen::Index off = static_cast<Eigen::Index>(b) * n_points;
    bundle.X.middleCols(off, n_points) = traj.states;
    if (options.dictionary_integrals) {
      bundle.dictionary_integrals.middleCols(off, n_points) = traj.dictionary_integrals;
    }
    bundle.stats.accepted += traj.stats.accepted;
    bundle.stats.rejected += traj.stats.rejected;
    bundle.stats.min_state = std::min(bundle.stats.min_state, traj.stats.min_state);
    bundle.stats.negative_excursion |= traj.stats.negative_excursion;
  }
  for (Eigen::Index j = 0; j < bundle.X.cols(); ++j) {
    bundle.X_dot.col(j) = rhs(model, bundle.X.col(j));
  }
  bundle.X_clean = bundle.X;
  bundle.X_ivp = initial_value_matrix(bundle.X, w, n_points);
  bundle.noise_bound = 0.0;
  return bundle;
}

namespace {

Matrix sample_initial_states(Rng& rng, int species, int w) {
  Matrix x0(species, w);
  for (int b = 0; b < w; ++b) {
    for (int a = 0; a < species; ++a) {
      x0(a, b) = rng.uniform(0.0, 1.0);
    }
  }
  return x0;
}

}  // namespace

std::pair<CrnModel, TrajectoryBundle> simulate_experiments(const CrnModel& model_template,
                                                           const RateRange& k_range, int w,
                                                           const ExperimentConfig& config,
                                                           std::uint64_t seed,
                                                           const SimulationOptions& options) {
  if (!(k_range.k_min > 0.0) || !(k_range.k_max >= k_range.k_min)) {
    throw ConfigError("rate range must satisfy 0 < k_min <= k_max");
  }
  if (w < 1) {
    throw ConfigError("at least one experiment is required");
  }
  Rng rng(seed);
  ReactionList reactions = model_template.reactions;
  for (Reaction& r : reactions) {
    r.rate = k_range.k_min == k_range.k_max ? k_range.k_min
                                            : rng.uniform(k_range.k_min, k_range.k_max);
  }
  CrnModel model = assemble_model(model_template.species_names, model_template.basis, reactions);
  const Matrix x0 = sample_initial_states(rng, model.species_count(), w);
  TrajectoryBundle bundle = simulate_bundle(model, x0, config.t0, config.tn, config.n_points,
                                            options);
  bundle.rng_seed = seed;
  return {std::move(model), std::move(bundle)};
}

std::pair<CrnModel, TrajectoryBundle> simulate_fixed_rates(const CrnModel& model, int w,
                                                           const ExperimentConfig& config,
                                                           std::uint64_t seed,
                                                           const SimulationOptions& options) {
  if (w < 1) {
    throw ConfigError("at least one experiment is required");
  }
  Rng rng(seed);
  const Matrix x0 = sample_initial_states(rng, model.species_count(), w);
  TrajectoryBundle bundle = simulate_bundle(model, x0, config.t0, config.tn, config.n_points,
                                            options);
  bundle.rng_seed = seed;
  return {model, std::move(bundle)};
}

TrajectoryBundle add_noise(const TrajectoryBundle& bundle, double sd, std::uint64_t seed,
                           const NoiseOptions& options) {
  if (!(sd >= 0.0) || !std::isfinite(sd)) {
    throw ConfigError("noise standard deviation must be finite and nonnegative");
  }
  TrajectoryBundle out = bundle;
  out.noise_kind = options.kind;
  out.noise_seed = seed;
  if (sd == 0.0) {
    return out;
  }
  if (options.kind == NoiseKind::truncated && !(options.truncation > 0.0)) {
    throw ConfigError("noise truncation level must be positive");
  }
  Rng rng(seed);
  const double limit = options.truncation * sd;
  for (Eigen::Index j = 0; j < out.X.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.X.rows(); ++i) {
      double xi = rng.normal(sd);
      if (options.kind == NoiseKind::truncated) {
        while (std::abs(xi) > limit) {
          xi = rng.normal(sd);
        }
      }
      double v = out.X(i, j) + xi;
      if (options.clip_negative && v < 0.0) {
        v = 0.0;
      }
      out.X(i, j) = v;
    }
  }
  out.noise_sd = sd;
  out.noise_bound = options.kind == NoiseKind::truncated
                        ? limit
                        : std::numeric_limits<double>::infinity();
  out.X_ivp = initial_value_matrix(out.X, out.experiments, out.points());
  return out;
}

namespace {

void append_number(std::string& s, double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  s += buf;
}

}  // namespace

std::string trajectory_csv(const TrajectoryBundle& bundle,
                           const std::vector<std::string>& species) {
  std::string s = "t,exp";
  for (const auto& name : species) {
    s += ',';
    s += name;
  }
  s += ",noisy\n";
  for (int noisy = 0; noisy < 2; ++noisy) {
    const Matrix& x = noisy ? bundle.X : bundle.X_clean;
    for (int b = 0; b < bundle.experiments; ++b) {
      for (int k = 0; k < bundle.points(); ++k) {
        append_number(s, bundle.grid(k), 17);
        s += ',' + std::to_string(b);
        const Eigen::Index col = static_cast<Eigen::Index>(b) * bundle.points() + k;
        for (Eigen::Index a = 0; a < x.rows(); ++a) {
          s += ',';
          append_number(s, x(a, col), 17);
        }
        s += noisy ? ",1\n" : ",0\n";
      }
    }
  }
  return s;
}

std::string bundle_metadata_json(const TrajectoryBundle& bundle, double t0, double tn) {
  nlohmann::json doc;
  doc["w"] = bundle.experiments;
  doc["n"] = bundle.intervals();
  doc["n_points"] = bundle.points();
  doc["t0"] = t0;
  doc["tn"] = tn;
  doc["sd"] = bundle.noise_sd;
  doc["noise_kind"] = bundle.noise_kind == NoiseKind::gaussian ? "gaussian" : "truncated";
  doc["seed"] = bundle.rng_seed;
  doc["noise_seed"] = bundle.noise_seed;
  doc["integrator_steps"] = bundle.stats.accepted;
  doc["negative_excursion"] = bundle.stats.negative_excursion;
  return doc.dump(2);
}

}  // namespace crn
