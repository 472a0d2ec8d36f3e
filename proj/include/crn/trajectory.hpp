#pragma once

#include "crn/linalg.hpp"
#include "crn/mass_action.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>

namespace crn {

/// Mixes a seed with a stream index (SplitMix64 finalizer). Used to derive
/// independent per-trial and per-purpose sub-seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded Mersenne Twister wrapper; every random draw in the library goes through one.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(derive_seed(seed, 0x9E3779B97F4A7C15ULL)) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double sd) { return std::normal_distribution<double>(0.0, sd)(engine_); }

 private:
  std::mt19937_64 engine_;
};

struct ExperimentConfig {
  double t0 = 0.0;
  double tn = 20.0;
  int n_points = 101;  // grid size n + 1
  Vector initial_state;
  std::uint64_t seed = 0;

  int intervals() const { return n_points - 1; }
  double step() const { return (tn - t0) / intervals(); }
  void validate(int species_count) const;
};

Vector uniform_grid(double t0, double tn, int n_points);

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  long max_steps = 10'000'000;
};

struct IntegratorStats {
  long accepted = 0;
  long rejected = 0;
  double min_state = std::numeric_limits<double>::infinity();
  bool negative_excursion = false;  // some state fell below -abs_tol
};

struct Trajectory {
  Vector times;
  Matrix states;  // M x times
  /// Cumulative integrals of the dictionary from times(0), N x times. Only filled on
  /// request; integrated together with the state so it is as accurate as the state.
  Matrix dictionary_integrals;
  IntegratorStats stats;
};

/// Adaptive Dormand-Prince 5(4) integration of the mass-action system that lands
/// exactly on each requested output time. Throws NumericalError on step-size underflow.
Trajectory integrate_at(const CrnModel& model, const Vector& x0, const Vector& times,
                        const IntegratorOptions& options = {},
                        bool with_dictionary_integrals = false);

Trajectory integrate_ode(const CrnModel& model, const ExperimentConfig& config,
                         const IntegratorOptions& options = {});

/// Generic Dormand-Prince driver for an arbitrary right hand side; used by the
/// mass-action wrappers above and by tests on analytic problems.
template <class Rhs>
Matrix dormand_prince(Rhs&& f, const Vector& y0, const Vector& times,
                      const IntegratorOptions& options, IntegratorStats* stats = nullptr);

enum class NoiseKind { gaussian, truncated };

struct TrajectoryBundle {
  int experiments = 0;  // w
  Vector grid;          // shared, n + 1 points
  Matrix X;             // M x w(n+1), experiment blocks side by side
  Matrix X_ivp;         // M x w(n+1), each block repeats its first column
  Matrix X_clean;       // noiseless copy of X (equal to X when noise_sd == 0)
  Matrix X_dot;         // exact time derivatives at the samples (from the model)
  /// Exact cumulative dictionary integrals per block, N x w(n+1); empty unless requested.
  Matrix dictionary_integrals;
  double noise_sd = 0.0;
  NoiseKind noise_kind = NoiseKind::gaussian;
  double noise_bound = 0.0;  // epsilon for truncated noise, infinity for gaussian
  std::uint64_t rng_seed = 0;
  std::uint64_t noise_seed = 0;
  IntegratorStats stats;

  int points() const { return static_cast<int>(grid.size()); }
  int intervals() const { return points() - 1; }
  int species() const { return static_cast<int>(X.rows()); }
  Matrix X0() const { return X - X_ivp; }
  Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> block(const Matrix& m, int b) const {
    return m.middleCols(static_cast<Eigen::Index>(b) * points(), points());
  }
};

Matrix initial_value_matrix(const Matrix& x, int experiments, int points);

struct SimulationOptions {
  IntegratorOptions integrator;
  bool dictionary_integrals = false;
};

/// Integrates the model from each initial state (columns of `initial_states`).
TrajectoryBundle simulate_bundle(const CrnModel& model, const Matrix& initial_states,
                                 double t0, double tn, int n_points,
                                 const SimulationOptions& options = {});

struct RateRange {
  double k_min = 5e-2;
  double k_max = 1.0;
};

/// Samples every reaction rate i.i.d. uniform on the range and `w` initial states
/// i.i.d. uniform on [0, 1]^M, then integrates each experiment.
std::pair<CrnModel, TrajectoryBundle> simulate_experiments(const CrnModel& model_template,
                                                           const RateRange& k_range, int w,
                                                           const ExperimentConfig& config,
                                                           std::uint64_t seed,
                                                           const SimulationOptions& options = {});

/// Same as above but keeps the template's rate constants.
std::pair<CrnModel, TrajectoryBundle> simulate_fixed_rates(const CrnModel& model, int w,
                                                           const ExperimentConfig& config,
                                                           std::uint64_t seed,
                                                           const SimulationOptions& options = {});

struct NoiseOptions {
  NoiseKind kind = NoiseKind::gaussian;
  double truncation = 3.0;  // in standard deviations, truncated kind only
  bool clip_negative = false;
};

/// Adds i.i.d. N(0, sd^2) noise (optionally truncated) to X and rebuilds X_ivp from the
/// noisy first samples. sd == 0 returns the bundle unchanged.
TrajectoryBundle add_noise(const TrajectoryBundle& bundle, double sd, std::uint64_t seed,
                           const NoiseOptions& options = {});

/// CSV with header `t,exp,<species...>,noisy`: one row per (experiment, time) for the clean
/// data (noisy = 0) followed by the same rows for the observed data (noisy = 1).
std::string trajectory_csv(const TrajectoryBundle& bundle,
                           const std::vector<std::string>& species);
std::string bundle_metadata_json(const TrajectoryBundle& bundle, double t0, double tn);

// ---------------------------------------------------------------------------

template <class Rhs>
Matrix dormand_prince(Rhs&& f, const Vector& y0, const Vector& times,
                      const IntegratorOptions& options, IntegratorStats* stats) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // Difference between the 5th order and embedded 4th order weights.
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const Eigen::Index dim = y0.size();
  Matrix out(dim, times.size());
  IntegratorStats local;
  IntegratorStats& st = stats != nullptr ? *stats : local;
  if (times.size() == 0) {
    return out;
  }

  Vector y = y0;
  double t = times(0);
  out.col(0) = y;

  Vector k1 = f(t, y), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  Vector ytmp(dim), ynew(dim), err(dim);

  const double span = times(times.size() - 1) - times(0);
  // Initial step from the local derivative scale (Hairer-Norsett-Wanner heuristic, simplified).
  double h = 0.0;
  {
    Vector scale = (options.abs_tol + options.rel_tol * y.array().abs()).matrix();
    const double d0 = (y.array() / scale.array()).matrix().norm() / std::sqrt(double(dim));
    const double d1 = (k1.array() / scale.array()).matrix().norm() / std::sqrt(double(dim));
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, std::abs(span) > 0 ? std::abs(span) : 1.0);
  }
  const double min_step = 1e-14 * std::max(1.0, std::abs(span));

  for (Eigen::Index out_i = 1; out_i < times.size(); ++out_i) {
    const double t_target = times(out_i);
    while (t < t_target) {
      if (st.accepted + st.rejected >= options.max_steps) {
        throw NumericalError("integrator exceeded the maximum number of steps");
      }
      bool landing = false;
      double step = h;
      if (t + step >= t_target - 1e-14 * std::abs(t_target)) {
        step = t_target - t;
        landing = true;
      }
      ytmp = y + step * a21 * k1;
      k2 = f(t + c2 * step, ytmp);
      ytmp = y + step * (a31 * k1 + a32 * k2);
      k3 = f(t + c3 * step, ytmp);
      ytmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
      k4 = f(t + c4 * step, ytmp);
      ytmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      k5 = f(t + c5 * step, ytmp);
      ytmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      k6 = f(t + step, ytmp);
      ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = f(t + step, ynew);
      err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double norm = 0.0;
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double sc =
            options.abs_tol + options.rel_tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
        norm += (err(i) / sc) * (err(i) / sc);
      }
      norm = std::sqrt(norm / double(dim));

      if (norm <= 1.0) {
        ++st.accepted;
        t = landing ? t_target : t + step;
        y = ynew;
        k1 = k7;
        const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
        // A landing step is usually truncated; do not let it shrink the next step.
        h = landing ? std::max(h, step * factor) : step * factor;
      } else {
        ++st.rejected;
        h = step * std::max(0.2, 0.9 * std::pow(norm, -0.2));
        if (h < min_step) {
          throw NumericalError("integrator step size underflow");
        }
      }
    }
    out.col(out_i) = y;
  }
  return out;
}

}  // namespace crn
