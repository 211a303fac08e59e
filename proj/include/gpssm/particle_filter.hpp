#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gpssm/linear_ssm.hpp"
#include "gpssm/rng.hpp"
#include "json.hpp"

namespace gpssm {

/// m particles of dimension dim, packed row by row.
class ParticleCloud {
 public:
  ParticleCloud() = default;
  ParticleCloud(std::size_t count, std::size_t dim) : dim_(dim), values_(count * dim, 0.0) {}

  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<double> operator[](std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  std::span<const double> operator[](std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> packed() const { return values_; }
  std::span<double> packed() { return values_; }
  /// First state component of every particle.
  std::vector<double> leading() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Randomness for one filter run. Each (step, particle) pair owns its own
/// stream, so propagation order and threading do not affect results.
class RandomStreams {
 public:
  explicit RandomStreams(std::uint64_t seed) : seed_(seed) {}
  Rng particle(int step, std::size_t index) const {
    return Rng(derive_seed(seed_, 1, static_cast<std::uint64_t>(step), index));
  }
  Rng resampling(int step) const {
    return Rng(derive_seed(seed_, 2, static_cast<std::uint64_t>(step)));
  }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// A (possibly nonlinear) state-space model the bootstrap filter can run:
/// an initial-state sampler, a transition sampler and an observation
/// log-density. Steps are numbered 1..N; step 0 is the initial state.
class NonlinearModel {
 public:
  virtual ~NonlinearModel() = default;

  virtual std::size_t state_dim() const = 0;
  virtual void sample_initial(std::span<double> state, Rng& rng) const = 0;
  /// Replaces x_{step-1} in `state` by a draw of x_step.
  virtual void sample_transition(std::span<double> state, int step, Rng& rng) const = 0;
  /// log p(y | state); may be -inf, must not be NaN.
  virtual double log_observation(std::span<const double> state, double y, int step) const = 0;

  /// Batch forms. The defaults call the per-particle samplers with the
  /// particle's own stream; models with a cheaper batch path override them.
  virtual void initialize(ParticleCloud& cloud, const RandomStreams& streams) const;
  virtual void propagate(ParticleCloud& cloud, int step, const RandomStreams& streams) const;
};

enum class Resampling { Multinomial, Systematic };

struct PfOptions {
  std::size_t particles = 1000;
  std::uint64_t seed = 0;
  Resampling resampling = Resampling::Multinomial;
  /// Resample only when ESS < threshold * m. 0 disables the test, i.e. the
  /// filter resamples at every step.
  double ess_threshold = 0.0;
  bool summaries = true;
  /// Keep every predicted cloud and ancestry (needed for smoothing).
  bool store_history = false;
};

struct StepSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q975 = 0.0;
  double ess = 0.0;
  double log_increment = 0.0;  // log sum_j W_{n-1}^j w~_n^j
  bool resampled = true;
};

struct PfHistory {
  std::vector<ParticleCloud> predicted;                 // x^_n, before resampling
  std::vector<std::vector<std::uint32_t>> ancestors;    // particle i after step n is predicted[n][a_n(i)]
  std::vector<std::vector<double>> weights;             // normalized weights after step n
};

struct PfResult {
  double loglik = 0.0;
  /// Delta-method Monte Carlo standard error of loglik, summed over steps.
  double loglik_se = 0.0;
  std::size_t particles = 0;
  std::uint64_t seed = 0;
  double min_ess = 0.0;
  int min_ess_step = 0;
  std::vector<StepSummary> steps;
  ParticleCloud final_cloud;
  std::vector<double> final_weights;
  PfHistory history;  // empty unless PfOptions::store_history
};

/// Bootstrap filter: propagate, weight by the observation density, resample.
/// The log-likelihood is sum_n [log sum_j w~_n^j - log m] (previous weights
/// folded in when the ESS test skips a resampling step). Throws
/// ParticleCollapse naming the step when every weight is zero, and DataError
/// on non-finite observations.
PfResult pf_run(const NonlinearModel& model, std::span<const double> y, const PfOptions& options);

/// log( (1/m) sum_j exp(log_weights[j]) ) computed stably.
double log_mean_exp(std::span<const double> log_weights);

/// Draws m ancestor indices from normalized weights.
std::vector<std::uint32_t> resample(std::span<const double> weights, Resampling scheme,
                                    Rng& rng);

/// Type-7 (linear interpolation) quantile of unweighted values.
double quantile(std::vector<double>& values, double prob);

struct SmoothedTrack {
  std::vector<double> mean;
  std::vector<double> median;
  /// Distinct lag-L ancestors at each step divided by m.
  std::vector<double> ancestor_diversity;
  double min_diversity = 1.0;
};

/// Fixed-lag smoothing by tracing resampling ancestry back `lag` steps from
/// step min(n + lag, N). lag = 0 reproduces the filtered summaries.
SmoothedTrack fixed_lag_smooth(const PfResult& run, int lag);

/// Draws K state trajectories by tracing ancestry from the final cloud.
std::vector<std::vector<double>> sample_trajectories(const PfResult& run, std::size_t count,
                                                     std::uint64_t seed);

/// Linear-Gaussian model as a particle-filter model (Kalman oracle tests).
class LinearGaussianModel : public NonlinearModel {
 public:
  explicit LinearGaussianModel(LinearSSM model);
  std::size_t state_dim() const override;
  void sample_initial(std::span<double> state, Rng& rng) const override;
  void sample_transition(std::span<double> state, int step, Rng& rng) const override;
  double log_observation(std::span<const double> state, double y, int step) const override;

 private:
  LinearSSM model_;
  Eigen::MatrixXd init_factor_;
  Eigen::VectorXd noise_sd_;
};

/// Per-step CSV rows and the JSON summary of a run.
std::vector<std::string> pf_csv_header();
std::vector<double> pf_csv_row(int step, const StepSummary& s);
nlohmann::json pf_summary_json(const PfResult& run);

}  // namespace gpssm
