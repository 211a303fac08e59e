#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gpssm/gp_regression.hpp"
#include "gpssm/ml_estimation.hpp"
#include "gpssm/particle_filter.hpp"
#include "gpssm/training_data.hpp"

namespace gpssm {

/// Known observation function g in y_n = g(x_n) + w_n.
class ObservationFunction {
 public:
  enum class Kind { Identity, Quad10, Tabulated };

  static ObservationFunction identity() { return ObservationFunction(Kind::Identity); }
  static ObservationFunction quad10() { return ObservationFunction(Kind::Quad10); }
  /// Piecewise-linear through (xs[i], gs[i]), xs increasing; constant beyond
  /// the ends.
  static ObservationFunction tabulated(std::vector<double> xs, std::vector<double> gs);
  /// "identity" or "quad10".
  static ObservationFunction parse(std::string_view name);

  double operator()(double x) const;
  Kind kind() const { return kind_; }
  std::string name() const;

 private:
  explicit ObservationFunction(Kind k) : kind_(k) {}
  Kind kind_;
  std::vector<double> xs_, gs_;
};

/// Known additive input u_n of the state transition.
class ExogenousInput {
 public:
  ExogenousInput() = default;
  /// u_n = amp * cos(freq * n).
  static ExogenousInput cosine(double amp, double freq);
  /// u_n = values[n - 1] for n = 1..size.
  static ExogenousInput table(std::vector<double> values);
  /// "none" or "cos:amp=A,freq=W".
  static ExogenousInput parse(std::string_view spec);

  bool present() const { return kind_ != Kind::None; }
  double at(int n) const;
  /// u_first, ..., u_{first + count - 1}.
  std::vector<double> series(int first, int count) const;
  /// Throws when a table input does not cover steps 1..N.
  void check_length(std::size_t N) const;
  std::string to_string() const;

 private:
  enum class Kind { None, Cosine, Table };
  Kind kind_ = Kind::None;
  double amp_ = 0.0, freq_ = 0.0;
  std::vector<double> values_;
};

/// x_n ~ N(mu_f(x_{n-1}) + u_n, sigma_f^2(x_{n-1}) + tau2),  y_n ~ N(g(x_n), sigma2).
/// The state is the lag vector (x_n, ..., x_{n-d+1}), d = GP input dimension.
struct GpSsm {
  std::shared_ptr<const GpModel> gp;
  double tau2 = 1.0;
  double sigma2 = 1.0;
  ObservationFunction obs = ObservationFunction::identity();
  ExogenousInput input;
  double init_mean = 0.0;
  double init_var = 1.0;  // every lag of x_0 ~ N(init_mean, init_var)

  int lag() const;
  void validate() const;
};

/// One transition draw in place; for d = 2 the lag vector shifts.
void gp_transition_sample(const GpSsm& model, std::span<double> state, int n, Rng& rng);

/// Particle-filter adapter; propagation predicts the whole cloud in one batch.
class GpSsmModel : public NonlinearModel {
 public:
  explicit GpSsmModel(GpSsm model);
  std::size_t state_dim() const override;
  void sample_initial(std::span<double> state, Rng& rng) const override;
  void sample_transition(std::span<double> state, int step, Rng& rng) const override;
  double log_observation(std::span<const double> state, double y, int step) const override;
  void propagate(ParticleCloud& cloud, int step, const RandomStreams& streams) const override;
  const GpSsm& model() const { return model_; }

 private:
  GpSsm model_;
  double log_norm_;
};

PfResult gpssm_filter(const GpSsm& model, std::span<const double> y, const PfOptions& options);

struct LoglikValue {
  double loglik = 0.0;  // -inf when collapsed
  bool collapsed = false;
  int collapse_step = 0;
};

/// Objective form of gpssm_filter: no summaries, collapse reported as -inf.
LoglikValue gpssm_loglik(const GpSsm& model, std::span<const double> y, std::size_t particles,
                         std::uint64_t seed);

/// Trend GP-SSM on y - s(n) with a fixed seasonal pattern s(n) given by GP
/// regression over the time index. With period p > 0 the index enters through
/// (cos 2 pi n/p, sin 2 pi n/p), so an rbf kernel there is the usual periodic
/// kernel exp(t1 cos(2 pi (n - n')/p)) up to scale. period = 0 feeds n as is.
struct AdditiveGpSsm {
  GpSsm trend;
  std::shared_ptr<const GpModel> seasonal;
  int period = 0;
};

/// Seasonal GP input for step n.
std::vector<double> seasonal_features(int n, int period);

/// GP regression of a seasonal track s_1..s_N on seasonal_features(n, period).
GpModel fit_seasonal_gp(std::span<const double> seasonal, int period, const Kernel& kernel,
                        double noise_variance);

struct AdditiveResult {
  std::vector<double> trend;        // posterior mean of T_n
  std::vector<double> trend_sd;
  std::vector<double> trend_diff;   // T_n - T_{n-1} (0 at n = 1)
  std::vector<double> seasonal;     // s(n)
  std::vector<double> residual;     // y - T - s
  double loglik = 0.0;
  PfResult run;
};

AdditiveResult additive_gpssm_filter(const AdditiveGpSsm& model, std::span<const double> y,
                                     const PfOptions& options);

/// Maximum likelihood of tau2, sigma2, the kernel hyperparameters and the GP
/// noise variance with a fixed filter seed.
struct GpSsmFitSpec {
  TransitionPairs pairs;
  Kernel kernel = Kernel::rbf(1.0);  // starting hyperparameters
  double gp_noise = 0.1;
  double tau2 = 1.0;
  // Further tau2 starting values. Each start runs its own search; the best objective wins.
  std::vector<double> extra_tau2_starts;
  double sigma2 = 1.0;
  ObservationFunction obs = ObservationFunction::identity();
  ExogenousInput input;
  double init_mean = 0.0;
  double init_var = 1.0;
  std::size_t particles = 1000;
  std::uint64_t seed = 0;
  int max_evaluations = 400;
  double tolerance = 1e-3;
  double x_tolerance = 1e-2;
};

struct GpSsmFit {
  GpSsm model;
  Kernel kernel = Kernel::linear();
  double gp_noise = 0.0;
  OptProblem problem;
  OptResult result;
};

/// Builds the model for a parameter vector laid out as
/// (tau2, sigma2, kernel params..., gp_noise).
GpSsm gpssm_from_params(const GpSsmFitSpec& spec, std::span<const double> params);
OptProblem gpssm_problem(const GpSsmFitSpec& spec, std::span<const double> y);
GpSsmFit fit_gpssm(const GpSsmFitSpec& spec, std::span<const double> y);

}  // namespace gpssm
