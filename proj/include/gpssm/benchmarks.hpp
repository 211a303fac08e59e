#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gpssm/particle_filter.hpp"

namespace gpssm {

/// x_n = f(x_{n-1}) + v_n, y_n = x_n + w_n with the sign-dependent rational
///   f(x) = 2 b1 x / (x^2 + c1^2)  (x < 0),  2 b2 x / (x^2 + c2^2)  (x >= 0).
struct AsymmetricRational {
  double b1 = 1.0;
  double c1_sq = 5.0;
  double b2 = 10.0;
  double c2_sq = 20.0;
  double tau2 = 1.0;
  double sigma2 = 1.0;
  void validate() const;
};

/// x_n = x/2 + 25x/(x^2+1) + 8 cos(1.2 n) + v_n,  y_n = x_n^2/10 + w_n.
struct KitagawaSystem {
  double tau2 = 1.0;
  double sigma2 = 10.0;
  void validate() const;
};

/// AR(1) with observation noise. The asymmetric form uses a1 below zero and
/// a2 at or above zero; the symmetric form has a1 == a2.
struct ARBaseline {
  bool asymmetric = false;
  double a1 = 0.9;
  double a2 = 0.9;
  double tau2 = 1.0;
  double sigma2 = 1.0;
  double coefficient(double x) const { return asymmetric && x >= 0.0 ? a2 : a1; }
  void validate() const;
};

using BenchmarkSystem = std::variant<AsymmetricRational, KitagawaSystem, ARBaseline>;

double eval_f24(const AsymmetricRational& p, double x);
/// Transition mean for the state at step n given x_{n-1} = x.
double eval_f25(double x, int n);
double eval_g25(double x);

/// Transition mean, observation mean and noise variances of any system.
double transition_mean(const BenchmarkSystem& s, double x, int n);
double observation_mean(const BenchmarkSystem& s, double x);
double process_variance(const BenchmarkSystem& s);
double observation_variance(const BenchmarkSystem& s);
std::string system_name(const BenchmarkSystem& s);

struct Simulation {
  double x0 = 0.0;
  std::vector<double> x;  // x_1..x_N
  std::vector<double> y;  // y_1..y_N
};

/// Draws x_0 ~ N(0, 1) (unless given), then N transitions and observations,
/// all from one stream seeded by `seed`.
Simulation simulate(const BenchmarkSystem& system, int N, std::uint64_t seed,
                    std::optional<double> x0 = std::nullopt);

/// The system as a particle-filter model with prior x_0 ~ N(0, 1).
class SystemModel : public NonlinearModel {
 public:
  explicit SystemModel(BenchmarkSystem system);
  std::size_t state_dim() const override { return 1; }
  void sample_initial(std::span<double> state, Rng& rng) const override;
  void sample_transition(std::span<double> state, int step, Rng& rng) const override;
  double log_observation(std::span<const double> state, double y, int step) const override;
  const BenchmarkSystem& system() const { return system_; }

 private:
  BenchmarkSystem system_;
  double process_sd_;
  double log_norm_;  // -1/2 log(2 pi sigma2)
  double inv_sigma2_;
};

struct ArFitOptions {
  std::size_t particles = 10000;  // asymmetric likelihood
  std::uint64_t seed = 0;
  int max_evaluations = 400;
};

struct ArFit {
  ARBaseline model;
  double loglik = 0.0;
  double aic = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Maximum likelihood AR(1)-plus-noise fit. The symmetric likelihood is exact
/// (Kalman filter); the asymmetric one is a particle-filter estimate with a
/// fixed seed, started from the symmetric fit.
ArFit ar_baseline_fit(std::span<const double> y, bool asymmetric, const ArFitOptions& options = {});

/// Kalman form of a symmetric AR baseline, prior x_0 ~ N(0, 1).
LinearSSM ar_linear_model(const ARBaseline& model);

}  // namespace gpssm
