#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gpssm/linear_ssm.hpp"

namespace gpssm {

/// Trend + seasonal decomposition y_n = T_n + S_n + w_n with
///   (1 - B)^{m1} T_n = v_n^(T),  (1 + B + ... + B^{p-1})^{m2} S_n = v_n^(S).
struct DecompSpec {
  int trend_order = 2;     // m1 in {1, 2}
  int seasonal_order = 0;  // m2 in {0, 1}
  int period = 0;          // p >= 2 when seasonal_order = 1
  double tau1 = 1.0;       // trend noise variance
  double tau2 = 0.0;       // seasonal noise variance
  double sigma2 = 1.0;     // observation noise variance
  double initial_variance = kDiffuseVariance;

  void validate() const;
  int state_dim() const;
  bool seasonal() const { return seasonal_order > 0; }
  /// Variances counted by AIC: sigma2, tau1 and (if seasonal) tau2.
  int num_params() const { return seasonal() ? 3 : 2; }
  std::string label() const;
};

/// Companion-form trend model. Order 1 is the random walk; order 2 has state
/// (T_n, T_{n-1}) with F = [[2, -1], [1, 0]], G = [1, 0]', H = [1, 0].
LinearSSM build_trend(int order, double tau2, double sigma2,
                      double initial_variance = kDiffuseVariance);

/// Second-order trend in (level, slope) form: F = [[1, 1], [0, 1]],
/// G = [1, 1]', H = [1, 0]. Same process as build_trend(2, ...).
LinearSSM build_trend_level_slope(double tau2, double sigma2,
                                  double initial_variance = kDiffuseVariance);

/// Block-diagonal trend (+ seasonal) model. The seasonal block has first row
/// all -1 (width p-1) with an identity subdiagonal; H picks the first state
/// of each block.
LinearSSM build_seasonal(const DecompSpec& spec);

struct Decomposition {
  DecompSpec spec;
  std::vector<double> trend;        // T_{n|N}
  std::vector<double> trend_sd;
  std::vector<double> seasonal;     // S_{n|N}, zero without a seasonal block
  std::vector<double> seasonal_sd;
  std::vector<double> residual;     // y - T - S (NaN at missing steps)
  double loglik = 0.0;              // concentrated log-likelihood
  double sigma2_hat = 0.0;
  double aic = 0.0;
};

/// Kalman filter + fixed-interval smoother on build_seasonal(spec). Only the
/// ratios tau/sigma2 matter; sigma2 is concentrated out.
Decomposition decompose(std::span<const double> y, const DecompSpec& spec,
                        std::span<const std::uint8_t> missing = {});

struct DecompCandidate {
  DecompSpec spec;  // with ML variances when ok
  double loglik = 0.0;
  double aic = 0.0;
  int evaluations = 0;
  bool ok = false;
  std::string error;
};

struct DecompFitOptions {
  int max_evaluations = 400;
  double tolerance = 1e-8;
};

/// Fits every structure in trend_orders x seasonal_options by maximizing the
/// concentrated likelihood over log(tau1/sigma2), log(tau2/sigma2).
/// Candidates come back sorted by AIC (failures last, with their error).
std::vector<DecompCandidate> fit_decomp(std::span<const double> y,
                                        std::span<const int> trend_orders,
                                        std::span<const bool> seasonal_options, int period,
                                        std::span<const std::uint8_t> missing = {},
                                        const DecompFitOptions& options = {});

}  // namespace gpssm
