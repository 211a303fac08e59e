#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace gpssm {

/// x_n = F x_{n-1} + G v_n,  v_n ~ N(0, Q)
/// y_n = H x_n + w_n,        w_n ~ N(0, sigma2)
/// with prior x_0 ~ N(x0, V0).
struct LinearSSM {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::RowVectorXd H;
  Eigen::VectorXd Q;  // diagonal of the system-noise covariance
  double sigma2 = 1.0;
  Eigen::VectorXd x0;
  Eigen::MatrixXd V0;

  Eigen::Index state_dim() const { return F.rows(); }
  Eigen::Index noise_dim() const { return G.cols(); }

  /// Throws InvalidArgument on inconsistent dimensions, negative Q,
  /// non-positive sigma2 or asymmetric V0.
  void validate() const;

  /// Same model with sigma2, Q and V0 multiplied by `factor`.
  LinearSSM scaled(double factor) const;
};

/// Default diffuse prior for nonstationary components: x0 = 0, V0 = 1e7 I.
inline constexpr double kDiffuseVariance = 1e7;

struct FilterOutput {
  std::vector<Eigen::VectorXd> predicted_mean;  // x_{n|n-1}
  std::vector<Eigen::MatrixXd> predicted_cov;   // V_{n|n-1}
  std::vector<Eigen::VectorXd> filtered_mean;   // x_{n|n}
  std::vector<Eigen::MatrixXd> filtered_cov;    // V_{n|n}
  std::vector<double> innovation;               // eps_n (NaN at missing steps)
  std::vector<double> innovation_var;           // r_n
  std::vector<std::uint8_t> missing;
  double loglik = 0.0;
  int observed = 0;

  std::size_t size() const { return filtered_mean.size(); }
};

struct SmootherOutput {
  std::vector<Eigen::VectorXd> mean;  // x_{n|N}
  std::vector<Eigen::MatrixXd> cov;   // V_{n|N}
  /// Set when some V_{n+1|n} was singular and a pseudo-inverse was used.
  bool used_pseudo_inverse = false;
};

/// Kalman filter with Joseph-form covariance update. Steps flagged in
/// `missing` skip the update and add nothing to the log-likelihood
///   -1/2 sum_n { log 2 pi + log r_n + eps_n^2 / r_n }.
FilterOutput kalman_filter(const LinearSSM& model, std::span<const double> y,
                           std::span<const std::uint8_t> missing = {});

/// Rauch-Tung-Striebel fixed-interval smoother over a kalman_filter run.
SmootherOutput kalman_smoother(const LinearSSM& model, const FilterOutput& filtered);

struct ConcentratedLoglik {
  double loglik = 0.0;
  double sigma2_hat = 0.0;
  FilterOutput filter;  // run of the normalized model (sigma2 = 1)
};

/// Profiles the observation variance out of the likelihood. The model is
/// normalized so sigma2 = 1 (Q and V0 become ratios to sigma2), and
///   sigma2_hat = (1/N) sum eps_n^2 / r~_n,
///   loglik     = -1/2 { N log 2 pi + sum log(sigma2_hat r~_n) + N }.
/// sigma2_hat is floored at 1e-12.
ConcentratedLoglik concentrated_loglik(const LinearSSM& model, std::span<const double> y,
                                       std::span<const std::uint8_t> missing = {});

/// -2 loglik + 2 k.
double aic(double loglik, int num_params);

}  // namespace gpssm
