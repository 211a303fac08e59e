#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "gpssm/kernels.hpp"
#include "json.hpp"

namespace gpssm {

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Zero-mean GP regression model conditioned on (X, y).
///
/// Holds the lower Cholesky factor L of K_y = K + noise * I (+ jitter) and
/// alpha = K_y^{-1} y. Immutable after fit(), so concurrent predictions are
/// safe.
class GpModel {
 public:
  /// Factorizes K + noise_variance * I. When the factorization fails a jitter
  /// of 1e-10 * mean(diag K) is added and doubled up to eight times; the
  /// amount used is recorded. Throws NumericalError if every attempt fails.
  static GpModel fit(InputMatrix X, Eigen::VectorXd y, Kernel kernel, double noise_variance);

  /// Posterior of the latent function at xs: mean k*' alpha and variance
  /// k** - k*' K_y^{-1} k*, clamped at zero. Throws NumericalError when the
  /// variance is negative beyond round-off (indefinite kernel).
  GpPrediction predict(std::span<const double> xs) const;

  /// `points` holds `count` query points of dimension input_dim(), packed.
  /// Each output equals predict() on the same point bit for bit.
  void predict_batch(std::span<const double> points, std::span<double> mean,
                     std::span<double> variance) const;
  std::vector<GpPrediction> predict_batch(const InputMatrix& Xs) const;

  const InputMatrix& inputs() const { return X_; }
  const Eigen::VectorXd& targets() const { return y_; }
  const Kernel& kernel() const { return kernel_; }
  double noise_variance() const { return noise_; }
  double jitter() const { return jitter_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  Eigen::MatrixXd cholesky() const { return L_; }
  Eigen::Index size() const { return X_.rows(); }
  Eigen::Index input_dim() const { return X_.cols(); }

  nlohmann::json to_json() const;
  /// Refits from the serialized inputs, targets, kernel and noise.
  static GpModel from_json(const nlohmann::json& doc);

 private:
  GpModel(InputMatrix X, Eigen::VectorXd y, Kernel kernel, double noise)
      : X_(std::move(X)), y_(std::move(y)), kernel_(std::move(kernel)), noise_(noise) {}

  GpPrediction predict_unchecked(std::span<const double> xs, std::vector<double>& work) const;

  InputMatrix X_;
  Eigen::VectorXd y_;
  Kernel kernel_;
  double noise_;
  double jitter_ = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> L_;
  Eigen::VectorXd alpha_;
};

}  // namespace gpssm
