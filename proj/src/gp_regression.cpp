#include "gpssm/gp_regression.hpp"

#include <cmath>

#include "gpssm/error.hpp"
#include "gpssm/parallel.hpp"

namespace gpssm {

namespace {

constexpr int kMaxJitterDoublings = 8;
constexpr double kNegativeVarianceTolerance = 1e-8;

}  // namespace

GpModel GpModel::fit(InputMatrix X, Eigen::VectorXd y, Kernel kernel, double noise_variance) {
  if (X.rows() < 1) throw InvalidArgument("GpModel::fit: need at least one training point");
  if (X.cols() < 1) throw InvalidArgument("GpModel::fit: inputs have zero dimension");
  if (y.size() != X.rows())
    throw InvalidArgument("GpModel::fit: " + std::to_string(X.rows()) + " inputs but " +
                          std::to_string(y.size()) + " targets");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw InvalidArgument("GpModel::fit: noise variance must be >= 0");
  if (!X.allFinite() || !y.allFinite())
    throw InvalidArgument("GpModel::fit: non-finite training data");

  GpModel gp(std::move(X), std::move(y), std::move(kernel), noise_variance);
  Eigen::MatrixXd Ky = gram(gp.kernel_, gp.X_);
  Ky.diagonal().array() += noise_variance;

  const double mean_diag = Ky.diagonal().mean();
  const double base_jitter = 1e-10 * (mean_diag > 0.0 ? mean_diag : 1.0);

  double jitter = 0.0;
  for (int attempt = -1; attempt <= kMaxJitterDoublings; ++attempt) {
    jitter = attempt < 0 ? 0.0 : base_jitter * std::ldexp(1.0, attempt);
    Eigen::MatrixXd A = Ky;
    A.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd L = llt.matrixL();
    if (!L.allFinite()) continue;
    gp.alpha_ = llt.solve(gp.y_);
    gp.L_ = L;
    gp.jitter_ = jitter;
    return gp;
  }
  throw NumericalError("GpModel::fit: Cholesky failed for kernel '" + gp.kernel_.to_string() +
                       "' even with jitter " + std::to_string(jitter) +
                       "; kernel or hyperparameters give an indefinite Gram matrix");
}

GpPrediction GpModel::predict_unchecked(std::span<const double> xs,
                                        std::vector<double>& work) const {
  const Eigen::Index n = X_.rows();
  work.resize(static_cast<std::size_t>(n));
  double mean = 0.0;
  double quad = 0.0;
  // Forward substitution L v = k*, accumulating k*' alpha and |v|^2.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ki = kernel_(point(X_, i), xs);
    mean += ki * alpha_(i);
    const double* Li = L_.data() + i * n;
    // Four partial sums break the dependency chain of the dot product.
    const double* w = work.data();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    Eigen::Index j = 0;
    for (; j + 4 <= i; j += 4) {
      s0 += Li[j] * w[j];
      s1 += Li[j + 1] * w[j + 1];
      s2 += Li[j + 2] * w[j + 2];
      s3 += Li[j + 3] * w[j + 3];
    }
    for (; j < i; ++j) s0 += Li[j] * w[j];
    const double v = (ki - ((s0 + s1) + (s2 + s3))) / Li[i];
    work[static_cast<std::size_t>(i)] = v;
    quad += v * v;
  }
  const double kss = kernel_(xs, xs);
  double var = kss - quad;
  if (var < 0.0) {
    if (var < -kNegativeVarianceTolerance * std::max(1.0, std::abs(kss)))
      throw NumericalError("GpModel::predict: negative predictive variance " +
                           std::to_string(var) + " (indefinite kernel?)");
    var = 0.0;
  }
  return {mean, var};
}

GpPrediction GpModel::predict(std::span<const double> xs) const {
  if (static_cast<Eigen::Index>(xs.size()) != X_.cols())
    throw InvalidArgument("GpModel::predict: query dimension " + std::to_string(xs.size()) +
                          " differs from training dimension " + std::to_string(X_.cols()));
  std::vector<double> work;
  return predict_unchecked(xs, work);
}

void GpModel::predict_batch(std::span<const double> points, std::span<double> mean,
                            std::span<double> variance) const {
  const std::size_t d = static_cast<std::size_t>(X_.cols());
  if (points.size() % d != 0)
    throw InvalidArgument("GpModel::predict_batch: packed points not a multiple of dimension");
  const std::size_t count = points.size() / d;
  if (mean.size() != count || variance.size() != count)
    throw InvalidArgument("GpModel::predict_batch: output size mismatch");
  parallel_for(count, [&](std::size_t begin, std::size_t end) {
    std::vector<double> work;
    for (std::size_t i = begin; i < end; ++i) {
      const GpPrediction p = predict_unchecked(points.subspan(i * d, d), work);
      mean[i] = p.mean;
      variance[i] = p.variance;
    }
  });
}

std::vector<GpPrediction> GpModel::predict_batch(const InputMatrix& Xs) const {
  if (Xs.rows() == 0) return {};
  if (Xs.cols() != X_.cols())
    throw InvalidArgument("GpModel::predict_batch: query dimension mismatch");
  std::vector<double> mean(static_cast<std::size_t>(Xs.rows()));
  std::vector<double> var(mean.size());
  predict_batch(std::span<const double>(Xs.data(), static_cast<std::size_t>(Xs.size())), mean,
                var);
  std::vector<GpPrediction> out(mean.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {mean[i], var[i]};
  return out;
}

nlohmann::json GpModel::to_json() const {
  nlohmann::json inputs = nlohmann::json::array();
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    auto p = point(X_, i);
    inputs.push_back(std::vector<double>(p.begin(), p.end()));
  }
  return {
      {"kernel", kernel_.to_string()},
      {"noise_variance", noise_},
      {"jitter", jitter_},
      {"input_dim", X_.cols()},
      {"inputs", inputs},
      {"targets", std::vector<double>(y_.data(), y_.data() + y_.size())},
  };
}

GpModel GpModel::from_json(const nlohmann::json& doc) {
  try {
    const auto& inputs = doc.at("inputs");
    const auto targets = doc.at("targets").get<std::vector<double>>();
    const auto d = doc.at("input_dim").get<Eigen::Index>();
    InputMatrix X(static_cast<Eigen::Index>(inputs.size()), d);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      auto row = inputs[i].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != d)
        throw InvalidArgument("GpModel::from_json: ragged inputs");
      for (Eigen::Index j = 0; j < d; ++j) X(static_cast<Eigen::Index>(i), j) = row[j];
    }
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(),
                                                          static_cast<Eigen::Index>(targets.size()));
    return fit(std::move(X), std::move(y), Kernel::parse(doc.at("kernel").get<std::string>()),
               doc.at("noise_variance").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("GpModel::from_json: ") + e.what());
  }
}

}  // namespace gpssm
