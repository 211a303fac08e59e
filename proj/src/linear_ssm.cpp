#include "gpssm/linear_ssm.hpp"

#include <cmath>
#include <string>

#include "gpssm/error.hpp"

namespace gpssm {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
constexpr double kSigma2Floor = 1e-12;

void symmetrize(Eigen::MatrixXd& V) { V = 0.5 * (V + V.transpose()).eval(); }

std::string dims(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void LinearSSM::validate() const {
  const Eigen::Index m = F.rows();
  if (m == 0 || F.cols() != m) throw InvalidArgument("LinearSSM: F must be square, got " + dims(F));
  if (G.rows() != m) throw InvalidArgument("LinearSSM: G is " + dims(G) + ", F is " + dims(F));
  if (H.size() != m) throw InvalidArgument("LinearSSM: H has wrong length");
  if (Q.size() != G.cols()) throw InvalidArgument("LinearSSM: Q must match the columns of G");
  if ((Q.array() < 0.0).any() || !Q.allFinite())
    throw InvalidArgument("LinearSSM: Q entries must be finite and >= 0");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw InvalidArgument("LinearSSM: observation variance must be positive");
  if (x0.size() != m) throw InvalidArgument("LinearSSM: x0 has wrong length");
  if (V0.rows() != m || V0.cols() != m) throw InvalidArgument("LinearSSM: V0 is " + dims(V0));
  if (!V0.allFinite() || (V0 - V0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + V0.cwiseAbs().maxCoeff()))
    throw InvalidArgument("LinearSSM: V0 must be symmetric");
}

LinearSSM LinearSSM::scaled(double factor) const {
  LinearSSM out = *this;
  out.sigma2 *= factor;
  out.Q *= factor;
  out.V0 *= factor;
  return out;
}

FilterOutput kalman_filter(const LinearSSM& model, std::span<const double> y,
                           std::span<const std::uint8_t> missing) {
  model.validate();
  const std::size_t N = y.size();
  if (N == 0) throw InvalidArgument("kalman_filter: empty series");
  if (!missing.empty() && missing.size() != N)
    throw InvalidArgument("kalman_filter: missing mask length differs from series length");

  const Eigen::Index m = model.state_dim();
  const Eigen::MatrixXd GQG = model.G * model.Q.asDiagonal() * model.G.transpose();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  const Eigen::VectorXd Ht = model.H.transpose();

  FilterOutput out;
  out.predicted_mean.reserve(N);
  out.predicted_cov.reserve(N);
  out.filtered_mean.reserve(N);
  out.filtered_cov.reserve(N);
  out.innovation.reserve(N);
  out.innovation_var.reserve(N);
  out.missing.assign(N, 0);

  Eigen::VectorXd x = model.x0;
  Eigen::MatrixXd V = model.V0;
  for (std::size_t n = 0; n < N; ++n) {
    Eigen::VectorXd xp = model.F * x;
    Eigen::MatrixXd Vp = model.F * V * model.F.transpose() + GQG;
    symmetrize(Vp);

    const double r = model.sigma2 + (model.H * Vp * Ht)(0, 0);
    const bool skip = !missing.empty() && missing[n] != 0;
    if (skip) {
      out.missing[n] = 1;
      out.innovation.push_back(std::nan(""));
      out.innovation_var.push_back(r);
      x = xp;
      V = Vp;
    } else {
      if (!std::isfinite(y[n]))
        throw DataError("kalman_filter: non-finite observation at step " + std::to_string(n + 1));
      if (!(r > 0.0) || !std::isfinite(r))
        throw NumericalError("kalman_filter: innovation variance " + std::to_string(r) +
                             " at step " + std::to_string(n + 1));
      const double eps = y[n] - model.H.dot(xp);
      const Eigen::VectorXd K = Vp * Ht / r;
      x = xp + K * eps;
      const Eigen::MatrixXd A = I - K * model.H;
      V = A * Vp * A.transpose() + model.sigma2 * K * K.transpose();
      symmetrize(V);
      out.innovation.push_back(eps);
      out.innovation_var.push_back(r);
      out.loglik += -0.5 * (kLog2Pi + std::log(r) + eps * eps / r);
      ++out.observed;
    }
    out.predicted_mean.push_back(std::move(xp));
    out.predicted_cov.push_back(std::move(Vp));
    out.filtered_mean.push_back(x);
    out.filtered_cov.push_back(V);
  }
  return out;
}

SmootherOutput kalman_smoother(const LinearSSM& model, const FilterOutput& filtered) {
  const std::size_t N = filtered.size();
  if (N == 0) throw InvalidArgument("kalman_smoother: empty filter output");
  if (filtered.filtered_mean.front().size() != model.state_dim())
    throw InvalidArgument("kalman_smoother: filter output does not match model");

  SmootherOutput out;
  out.mean.resize(N);
  out.cov.resize(N);
  out.mean[N - 1] = filtered.filtered_mean[N - 1];
  out.cov[N - 1] = filtered.filtered_cov[N - 1];

  for (std::size_t k = N - 1; k-- > 0;) {
    const Eigen::MatrixXd& Vf = filtered.filtered_cov[k];
    const Eigen::MatrixXd& Vp_next = filtered.predicted_cov[k + 1];
    // A = Vf F' Vp^{-1}, computed as (Vp^{-1} F Vf)' since both are symmetric.
    const Eigen::MatrixXd FVf = model.F * Vf;
    Eigen::MatrixXd A;
    Eigen::LLT<Eigen::MatrixXd> llt(Vp_next);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) {
      A = llt.solve(FVf).transpose();
    } else {
      out.used_pseudo_inverse = true;
      A = (Vp_next.completeOrthogonalDecomposition().pseudoInverse() * FVf).transpose();
    }
    out.mean[k] = filtered.filtered_mean[k] +
                  A * (out.mean[k + 1] - filtered.predicted_mean[k + 1]);
    Eigen::MatrixXd V = Vf + A * (out.cov[k + 1] - Vp_next) * A.transpose();
    symmetrize(V);
    out.cov[k] = std::move(V);
  }
  return out;
}

ConcentratedLoglik concentrated_loglik(const LinearSSM& model, std::span<const double> y,
                                       std::span<const std::uint8_t> missing) {
  model.validate();
  ConcentratedLoglik out;
  out.filter = kalman_filter(model.scaled(1.0 / model.sigma2), y, missing);
  const auto& f = out.filter;
  const int N = f.observed;
  if (N == 0) return out;

  double weighted = 0.0;
  double log_r = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    if (f.missing[n]) continue;
    weighted += f.innovation[n] * f.innovation[n] / f.innovation_var[n];
    log_r += std::log(f.innovation_var[n]);
  }
  out.sigma2_hat = std::max(weighted / N, kSigma2Floor);
  out.loglik = -0.5 * (N * kLog2Pi + log_r + N * std::log(out.sigma2_hat) +
                       weighted / out.sigma2_hat);
  return out;
}

double aic(double loglik, int num_params) {
  if (num_params < 0) throw InvalidArgument("aic: parameter count must be >= 0");
  return -2.0 * loglik + 2.0 * num_params;
}

}  // namespace gpssm
