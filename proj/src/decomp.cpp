#include "gpssm/decomp.hpp"

#include <algorithm>
#include <cmath>

#include "gpssm/error.hpp"
#include "gpssm/ml_estimation.hpp"

namespace gpssm {

void DecompSpec::validate() const {
  if (trend_order != 1 && trend_order != 2)
    throw InvalidArgument("DecompSpec: trend order must be 1 or 2");
  if (seasonal_order != 0 && seasonal_order != 1)
    throw InvalidArgument("DecompSpec: seasonal order must be 0 or 1");
  if (seasonal_order >= 1 && period < 2)
    throw InvalidArgument("DecompSpec: seasonal model needs period >= 2");
  if (!(tau1 >= 0.0) || !(tau2 >= 0.0))
    throw InvalidArgument("DecompSpec: variances must be >= 0");
  if (!(sigma2 > 0.0)) throw InvalidArgument("DecompSpec: sigma2 must be positive");
  if (!(initial_variance >= 0.0)) throw InvalidArgument("DecompSpec: bad initial variance");
}

int DecompSpec::state_dim() const { return trend_order + (seasonal() ? period - 1 : 0); }

std::string DecompSpec::label() const {
  std::string s = "trend m1=" + std::to_string(trend_order);
  if (seasonal()) s += ", seasonal p=" + std::to_string(period);
  return s;
}

LinearSSM build_trend(int order, double tau2, double sigma2, double initial_variance) {
  LinearSSM m;
  if (order == 1) {
    m.F = Eigen::MatrixXd::Constant(1, 1, 1.0);
    m.G = Eigen::MatrixXd::Constant(1, 1, 1.0);
    m.H = Eigen::RowVectorXd::Constant(1, 1.0);
  } else if (order == 2) {
    m.F.resize(2, 2);
    m.F << 2.0, -1.0, 1.0, 0.0;
    m.G.resize(2, 1);
    m.G << 1.0, 0.0;
    m.H.resize(2);
    m.H << 1.0, 0.0;
  } else {
    throw InvalidArgument("build_trend: order must be 1 or 2, got " + std::to_string(order));
  }
  m.Q = Eigen::VectorXd::Constant(1, tau2);
  m.sigma2 = sigma2;
  m.x0 = Eigen::VectorXd::Zero(order);
  m.V0 = initial_variance * Eigen::MatrixXd::Identity(order, order);
  m.validate();
  return m;
}

LinearSSM build_trend_level_slope(double tau2, double sigma2, double initial_variance) {
  LinearSSM m;
  m.F.resize(2, 2);
  m.F << 1.0, 1.0, 0.0, 1.0;
  m.G.resize(2, 1);
  m.G << 1.0, 1.0;
  m.H.resize(2);
  m.H << 1.0, 0.0;
  m.Q = Eigen::VectorXd::Constant(1, tau2);
  m.sigma2 = sigma2;
  m.x0 = Eigen::VectorXd::Zero(2);
  m.V0 = initial_variance * Eigen::MatrixXd::Identity(2, 2);
  m.validate();
  return m;
}

LinearSSM build_seasonal(const DecompSpec& spec) {
  spec.validate();
  LinearSSM trend = build_trend(spec.trend_order, spec.tau1, spec.sigma2, spec.initial_variance);
  if (!spec.seasonal()) return trend;

  const int mt = spec.trend_order;
  const int ms = spec.period - 1;
  const int m = mt + ms;
  LinearSSM out;
  out.F = Eigen::MatrixXd::Zero(m, m);
  out.F.topLeftCorner(mt, mt) = trend.F;
  out.F.block(mt, mt, 1, ms).setConstant(-1.0);
  for (int i = 1; i < ms; ++i) out.F(mt + i, mt + i - 1) = 1.0;

  out.G = Eigen::MatrixXd::Zero(m, 2);
  out.G(0, 0) = 1.0;
  out.G(mt, 1) = 1.0;

  out.H = Eigen::RowVectorXd::Zero(m);
  out.H(0) = 1.0;
  out.H(mt) = 1.0;

  out.Q.resize(2);
  out.Q << spec.tau1, spec.tau2;
  out.sigma2 = spec.sigma2;
  out.x0 = Eigen::VectorXd::Zero(m);
  out.V0 = spec.initial_variance * Eigen::MatrixXd::Identity(m, m);
  out.validate();
  return out;
}

Decomposition decompose(std::span<const double> y, const DecompSpec& spec,
                        std::span<const std::uint8_t> missing) {
  spec.validate();
  const std::size_t N = y.size();
  if (N < static_cast<std::size_t>(spec.state_dim()) || N == 0)
    throw InvalidArgument("decompose: series of length " + std::to_string(N) +
                          " is shorter than the state dimension " +
                          std::to_string(spec.state_dim()));
  if (spec.seasonal() && N <= static_cast<std::size_t>(2 * spec.period))
    throw InvalidArgument("decompose: need more than two periods of data");

  const LinearSSM model = build_seasonal(spec);
  ConcentratedLoglik conc = concentrated_loglik(model, y, missing);
  // Smoothed means do not depend on the overall scale; covariances do, so
  // rescale them by the profiled observation variance.
  const LinearSSM normalized = model.scaled(1.0 / model.sigma2);
  SmootherOutput smooth = kalman_smoother(normalized, conc.filter);

  Decomposition out;
  out.spec = spec;
  out.loglik = conc.loglik;
  out.sigma2_hat = conc.sigma2_hat;
  out.aic = aic(conc.loglik, spec.num_params());
  out.trend.resize(N);
  out.trend_sd.resize(N);
  out.seasonal.assign(N, 0.0);
  out.seasonal_sd.assign(N, 0.0);
  out.residual.resize(N);
  const Eigen::Index s = spec.trend_order;
  for (std::size_t n = 0; n < N; ++n) {
    out.trend[n] = smooth.mean[n](0);
    out.trend_sd[n] = std::sqrt(std::max(0.0, smooth.cov[n](0, 0) * conc.sigma2_hat));
    if (spec.seasonal()) {
      out.seasonal[n] = smooth.mean[n](s);
      out.seasonal_sd[n] = std::sqrt(std::max(0.0, smooth.cov[n](s, s) * conc.sigma2_hat));
    }
    const bool miss = !missing.empty() && missing[n];
    out.residual[n] = miss ? std::nan("") : y[n] - out.trend[n] - out.seasonal[n];
  }
  out.spec.sigma2 = conc.sigma2_hat;
  out.spec.tau1 = spec.tau1 / spec.sigma2 * conc.sigma2_hat;
  out.spec.tau2 = spec.tau2 / spec.sigma2 * conc.sigma2_hat;
  return out;
}

std::vector<DecompCandidate> fit_decomp(std::span<const double> y,
                                        std::span<const int> trend_orders,
                                        std::span<const bool> seasonal_options, int period,
                                        std::span<const std::uint8_t> missing,
                                        const DecompFitOptions& options) {
  if (trend_orders.empty() || seasonal_options.empty())
    throw InvalidArgument("fit_decomp: empty candidate grid");

  std::vector<DecompCandidate> out;
  for (int order : trend_orders) {
    for (bool seasonal : seasonal_options) {
      DecompCandidate cand;
      cand.spec.trend_order = order;
      cand.spec.seasonal_order = seasonal ? 1 : 0;
      cand.spec.period = seasonal ? period : 0;
      cand.spec.sigma2 = 1.0;
      cand.spec.tau1 = 1e-2;
      cand.spec.tau2 = seasonal ? 1e-2 : 0.0;
      try {
        cand.spec.validate();
        OptProblem problem;
        problem.names = {"tau1/sigma2"};
        problem.initial = {cand.spec.tau1};
        if (seasonal) {
          problem.names.push_back("tau2/sigma2");
          problem.initial.push_back(cand.spec.tau2);
        }
        problem.transforms.assign(problem.initial.size(), ParamTransform::Log);
        problem.max_evaluations = options.max_evaluations;
        problem.tolerance = options.tolerance;
        problem.steps.assign(problem.initial.size(), 2.0);
        const DecompSpec base = cand.spec;
        problem.objective = [&, base](std::span<const double> p) {
          DecompSpec s = base;
          s.tau1 = p[0];
          if (s.seasonal()) s.tau2 = p[1];
          return concentrated_loglik(build_seasonal(s), y, missing).loglik;
        };
        const OptResult best = nelder_mead_max(problem);
        DecompSpec fitted = base;
        fitted.tau1 = best.params[0];
        if (seasonal) fitted.tau2 = best.params[1];
        const Decomposition d = decompose(y, fitted, missing);
        cand.spec = d.spec;
        cand.loglik = d.loglik;
        cand.aic = d.aic;
        cand.evaluations = best.evaluations;
        cand.ok = true;
      } catch (const Error& e) {
        cand.error = e.what();
      }
      out.push_back(std::move(cand));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.ok != b.ok) return a.ok;
    return a.aic < b.aic;
  });
  return out;
}

}  // namespace gpssm
