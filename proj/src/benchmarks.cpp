#include "gpssm/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gpssm/error.hpp"
#include "gpssm/linear_ssm.hpp"
#include "gpssm/ml_estimation.hpp"

namespace gpssm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_variance(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw InvalidArgument(std::string(what) + " must be a finite non-negative variance");
}

void validate_system(const BenchmarkSystem& s) {
  std::visit([](const auto& p) { p.validate(); }, s);
}

}  // namespace

void AsymmetricRational::validate() const {
  if (!(c1_sq > 0.0) || !(c2_sq > 0.0)) throw InvalidArgument("f24: c1^2 and c2^2 must be > 0");
  if (!std::isfinite(b1) || !std::isfinite(b2)) throw InvalidArgument("f24: b1, b2 must be finite");
  check_variance(tau2, "tau2");
  check_variance(sigma2, "sigma2");
}

void KitagawaSystem::validate() const {
  check_variance(tau2, "tau2");
  check_variance(sigma2, "sigma2");
}

void ARBaseline::validate() const {
  if (!std::isfinite(a1) || !std::isfinite(a2)) throw InvalidArgument("AR: coefficients must be finite");
  check_variance(tau2, "tau2");
  check_variance(sigma2, "sigma2");
}

double eval_f24(const AsymmetricRational& p, double x) {
  if (x < 0.0) return 2.0 * p.b1 * x / (x * x + p.c1_sq);
  return 2.0 * p.b2 * x / (x * x + p.c2_sq);
}

double eval_f25(double x, int n) {
  return 0.5 * x + 25.0 * x / (x * x + 1.0) + 8.0 * std::cos(1.2 * n);
}

double eval_g25(double x) { return x * x / 10.0; }

double transition_mean(const BenchmarkSystem& s, double x, int n) {
  return std::visit(overloaded{
                        [&](const AsymmetricRational& p) { return eval_f24(p, x); },
                        [&](const KitagawaSystem&) { return eval_f25(x, n); },
                        [&](const ARBaseline& p) { return p.coefficient(x) * x; },
                    },
                    s);
}

double observation_mean(const BenchmarkSystem& s, double x) {
  return std::holds_alternative<KitagawaSystem>(s) ? eval_g25(x) : x;
}

double process_variance(const BenchmarkSystem& s) {
  return std::visit([](const auto& p) { return p.tau2; }, s);
}

double observation_variance(const BenchmarkSystem& s) {
  return std::visit([](const auto& p) { return p.sigma2; }, s);
}

std::string system_name(const BenchmarkSystem& s) {
  return std::visit(overloaded{
                        [](const AsymmetricRational&) { return std::string("f24"); },
                        [](const KitagawaSystem&) { return std::string("f25"); },
                        [](const ARBaseline& p) { return std::string(p.asymmetric ? "asym-ar" : "ar"); },
                    },
                    s);
}

Simulation simulate(const BenchmarkSystem& system, int N, std::uint64_t seed,
                    std::optional<double> x0) {
  if (N < 1) throw InvalidArgument("simulate: N must be >= 1");
  validate_system(system);
  Rng rng(named_seed(seed, "simulate"));
  const double tau = std::sqrt(process_variance(system));
  const double sigma = std::sqrt(observation_variance(system));
  Simulation out;
  // Draw x0 even when overridden so the noise sequence does not shift.
  const double drawn = rng.normal();
  out.x0 = x0 ? *x0 : drawn;
  out.x.resize(N);
  out.y.resize(N);
  double x = out.x0;
  for (int n = 1; n <= N; ++n) {
    const double v = rng.normal();
    const double w = rng.normal();
    x = transition_mean(system, x, n) + tau * v;
    out.x[n - 1] = x;
    out.y[n - 1] = observation_mean(system, x) + sigma * w;
  }
  return out;
}

SystemModel::SystemModel(BenchmarkSystem system) : system_(std::move(system)) {
  validate_system(system_);
  const double s2 = observation_variance(system_);
  if (!(s2 > 0.0)) throw InvalidArgument("particle filter needs sigma2 > 0");
  process_sd_ = std::sqrt(process_variance(system_));
  log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi * s2);
  inv_sigma2_ = 1.0 / s2;
}

void SystemModel::sample_initial(std::span<double> state, Rng& rng) const {
  state[0] = rng.normal();
}

void SystemModel::sample_transition(std::span<double> state, int step, Rng& rng) const {
  state[0] = transition_mean(system_, state[0], step) + process_sd_ * rng.normal();
}

double SystemModel::log_observation(std::span<const double> state, double y, int) const {
  const double e = y - observation_mean(system_, state[0]);
  return log_norm_ - 0.5 * e * e * inv_sigma2_;
}

LinearSSM ar_linear_model(const ARBaseline& model) {
  LinearSSM m;
  m.F = Eigen::MatrixXd::Constant(1, 1, model.a1);
  m.G = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.H = Eigen::RowVectorXd::Constant(1, 1.0);
  m.Q = Eigen::VectorXd::Constant(1, model.tau2);
  m.sigma2 = model.sigma2;
  m.x0 = Eigen::VectorXd::Zero(1);
  m.V0 = Eigen::MatrixXd::Identity(1, 1);
  return m;
}

ArFit ar_baseline_fit(std::span<const double> y, bool asymmetric, const ArFitOptions& options) {
  if (y.size() < 10) throw InvalidArgument("ar_baseline_fit: need at least 10 observations");
  for (double v : y)
    if (!std::isfinite(v)) throw DataError("ar_baseline_fit: non-finite observation");

  // Moment-based start: lag-1 autocorrelation and half the variance to each noise.
  const double N = static_cast<double>(y.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= N;
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    c0 += (y[i] - mean) * (y[i] - mean);
    if (i > 0) c1 += (y[i] - mean) * (y[i - 1] - mean);
  }
  const double rho = c0 > 0.0 ? std::clamp(c1 / c0, -0.95, 0.95) : 0.0;
  const double var = std::max(c0 / N, 1e-6);

  OptProblem sym;
  sym.names = {"a", "tau2", "sigma2"};
  sym.transforms = {ParamTransform::Identity, ParamTransform::Log, ParamTransform::Log};
  sym.initial = {rho, 0.5 * var * (1.0 - rho * rho), 0.5 * var};
  sym.max_evaluations = options.max_evaluations;
  sym.objective = [&](std::span<const double> p) {
    ARBaseline m{false, p[0], p[0], p[1], p[2]};
    return kalman_filter(ar_linear_model(m), y).loglik;
  };
  const OptResult s = nelder_mead_max(sym);
  ArFit fit;
  fit.model = ARBaseline{false, s.params[0], s.params[0], s.params[1], s.params[2]};
  fit.loglik = s.value;
  fit.evaluations = s.evaluations;
  fit.converged = s.converged;
  fit.aic = aic(fit.loglik, 3);
  if (!asymmetric) return fit;

  PfOptions pf;
  pf.particles = options.particles;
  pf.seed = options.seed;
  pf.summaries = false;
  OptProblem asym;
  asym.names = {"a1", "a2", "tau2", "sigma2"};
  asym.transforms = {ParamTransform::Identity, ParamTransform::Identity, ParamTransform::Log,
                     ParamTransform::Log};
  asym.initial = {fit.model.a1, fit.model.a1, fit.model.tau2, fit.model.sigma2};
  asym.steps = {0.05, 0.05, 0.2, 0.2};
  asym.max_evaluations = options.max_evaluations;
  asym.tolerance = 1e-4;
  asym.x_tolerance = 1e-3;
  asym.objective = [&](std::span<const double> p) {
    const SystemModel model(ARBaseline{true, p[0], p[1], p[2], p[3]});
    try {
      return pf_run(model, y, pf).loglik;
    } catch (const ParticleCollapse&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  const OptResult a = nelder_mead_max(asym);
  ArFit out;
  out.model = ARBaseline{true, a.params[0], a.params[1], a.params[2], a.params[3]};
  out.loglik = a.value;
  out.evaluations = fit.evaluations + a.evaluations;
  out.converged = a.converged;
  out.aic = aic(out.loglik, 4);
  return out;
}

}  // namespace gpssm
