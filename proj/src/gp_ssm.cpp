#include "gpssm/gp_ssm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "gpssm/csv.hpp"
#include "gpssm/error.hpp"
#include "gpssm/parallel.hpp"

namespace gpssm {

namespace {

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidArgument("bad number '" + std::string(text) + "' in " + std::string(what));
  return v;
}

}  // namespace

ObservationFunction ObservationFunction::tabulated(std::vector<double> xs, std::vector<double> gs) {
  if (xs.size() != gs.size() || xs.size() < 2)
    throw InvalidArgument("tabulated observation: need >= 2 (x, g) points of equal count");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw InvalidArgument("tabulated observation: x must increase");
  ObservationFunction f(Kind::Tabulated);
  f.xs_ = std::move(xs);
  f.gs_ = std::move(gs);
  return f;
}

ObservationFunction ObservationFunction::parse(std::string_view name) {
  if (name == "identity") return identity();
  if (name == "quad10") return quad10();
  throw InvalidArgument("unknown observation function '" + std::string(name) +
                        "' (expected identity or quad10)");
}

double ObservationFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::Identity: return x;
    case Kind::Quad10: return x * x / 10.0;
    case Kind::Tabulated: {
      if (x <= xs_.front()) return gs_.front();
      if (x >= xs_.back()) return gs_.back();
      const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
      const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
      return gs_[i - 1] + t * (gs_[i] - gs_[i - 1]);
    }
  }
  return x;
}

std::string ObservationFunction::name() const {
  switch (kind_) {
    case Kind::Identity: return "identity";
    case Kind::Quad10: return "quad10";
    case Kind::Tabulated: return "tabulated";
  }
  return "?";
}

ExogenousInput ExogenousInput::cosine(double amp, double freq) {
  if (!std::isfinite(amp) || !std::isfinite(freq))
    throw InvalidArgument("cosine input: amplitude and frequency must be finite");
  ExogenousInput u;
  u.kind_ = Kind::Cosine;
  u.amp_ = amp;
  u.freq_ = freq;
  return u;
}

ExogenousInput ExogenousInput::table(std::vector<double> values) {
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("input series contains non-finite values");
  ExogenousInput u;
  u.kind_ = Kind::Table;
  u.values_ = std::move(values);
  return u;
}

ExogenousInput ExogenousInput::parse(std::string_view spec) {
  if (spec.empty() || spec == "none") return {};
  if (spec.substr(0, 4) != "cos:")
    throw InvalidArgument("input spec must be 'none' or 'cos:amp=A,freq=W', got '" +
                          std::string(spec) + "'");
  double amp = 8.0, freq = 1.2;
  std::string_view rest = spec.substr(4);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw InvalidArgument("input spec: expected key=value");
    const std::string_view key = item.substr(0, eq);
    const double v = parse_double(item.substr(eq + 1), "input spec");
    if (key == "amp") amp = v;
    else if (key == "freq") freq = v;
    else throw InvalidArgument("input spec: unknown key '" + std::string(key) + "'");
  }
  return cosine(amp, freq);
}

double ExogenousInput::at(int n) const {
  switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::Cosine: return amp_ * std::cos(freq_ * n);
    case Kind::Table:
      if (n < 1 || static_cast<std::size_t>(n) > values_.size())
        throw InvalidArgument("input series has no value for step " + std::to_string(n));
      return values_[n - 1];
  }
  return 0.0;
}

std::vector<double> ExogenousInput::series(int first, int count) const {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = at(first + i);
  return out;
}

void ExogenousInput::check_length(std::size_t N) const {
  if (kind_ == Kind::Table && values_.size() < N)
    throw InvalidArgument("input series has " + std::to_string(values_.size()) +
                          " values but the data has " + std::to_string(N));
}

std::string ExogenousInput::to_string() const {
  switch (kind_) {
    case Kind::None: return "none";
    case Kind::Cosine: return "cos:amp=" + format_number(amp_) + ",freq=" + format_number(freq_);
    case Kind::Table: return "table(" + std::to_string(values_.size()) + ")";
  }
  return "?";
}

int GpSsm::lag() const { return gp ? static_cast<int>(gp->input_dim()) : 0; }

void GpSsm::validate() const {
  if (!gp || gp->size() == 0) throw InvalidArgument("GP-SSM: transition GP is not fitted");
  if (lag() != 1 && lag() != 2) throw InvalidArgument("GP-SSM: lag order must be 1 or 2");
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw InvalidArgument("GP-SSM: tau2 must be > 0");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("GP-SSM: sigma2 must be > 0");
  if (!(init_var >= 0.0)) throw InvalidArgument("GP-SSM: initial variance must be >= 0");
}

void gp_transition_sample(const GpSsm& model, std::span<double> state, int n, Rng& rng) {
  if (!model.gp || model.gp->size() == 0)
    throw InvalidArgument("gp_transition_sample: transition GP is not fitted");
  const GpPrediction p = model.gp->predict(state);
  const double x = p.mean + model.input.at(n) + std::sqrt(p.variance + model.tau2) * rng.normal();
  for (std::size_t k = state.size(); k-- > 1;) state[k] = state[k - 1];
  state[0] = x;
}

GpSsmModel::GpSsmModel(GpSsm model) : model_(std::move(model)) {
  model_.validate();
  log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi * model_.sigma2);
}

std::size_t GpSsmModel::state_dim() const { return static_cast<std::size_t>(model_.lag()); }

void GpSsmModel::sample_initial(std::span<double> state, Rng& rng) const {
  const double sd = std::sqrt(model_.init_var);
  for (double& s : state) s = model_.init_mean + sd * rng.normal();
}

void GpSsmModel::sample_transition(std::span<double> state, int step, Rng& rng) const {
  gp_transition_sample(model_, state, step, rng);
}

double GpSsmModel::log_observation(std::span<const double> state, double y, int) const {
  const double e = y - model_.obs(state[0]);
  return log_norm_ - 0.5 * e * e / model_.sigma2;
}

void GpSsmModel::propagate(ParticleCloud& cloud, int step, const RandomStreams& streams) const {
  const std::size_t m = cloud.size();
  std::vector<double> mean(m), var(m);
  model_.gp->predict_batch(cloud.packed(), mean, var);
  const double u = model_.input.at(step);
  const double tau2 = model_.tau2;
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = streams.particle(step, i);
      auto s = cloud[i];
      const double x = mean[i] + u + std::sqrt(var[i] + tau2) * rng.normal();
      for (std::size_t k = s.size(); k-- > 1;) s[k] = s[k - 1];
      s[0] = x;
    }
  });
}

PfResult gpssm_filter(const GpSsm& model, std::span<const double> y, const PfOptions& options) {
  model.input.check_length(y.size());
  return pf_run(GpSsmModel(model), y, options);
}

LoglikValue gpssm_loglik(const GpSsm& model, std::span<const double> y, std::size_t particles,
                         std::uint64_t seed) {
  PfOptions opt;
  opt.particles = particles;
  opt.seed = seed;
  opt.summaries = false;
  LoglikValue out;
  try {
    out.loglik = gpssm_filter(model, y, opt).loglik;
  } catch (const ParticleCollapse& e) {
    out.loglik = -std::numeric_limits<double>::infinity();
    out.collapsed = true;
    out.collapse_step = e.step();
  }
  return out;
}

std::vector<double> seasonal_features(int n, int period) {
  if (period < 0 || period == 1) throw InvalidArgument("seasonal period must be 0 or >= 2");
  if (period == 0) return {static_cast<double>(n)};
  const double phase = 2.0 * std::numbers::pi * n / period;
  return {std::cos(phase), std::sin(phase)};
}

GpModel fit_seasonal_gp(std::span<const double> seasonal, int period, const Kernel& kernel,
                        double noise_variance) {
  if (seasonal.empty()) throw InvalidArgument("fit_seasonal_gp: empty seasonal track");
  const Eigen::Index d = period == 0 ? 1 : 2;
  InputMatrix X(static_cast<Eigen::Index>(seasonal.size()), d);
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto f = seasonal_features(static_cast<int>(i) + 1, period);
    for (Eigen::Index k = 0; k < d; ++k) X(i, k) = f[k];
    y(i) = seasonal[i];
  }
  return GpModel::fit(std::move(X), std::move(y), kernel, noise_variance);
}

AdditiveResult additive_gpssm_filter(const AdditiveGpSsm& model, std::span<const double> y,
                                     const PfOptions& options) {
  if (!model.seasonal || model.seasonal->input_dim() != (model.period == 0 ? 1 : 2))
    throw InvalidArgument("additive GP-SSM: seasonal GP over the time index is missing");
  const std::size_t N = y.size();
  AdditiveResult out;
  out.seasonal.resize(N);
  std::vector<double> adjusted(N);
  for (std::size_t n = 0; n < N; ++n) {
    const auto f = seasonal_features(static_cast<int>(n) + 1, model.period);
    out.seasonal[n] = model.seasonal->predict(f).mean;
    adjusted[n] = y[n] - out.seasonal[n];
  }
  PfOptions opt = options;
  opt.summaries = true;
  out.run = gpssm_filter(model.trend, adjusted, opt);
  out.loglik = out.run.loglik;
  out.trend.resize(N);
  out.trend_sd.resize(N);
  out.trend_diff.resize(N);
  out.residual.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    out.trend[n] = out.run.steps[n].mean;
    out.trend_sd[n] = out.run.steps[n].sd;
    out.trend_diff[n] = n == 0 ? 0.0 : out.trend[n] - out.trend[n - 1];
    out.residual[n] = y[n] - out.trend[n] - out.seasonal[n];
  }
  return out;
}

GpSsm gpssm_from_params(const GpSsmFitSpec& spec, std::span<const double> params) {
  const std::size_t k = spec.kernel.num_params();
  if (params.size() != k + 3) throw InvalidArgument("gpssm_from_params: wrong parameter count");
  GpSsm m;
  m.tau2 = params[0];
  m.sigma2 = params[1];
  const Kernel kernel = spec.kernel.with_params(params.subspan(2, k));
  m.gp = std::make_shared<const GpModel>(fit_transition_gp(spec.pairs, kernel, params[k + 2]));
  m.obs = spec.obs;
  m.input = spec.input;
  m.init_mean = spec.init_mean;
  m.init_var = spec.init_var;
  return m;
}

OptProblem gpssm_problem(const GpSsmFitSpec& spec, std::span<const double> y) {
  OptProblem p;
  p.names = {"tau2", "sigma2"};
  p.transforms = {ParamTransform::Log, ParamTransform::Log};
  p.initial = {spec.tau2, spec.sigma2};
  for (const auto& n : spec.kernel.param_names()) p.names.push_back(n);
  for (auto t : spec.kernel.param_transforms()) p.transforms.push_back(t);
  for (double v : spec.kernel.params()) p.initial.push_back(v);
  p.names.push_back("gp_noise");
  p.transforms.push_back(ParamTransform::Log);
  p.initial.push_back(spec.gp_noise);
  p.max_evaluations = spec.max_evaluations;
  p.tolerance = spec.tolerance;
  p.x_tolerance = spec.x_tolerance;
  p.objective = [&spec, y](std::span<const double> params) {
    GpSsm m;
    try {
      m = gpssm_from_params(spec, params);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
    return gpssm_loglik(m, y, spec.particles, spec.seed).loglik;
  };
  return p;
}

GpSsmFit fit_gpssm(const GpSsmFitSpec& spec, std::span<const double> y) {
  OptProblem problem = gpssm_problem(spec, y);
  GpSsmFit out;
  out.result = nelder_mead_max(problem);
  int evaluations = out.result.evaluations;
  const std::vector<double> base = problem.initial;
  for (double t : spec.extra_tau2_starts) {
    problem.initial = base;
    problem.initial[0] = t;
    OptResult r = nelder_mead_max(problem);
    evaluations += r.evaluations;
    if (r.value > out.result.value) out.result = std::move(r);
  }
  problem.initial = base;
  out.result.evaluations = evaluations;
  out.model = gpssm_from_params(spec, out.result.params);
  out.kernel = out.model.gp->kernel();
  out.gp_noise = out.model.gp->noise_variance();
  problem.objective = nullptr;  // refers to the caller's data
  out.problem = std::move(problem);
  return out;
}

}  // namespace gpssm
