#include "gpssm/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gpssm/error.hpp"
#include "gpssm/parallel.hpp"

namespace gpssm {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

bool is_uniform(std::span<const double> w) {
  const double first = w.front();
  return std::all_of(w.begin(), w.end(), [first](double v) { return v == first; });
}

// Weighted type-7-free quantile: smallest value whose cumulative weight
// reaches prob.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double prob) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  double cum = 0.0;
  for (auto i : order) {
    cum += weights[i];
    if (cum >= prob) return values[i];
  }
  return values[order.back()];
}

StepSummary summarize(std::span<const double> lead, std::span<const double> weights,
                      bool uniform) {
  StepSummary s;
  double mean = 0.0;
  for (std::size_t i = 0; i < lead.size(); ++i) mean += weights[i] * lead[i];
  double var = 0.0;
  for (std::size_t i = 0; i < lead.size(); ++i) var += weights[i] * (lead[i] - mean) * (lead[i] - mean);
  s.mean = mean;
  s.sd = std::sqrt(std::max(0.0, var));
  if (uniform) {
    std::vector<double> v(lead.begin(), lead.end());
    s.q025 = quantile(v, 0.025);
    s.q25 = quantile(v, 0.25);
    s.q50 = quantile(v, 0.5);
    s.q75 = quantile(v, 0.75);
    s.q975 = quantile(v, 0.975);
  } else {
    s.q025 = weighted_quantile(lead, weights, 0.025);
    s.q25 = weighted_quantile(lead, weights, 0.25);
    s.q50 = weighted_quantile(lead, weights, 0.5);
    s.q75 = weighted_quantile(lead, weights, 0.75);
    s.q975 = weighted_quantile(lead, weights, 0.975);
  }
  return s;
}

}  // namespace

std::vector<double> ParticleCloud::leading() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i * dim_];
  return out;
}

void NonlinearModel::initialize(ParticleCloud& cloud, const RandomStreams& streams) const {
  parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = streams.particle(0, i);
      sample_initial(cloud[i], rng);
    }
  });
}

void NonlinearModel::propagate(ParticleCloud& cloud, int step,
                               const RandomStreams& streams) const {
  parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = streams.particle(step, i);
      sample_transition(cloud[i], step, rng);
    }
  });
}

double log_mean_exp(std::span<const double> log_weights) {
  if (log_weights.empty()) throw InvalidArgument("log_mean_exp: empty input");
  const double max = *std::max_element(log_weights.begin(), log_weights.end());
  if (max == -std::numeric_limits<double>::infinity()) return max;
  double sum = 0.0;
  for (double lw : log_weights) sum += std::exp(lw - max);
  return max + std::log(sum) - std::log(static_cast<double>(log_weights.size()));
}

double quantile(std::vector<double>& values, double prob) {
  if (values.empty()) throw InvalidArgument("quantile: empty input");
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double v_lo = values[lo];
  if (lo + 1 >= values.size()) return v_lo;
  const double v_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return v_lo + (h - static_cast<double>(lo)) * (v_hi - v_lo);
}

std::vector<std::uint32_t> resample(std::span<const double> weights, Resampling scheme,
                                    Rng& rng) {
  const std::size_t m = weights.size();
  if (m == 0) throw InvalidArgument("resample: no particles");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("resample: negative or NaN weight");
    total += w;
  }
  if (!(total > 0.0)) throw NumericalError("resample: all weights are zero");

  // Sorted positions u_0 <= ... <= u_{m-1} in [0, total), matched against the
  // cumulative weights in one sweep.
  std::vector<double> positions(m);
  if (scheme == Resampling::Systematic) {
    const double u = rng.uniform();
    for (std::size_t k = 0; k < m; ++k)
      positions[k] = (static_cast<double>(k) + u) / static_cast<double>(m) * total;
  } else {
    // Normalized exponential spacings give sorted i.i.d. uniforms.
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      acc += -std::log(rng.uniform());
      positions[k] = acc;
    }
    const double last = acc - std::log(rng.uniform());
    for (auto& p : positions) p = p / last * total;
  }

  std::vector<std::uint32_t> out(m);
  std::size_t j = 0;
  double cum = weights[0];
  for (std::size_t k = 0; k < m; ++k) {
    while (positions[k] >= cum && j + 1 < m) cum += weights[++j];
    out[k] = static_cast<std::uint32_t>(j);
  }
  return out;
}

PfResult pf_run(const NonlinearModel& model, std::span<const double> y, const PfOptions& options) {
  const std::size_t m = options.particles;
  if (m < 2) throw InvalidArgument("pf_run: need at least two particles");
  if (m > std::numeric_limits<std::uint32_t>::max())
    throw InvalidArgument("pf_run: too many particles");
  if (y.empty()) throw InvalidArgument("pf_run: empty series");
  for (std::size_t n = 0; n < y.size(); ++n)
    if (!std::isfinite(y[n]))
      throw DataError("pf_run: non-finite observation at step " + std::to_string(n + 1) +
                      " (missing values are not supported by the particle filter)");

  const std::size_t dim = model.state_dim();
  const RandomStreams streams(options.seed);
  ParticleCloud cloud(m, dim);
  model.initialize(cloud, streams);

  PfResult result;
  result.particles = m;
  result.seed = options.seed;
  result.min_ess = static_cast<double>(m);
  if (options.summaries) result.steps.reserve(y.size());

  std::vector<double> weights(m, 1.0 / static_cast<double>(m));
  std::vector<double> logw(m);
  double se2 = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);

  for (std::size_t k = 0; k < y.size(); ++k) {
    const int step = static_cast<int>(k) + 1;
    model.propagate(cloud, step, streams);

    parallel_for(m, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        logw[i] = model.log_observation(cloud[i], y[k], step);
    });

    double max = -std::numeric_limits<double>::infinity();
    for (double lw : logw) {
      if (std::isnan(lw)) throw NumericalError("pf_run: NaN observation log-density at step " +
                                               std::to_string(step));
      max = std::max(max, lw);
    }
    if (max == -std::numeric_limits<double>::infinity()) throw ParticleCollapse(step);

    // Unnormalized weights relative to the largest; W_{n-1} folded in.
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double w = std::exp(logw[i] - max);
      const double ww = weights[i] * w;
      weights[i] = ww;
      sum += ww;
      sum_sq += ww * ww;
    }
    if (!(sum > 0.0)) throw ParticleCollapse(step);

    StepSummary summary;
    summary.log_increment = max + std::log(sum);
    result.loglik += summary.log_increment;
    // Var of the weighted-mean estimator relative to its square.
    se2 += std::max(0.0, sum_sq / (sum * sum) - inv_m);

    for (double& w : weights) w /= sum;
    summary.ess = (sum * sum) / sum_sq;
    if (summary.ess < result.min_ess) {
      result.min_ess = summary.ess;
      result.min_ess_step = step;
    }

    const bool do_resample =
        options.ess_threshold <= 0.0 || summary.ess < options.ess_threshold * static_cast<double>(m);
    std::vector<std::uint32_t> ancestors;
    if (options.store_history) result.history.predicted.push_back(cloud);
    if (do_resample) {
      Rng rng = streams.resampling(step);
      ancestors = resample(weights, options.resampling, rng);
      ParticleCloud next(m, dim);
      for (std::size_t i = 0; i < m; ++i) {
        auto src = cloud[ancestors[i]];
        std::copy(src.begin(), src.end(), next[i].begin());
      }
      cloud = std::move(next);
      std::fill(weights.begin(), weights.end(), inv_m);
    } else if (options.store_history) {
      ancestors.resize(m);
      std::iota(ancestors.begin(), ancestors.end(), 0u);
    }
    summary.resampled = do_resample;
    if (options.store_history) {
      result.history.ancestors.push_back(std::move(ancestors));
      result.history.weights.push_back(weights);
    }

    if (options.summaries) {
      const std::vector<double> lead = cloud.leading();
      StepSummary s = summarize(lead, weights, do_resample);
      s.ess = summary.ess;
      s.log_increment = summary.log_increment;
      s.resampled = summary.resampled;
      result.steps.push_back(s);
    }
  }
  result.loglik_se = std::sqrt(se2);
  result.final_cloud = std::move(cloud);
  result.final_weights = std::move(weights);
  return result;
}

SmoothedTrack fixed_lag_smooth(const PfResult& run, int lag) {
  const auto& h = run.history;
  const std::size_t N = h.predicted.size();
  if (N == 0) throw InvalidArgument("fixed_lag_smooth: run has no stored history");
  if (lag < 0) throw InvalidArgument("fixed_lag_smooth: lag must be >= 0");
  if (static_cast<std::size_t>(lag) >= N)
    throw InvalidArgument("fixed_lag_smooth: lag " + std::to_string(lag) +
                          " must be smaller than the series length " + std::to_string(N));
  const std::size_t m = h.predicted.front().size();

  SmoothedTrack out;
  out.mean.resize(N);
  out.median.resize(N);
  out.ancestor_diversity.resize(N);
  std::vector<double> values(m);
  std::vector<std::uint8_t> seen(m);
  for (std::size_t k = 0; k < N; ++k) {
    const std::size_t end = std::min(N - 1, k + static_cast<std::size_t>(lag));
    const auto& w = h.weights[end];
    std::fill(seen.begin(), seen.end(), 0);
    std::size_t distinct = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      std::uint32_t j = h.ancestors[end][i];
      for (std::size_t s = end; s-- > k;) j = h.ancestors[s][j];
      if (!seen[j]) {
        seen[j] = 1;
        ++distinct;
      }
      values[i] = h.predicted[k][j][0];
      mean += w[i] * values[i];
    }
    out.mean[k] = mean;
    if (is_uniform(w)) {
      std::vector<double> tmp = values;
      out.median[k] = quantile(tmp, 0.5);
    } else {
      out.median[k] = weighted_quantile(values, w, 0.5);
    }
    out.ancestor_diversity[k] = static_cast<double>(distinct) / static_cast<double>(m);
    out.min_diversity = std::min(out.min_diversity, out.ancestor_diversity[k]);
  }
  return out;
}

std::vector<std::vector<double>> sample_trajectories(const PfResult& run, std::size_t count,
                                                     std::uint64_t seed) {
  const auto& h = run.history;
  const std::size_t N = h.predicted.size();
  if (N == 0) throw InvalidArgument("sample_trajectories: run has no stored history");
  Rng rng(seed);
  const auto picks = resample(h.weights.back(), Resampling::Multinomial, rng);
  std::vector<std::vector<double>> out;
  for (std::size_t t = 0; t < count; ++t) {
    std::vector<double> path(N);
    std::uint32_t j = h.ancestors[N - 1][picks[t % picks.size()]];
    path[N - 1] = h.predicted[N - 1][j][0];
    for (std::size_t s = N - 1; s-- > 0;) {
      j = h.ancestors[s][j];
      path[s] = h.predicted[s][j][0];
    }
    out.push_back(std::move(path));
  }
  return out;
}

LinearGaussianModel::LinearGaussianModel(LinearSSM model) : model_(std::move(model)) {
  model_.validate();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model_.V0);
  init_factor_ = eig.eigenvectors() *
                 eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  noise_sd_ = model_.Q.cwiseSqrt();
}

std::size_t LinearGaussianModel::state_dim() const {
  return static_cast<std::size_t>(model_.state_dim());
}

void LinearGaussianModel::sample_initial(std::span<double> state, Rng& rng) const {
  Eigen::VectorXd z(model_.state_dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  Eigen::Map<Eigen::VectorXd>(state.data(), z.size()) = model_.x0 + init_factor_ * z;
}

void LinearGaussianModel::sample_transition(std::span<double> state, int, Rng& rng) const {
  Eigen::Map<Eigen::VectorXd> x(state.data(), model_.state_dim());
  Eigen::VectorXd v(model_.noise_dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = noise_sd_(i) * rng.normal();
  const Eigen::VectorXd next = model_.F * x + model_.G * v;
  x = next;
}

double LinearGaussianModel::log_observation(std::span<const double> state, double y, int) const {
  const Eigen::Map<const Eigen::VectorXd> x(state.data(), model_.state_dim());
  const double e = y - model_.H.dot(x);
  return -0.5 * (kLog2Pi + std::log(model_.sigma2) + e * e / model_.sigma2);
}

std::vector<std::string> pf_csv_header() {
  return {"step", "mean", "sd", "q025", "q25", "q50", "q75", "q975", "ess"};
}

std::vector<double> pf_csv_row(int step, const StepSummary& s) {
  return {static_cast<double>(step), s.mean, s.sd, s.q025, s.q25, s.q50, s.q75, s.q975, s.ess};
}

nlohmann::json pf_summary_json(const PfResult& run) {
  return {
      {"loglik", run.loglik},
      {"loglik_se", run.loglik_se},
      {"particles", run.particles},
      {"seed", run.seed},
      {"steps", run.steps.size()},
      {"collapse", {{"collapsed", false}, {"min_ess", run.min_ess}, {"min_ess_step", run.min_ess_step}}},
  };
}

}  // namespace gpssm
