#include "gpssm/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gpssm/csv.hpp"
#include "gpssm/decomp.hpp"
#include "gpssm/error.hpp"
#include "gpssm/gp_ssm.hpp"

namespace gpssm {

namespace {

std::string slug(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(c));
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string param_text(const std::vector<std::pair<std::string, double>>& params) {
  std::string out;
  char buf[64];
  for (const auto& [name, value] : params) {
    std::snprintf(buf, sizeof buf, "%.4g", value);
    if (!out.empty()) out += ", ";
    out += name + "=" + buf;
  }
  return out.empty() ? "---" : out;
}

Table make_table(const std::string& title, const std::vector<ModelRow>& rows) {
  Table t;
  t.title = title;
  t.columns = {"model", "training", "kernel", "log-likelihood", "AIC", "parameters", "RMSE",
               "evaluations"};
  for (const auto& r : rows) {
    if (!r.ok) {
      t.add({r.model, r.training, r.kernel, "FAILED", "---", r.error, "---", "---"});
      continue;
    }
    t.add({r.model, r.training, r.kernel, fixed(r.loglik, 3), fixed(r.aic, 3),
           param_text(r.params), fixed(r.rmse, 3),
           r.evaluations > 0 ? std::to_string(r.evaluations) : "---"});
  }
  return t;
}

nlohmann::json rows_json(const std::vector<ModelRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    out.push_back({{"model", r.model},
                   {"training", r.training},
                   {"kernel", r.kernel},
                   {"ok", r.ok},
                   {"error", r.error},
                   {"loglik", num(r.loglik)},
                   {"aic", num(r.aic)},
                   {"rmse", num(r.rmse)},
                   {"evaluations", r.evaluations},
                   {"params", params}});
  }
  return out;
}

ExperimentResult finish(std::string name, std::uint64_t seed, std::string title,
                        std::vector<ModelRow> rows, nlohmann::json extra,
                        const ArtifactSink& sink) {
  ExperimentResult res;
  res.name = std::move(name);
  res.seed = seed;
  res.rows = std::move(rows);
  res.table = make_table(title, res.rows);
  res.summary = {{"experiment", res.name}, {"seed", seed}, {"rows", rows_json(res.rows)}};
  for (auto& [k, v] : extra.items()) res.summary[k] = v;
  if (sink.enabled()) {
    std::string md;
    for (const auto& c : sink.comments) md += "<!-- " + c + " -->\n";
    md += "\n" + res.table.markdown();
    write_text_file(sink.path("table.md"), md);
    nlohmann::json doc = res.summary;
    doc["config"] = sink.comments;
    write_text_file(sink.path("summary.json"), doc.dump(2) + "\n");
  }
  return res;
}

void write_series(const ArtifactSink& sink, const std::string& file,
                  const std::vector<std::string>& header,
                  const std::vector<std::vector<double>>& columns) {
  if (!sink.enabled()) return;
  CsvWriter w(sink.path(file), sink.comments, header);
  const std::size_t n = columns.front().size();
  std::vector<double> row(columns.size() + 1);
  for (std::size_t i = 0; i < n; ++i) {
    row[0] = static_cast<double>(i + 1);
    for (std::size_t c = 0; c < columns.size(); ++c) row[c + 1] = columns[c][i];
    w.row(row);
  }
}

std::vector<double> filtered_mean(const PfResult& run) {
  std::vector<double> out;
  for (const auto& s : run.steps) out.push_back(s.mean);
  return out;
}

std::vector<double> filtered_median(const PfResult& run) {
  std::vector<double> out;
  for (const auto& s : run.steps) out.push_back(s.q50);
  return out;
}

struct GpSsmJob {
  std::string model = "GP-SSM";
  std::string source;
  std::string kernel_text;
  GpSsmFitSpec spec;
  std::size_t eval_particles = 10000;
  std::uint64_t eval_seed = 0;
  double curve_lo = -10.0, curve_hi = 10.0;
  double truth_offset = 0.0;  // added to the filtered state before comparing to truth
};

/// ML fit, evaluation run with a fresh seed, row and artifacts.
ModelRow run_gpssm_job(const GpSsmJob& job, std::span<const double> y,
                       std::span<const double> truth, const ArtifactSink& sink,
                       PfResult* run_out = nullptr) {
  ModelRow row;
  row.model = job.model;
  row.training = job.source;
  row.kernel = job.kernel_text;
  try {
    const GpSsmFit fit = fit_gpssm(job.spec, y);
    PfOptions opt;
    opt.particles = job.eval_particles;
    opt.seed = job.eval_seed;
    PfResult run = gpssm_filter(fit.model, y, opt);
    row.loglik = run.loglik;
    const int k = static_cast<int>(fit.result.params.size());
    row.aic = aic(row.loglik, k);
    row.evaluations = fit.result.evaluations;
    for (std::size_t i = 0; i < fit.result.params.size(); ++i)
      row.params.emplace_back(fit.problem.names[i], fit.result.params[i]);
    if (!truth.empty()) {
      std::vector<double> mean = filtered_mean(run);
      for (double& m : mean) m += job.truth_offset;
      row.rmse = rmse(mean, truth);
    }
    if (sink.enabled()) {
      const std::string tag = slug(job.source) + "_" + slug(job.kernel_text);
      write_pf_csv(sink.path("gpssm_" + tag + ".csv"), sink.comments, run);
      write_text_file(sink.path("gp_" + tag + ".json"), fit.model.gp->to_json().dump(2) + "\n");
      if (fit.model.gp->input_dim() == 1)
        write_gp_curve(sink.path("gp_" + tag + ".csv"), sink.comments, *fit.model.gp,
                       job.curve_lo, job.curve_hi);
    }
    if (run_out) *run_out = std::move(run);
  } catch (const Error& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

void write_pairs_artifact(const ArtifactSink& sink, const std::string& source,
                          const TransitionPairs& pairs) {
  if (sink.enabled()) write_pairs(sink.path("pairs_" + slug(source) + ".csv"), pairs, sink.comments);
}

struct LinearSim {
  std::vector<double> level;  // first state component
  std::vector<double> y;
};

LinearSim simulate_linear(const LinearSSM& model, int N, Rng& rng) {
  LinearSim out;
  Eigen::VectorXd x = model.x0;
  for (int n = 0; n < N; ++n) {
    Eigen::VectorXd v(model.noise_dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::sqrt(model.Q(i)) * rng.normal();
    x = model.F * x + model.G * v;
    out.level.push_back(x(0));
    out.y.push_back(model.H.dot(x) + std::sqrt(model.sigma2) * rng.normal());
  }
  return out;
}

ModelRow decomp_row(const DecompCandidate& c, const std::string& name) {
  ModelRow row;
  row.model = name;
  row.ok = c.ok;
  row.error = c.error;
  row.loglik = c.loglik;
  row.aic = c.aic;
  row.evaluations = c.evaluations;
  row.params = {{"tau1", c.spec.tau1}, {"sigma2", c.spec.sigma2}};
  if (c.spec.seasonal()) row.params.insert(row.params.begin() + 1, {"tau2", c.spec.tau2});
  return row;
}

}  // namespace

const ModelRow& ExperimentResult::row(const std::string& model, const std::string& training,
                                      const std::string& kernel) const {
  for (const auto& r : rows)
    if (r.model == model && r.training == training && r.kernel == kernel) return r;
  throw InvalidArgument("experiment " + name + " has no row " + model + "/" + training + "/" +
                        kernel);
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw InvalidArgument("rmse: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

int stride_for(std::size_t N, int d, int max_pairs) {
  if (max_pairs < 1) throw InvalidArgument("max_pairs must be >= 1");
  const std::size_t available = N > static_cast<std::size_t>(d) ? N - d : 0;
  return static_cast<int>(std::max<std::size_t>(1, (available + max_pairs - 1) / max_pairs));
}

ExperimentResult run_asym_ar(const AsymArOptions& o, std::uint64_t seed, const ArtifactSink& sink) {
  const Simulation sim = simulate(o.system, o.N, named_seed(o.data_seed.value_or(seed), "data"));
  write_series(sink, "data.csv", {"n", "x", "y"}, {sim.x, sim.y});
  std::vector<ModelRow> rows;

  const SystemModel truth(o.system);
  for (std::size_t m : o.pf_particles) {
    ModelRow row;
    row.model = "particle filter m=" + std::to_string(m);
    PfOptions opt;
    opt.particles = m;
    opt.seed = named_seed(seed, "pf");
    try {
      const PfResult run = pf_run(truth, sim.y, opt);
      row.loglik = run.loglik;
      row.rmse = rmse(filtered_mean(run), sim.x);
      row.params = {{"tau2", o.system.tau2}, {"sigma2", o.system.sigma2}};
      if (sink.enabled()) write_pf_csv(sink.path("pf_true_m" + std::to_string(m) + ".csv"), sink.comments, run);
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(row);
  }

  ArFitOptions aro;
  aro.particles = o.ar_particles;
  aro.seed = named_seed(seed, "asym-ar");
  aro.max_evaluations = o.max_evaluations;
  ArFit sym, asym;
  bool sym_ok = false, asym_ok = false;
  {
    ModelRow row;
    row.model = "AR";
    try {
      sym = ar_baseline_fit(sim.y, false, aro);
      sym_ok = true;
      row.loglik = sym.loglik;
      row.aic = sym.aic;
      row.evaluations = sym.evaluations;
      row.params = {{"a", sym.model.a1}, {"tau2", sym.model.tau2}, {"sigma2", sym.model.sigma2}};
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(row);
  }
  if (o.fit_asymmetric) {
    ModelRow row;
    row.model = "Asymmetric AR";
    try {
      asym = ar_baseline_fit(sim.y, true, aro);
      asym_ok = true;
      row.loglik = asym.loglik;
      row.aic = asym.aic;
      row.evaluations = asym.evaluations;
      row.params = {{"a1", asym.model.a1}, {"a2", asym.model.a2}, {"tau2", asym.model.tau2},
                    {"sigma2", asym.model.sigma2}};
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(row);
  }

  const int stride = stride_for(sim.x.size(), 1, o.max_pairs);
  for (const auto& source : o.sources) {
    TransitionPairs pairs;
    std::string failure;
    try {
      if (source == "true") {
        pairs = pairs_from_states(sim.x, 1, {}, stride, Provenance::TrueSimulation);
      } else if (source == "AR") {
        if (!sym_ok) throw NumericalError("AR fit failed");
        const LinearSSM lm = ar_linear_model(sym.model);
        const SmootherOutput sm = kalman_smoother(lm, kalman_filter(lm, sim.y));
        std::vector<double> states;
        for (const auto& v : sm.mean) states.push_back(v(0));
        pairs = pairs_from_states(states, 1, {}, stride, Provenance::KalmanSmoothed);
      } else if (source == "AS-AR") {
        if (!asym_ok) throw NumericalError("asymmetric AR fit failed");
        PfOptions opt;
        opt.particles = o.smooth_particles;
        opt.seed = named_seed(seed, "as-ar-smooth");
        opt.store_history = true;
        opt.summaries = false;
        const PfResult run = pf_run(SystemModel(asym.model), sim.y, opt);
        const SmoothedTrack track = fixed_lag_smooth(run, o.smooth_lag);
        pairs = pairs_from_states(track.median, 1, {}, stride, Provenance::PfSmoothed);
      } else {
        throw InvalidArgument("unknown training source '" + source + "'");
      }
      write_pairs_artifact(sink, source, pairs);
    } catch (const Error& e) {
      failure = e.what();
    }
    for (const auto& k : o.kernels) {
      if (!failure.empty()) {
        ModelRow row;
        row.model = "GP-SSM";
        row.training = source;
        row.kernel = k;
        row.ok = false;
        row.error = failure;
        rows.push_back(row);
        continue;
      }
      GpSsmJob job;
      job.source = source;
      job.kernel_text = k;
      job.spec.pairs = pairs;
      job.spec.kernel = Kernel::parse(k);
      job.spec.gp_noise = 0.5;
      job.spec.tau2 = 1.0;
      job.spec.sigma2 = 1.0;
      job.spec.particles = o.fit_particles;
      job.spec.seed = named_seed(seed, "fit");
      job.spec.max_evaluations = o.max_evaluations;
      job.eval_particles = o.eval_particles;
      job.eval_seed = named_seed(seed, "eval");
      job.curve_lo = -8.0;
      job.curve_hi = 10.0;
      rows.push_back(run_gpssm_job(job, sim.y, sim.x, sink));
    }
  }
  nlohmann::json extra = {{"N", o.N},
                          {"system", {{"b1", o.system.b1}, {"c1_sq", o.system.c1_sq}, {"b2", o.system.b2},
                                      {"c2_sq", o.system.c2_sq}, {"tau2", o.system.tau2},
                                      {"sigma2", o.system.sigma2}}},
                          {"training_stride", stride}};
  return finish("asym-ar", seed, "Log-likelihoods on asymmetric AR data", std::move(rows), extra, sink);
}

ExperimentResult run_nonlinear_smooth(const NonlinearSmoothOptions& o, std::uint64_t seed,
                                      const ArtifactSink& sink) {
  const Simulation sim = simulate(o.system, o.N, named_seed(seed, "data"));
  write_series(sink, "data.csv", {"n", "x", "y"}, {sim.x, sim.y});
  const ExogenousInput input = ExogenousInput::cosine(8.0, 1.2);
  std::vector<ModelRow> rows;

  PfOptions opt;
  opt.particles = o.particles;
  opt.seed = named_seed(seed, "pf");
  const PfResult known = pf_run(SystemModel(o.system), sim.y, opt);
  {
    ModelRow row;
    row.model = "SSM";
    row.loglik = known.loglik;
    row.rmse = rmse(filtered_mean(known), sim.x);
    row.params = {{"tau2", o.system.tau2}, {"sigma2", o.system.sigma2}};
    rows.push_back(row);
  }
  if (sink.enabled()) write_pf_csv(sink.path("pf_ssm.csv"), sink.comments, known);

  for (const auto& source : o.sources) {
    TransitionPairs pairs;
    if (source == "true") {
      const std::vector<double> u = input.series(1, o.N);
      pairs = pairs_from_states(filtered_median(known), 1, u, o.true_stride, Provenance::PfSmoothed);
    } else if (source == "step") {
      pairs = synthetic_step_pairs(0.0, o.step_lo, o.step_hi, o.step_noise_sd, o.step_count,
                                   o.range_lo, o.range_hi, named_seed(seed, "step-pairs"));
    } else {
      throw InvalidArgument("unknown training source '" + source + "'");
    }
    write_pairs_artifact(sink, source, pairs);
    for (const auto& k : o.kernels) {
      GpSsmJob job;
      job.source = source;
      job.kernel_text = k;
      job.spec.pairs = pairs;
      job.spec.kernel = Kernel::parse(k);
      job.spec.gp_noise = o.init_gp_noise;
      job.spec.tau2 = o.init_tau2;
      job.spec.extra_tau2_starts = o.extra_tau2_starts;
      job.spec.sigma2 = o.system.sigma2;
      job.spec.obs = ObservationFunction::quad10();
      job.spec.input = input;
      job.spec.particles = o.fit_particles;
      job.spec.seed = named_seed(seed, "fit");
      job.spec.max_evaluations = o.max_evaluations;
      job.eval_particles = o.particles;
      job.eval_seed = named_seed(seed, "eval");
      job.curve_lo = -25.0;
      job.curve_hi = 25.0;
      rows.push_back(run_gpssm_job(job, sim.y, sim.x, sink));
    }
  }
  nlohmann::json extra = {{"N", o.N},
                          {"system", {{"tau2", o.system.tau2}, {"sigma2", o.system.sigma2}}},
                          {"input", input.to_string()}};
  return finish("nonlinear-smooth", seed, "GP-SSM log-likelihoods on nonlinear data",
                std::move(rows), extra, sink);
}

ExperimentResult run_trend_demo(const TrendDemoOptions& o, std::uint64_t seed,
                                const ArtifactSink& sink) {
  LinearSSM gen = build_trend(2, o.tau2, o.sigma2, 0.0);
  gen.x0 = Eigen::VectorXd::Constant(2, o.level);
  Rng rng(named_seed(seed, "data"));
  const LinearSim sim = simulate_linear(gen, o.N, rng);
  write_series(sink, "data.csv", {"n", "trend", "y"}, {sim.level, sim.y});

  std::vector<ModelRow> rows;
  const int orders[] = {1, 2};
  const bool seasonal[] = {false};
  const auto cands = fit_decomp(sim.y, orders, seasonal, 0);
  for (const auto& c : cands) {
    ModelRow row = decomp_row(c, "Kalman trend m1=" + std::to_string(c.spec.trend_order));
    if (c.ok) row.rmse = rmse(decompose(sim.y, c.spec).trend, sim.level);
    rows.push_back(row);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.model < b.model; });
  if (!cands.front().ok) throw NumericalError("trend-demo: no Kalman trend model could be fitted");
  const Decomposition best = decompose(sim.y, cands.front().spec);
  write_series(sink, "kalman_trend.csv", {"n", "y", "trend", "trend_sd"},
               {sim.y, best.trend, best.trend_sd});

  struct Variant {
    std::string name;
    int d;
    std::string kernel;
  };
  const Variant variants[] = {{"GP-SSM", 1, "linear"},
                              {"2D-GP-SSM", 2, "linear"},
                              {"2D-GP-SSM", 2, "linear+rbf(10)"}};
  for (const auto& v : variants) {
    GpSsmJob job;
    job.model = v.name;
    job.source = std::to_string(v.d) + "-lag kalman-smoothed";
    job.kernel_text = v.kernel;
    job.spec.pairs = pairs_from_states(best.trend, v.d, {}, stride_for(best.trend.size(), v.d, o.max_pairs),
                                       Provenance::KalmanSmoothed);
    job.spec.kernel = Kernel::parse(v.kernel);
    job.spec.gp_noise = 1e-2;
    job.spec.tau2 = std::max(best.spec.tau1, 1e-4);
    job.spec.sigma2 = best.sigma2_hat;
    job.spec.init_mean = best.trend.front();
    job.spec.init_var = best.trend_sd.front() * best.trend_sd.front() + best.sigma2_hat;
    job.spec.particles = o.fit_particles;
    job.spec.seed = named_seed(seed, "fit");
    job.spec.max_evaluations = o.max_evaluations;
    job.eval_particles = o.particles;
    job.eval_seed = named_seed(seed, "eval");
    const double lo = *std::min_element(best.trend.begin(), best.trend.end());
    const double hi = *std::max_element(best.trend.begin(), best.trend.end());
    job.curve_lo = lo - 1.0;
    job.curve_hi = hi + 1.0;
    rows.push_back(run_gpssm_job(job, sim.y, sim.level, sink));
  }
  nlohmann::json extra = {{"N", o.N}, {"tau2", o.tau2}, {"sigma2", o.sigma2}, {"level", o.level}};
  return finish("trend-demo", seed, "Trend models", std::move(rows), extra, sink);
}

ExperimentResult run_seasonal_demo(const SeasonalDemoOptions& o, std::uint64_t seed,
                                   const ArtifactSink& sink) {
  if (o.period < 2) throw InvalidArgument("seasonal-demo: period must be >= 2");
  LinearSSM gen = build_trend(2, o.tau2, o.sigma2, 0.0);
  gen.x0 = Eigen::VectorXd::Constant(2, o.level);
  Rng rng(named_seed(seed, "data"));
  LinearSim sim = simulate_linear(gen, o.N, rng);
  std::vector<double> season(o.N), y(o.N);
  for (int n = 1; n <= o.N; ++n) {
    const double w = 2.0 * std::numbers::pi * n / o.period;
    season[n - 1] = o.amplitude * (std::sin(w) + 0.5 * std::cos(2.0 * w));
    y[n - 1] = sim.y[n - 1] + season[n - 1];
  }
  write_series(sink, "data.csv", {"n", "trend", "seasonal", "y"}, {sim.level, season, y});

  std::vector<ModelRow> rows;
  const int orders[] = {1, 2};
  const bool seasonal[] = {false, true};
  const auto cands = fit_decomp(y, orders, seasonal, o.period);
  const DecompCandidate* best_seasonal = nullptr;
  for (const auto& c : cands) {
    rows.push_back(decomp_row(c, "Decomp " + c.spec.label()));
    if (c.ok && c.spec.seasonal() && !best_seasonal) best_seasonal = &c;
  }
  if (!best_seasonal) throw NumericalError("seasonal-demo: no seasonal Decomp model could be fitted");
  const Decomposition dec = decompose(y, best_seasonal->spec);
  write_series(sink, "decomp_components.csv", {"n", "y", "trend", "seasonal", "residual"},
               {y, dec.trend, dec.seasonal, dec.residual});

  // Additive GP-SSM on the centered series.
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  std::vector<double> yc(y.size()), trend_c(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    yc[i] = y[i] - mean;
    trend_c[i] = dec.trend[i] - mean;
  }
  ModelRow row;
  row.model = "GP-SSM";
  row.training = "decomp-smoothed";
  row.kernel = o.trend_kernel + " | " + o.seasonal_kernel;
  try {
    double svar = 0.0;
    for (double s : dec.seasonal) svar += s * s;
    svar /= static_cast<double>(dec.seasonal.size());
    const auto seasonal_gp = std::make_shared<const GpModel>(
        fit_seasonal_gp(dec.seasonal, o.period, Kernel::parse(o.seasonal_kernel), 1e-2 * svar + 1e-8));
    std::vector<double> s(y.size()), adjusted(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      s[i] = seasonal_gp->predict(seasonal_features(static_cast<int>(i) + 1, o.period)).mean;
      adjusted[i] = yc[i] - s[i];
    }
    GpSsmFitSpec spec;
    spec.pairs = pairs_from_states(trend_c, 2, {}, stride_for(trend_c.size(), 2, o.max_pairs),
                                   Provenance::KalmanSmoothed);
    spec.kernel = Kernel::parse(o.trend_kernel);
    spec.gp_noise = 1e-2;
    spec.tau2 = std::max(dec.spec.tau1, 1e-4);
    spec.sigma2 = dec.sigma2_hat;
    spec.init_mean = trend_c.front();
    spec.init_var = dec.trend_sd.front() * dec.trend_sd.front() + dec.sigma2_hat;
    spec.particles = o.fit_particles;
    spec.seed = named_seed(seed, "fit");
    spec.max_evaluations = o.max_evaluations;
    const GpSsmFit fit = fit_gpssm(spec, adjusted);

    AdditiveGpSsm model;
    model.trend = fit.model;
    model.seasonal = seasonal_gp;
    model.period = o.period;
    PfOptions opt;
    opt.particles = o.particles;
    opt.seed = named_seed(seed, "eval");
    const AdditiveResult res = additive_gpssm_filter(model, yc, opt);
    row.loglik = res.loglik;
    row.aic = aic(res.loglik, static_cast<int>(fit.result.params.size()));
    row.evaluations = fit.result.evaluations;
    for (std::size_t i = 0; i < fit.result.params.size(); ++i)
      row.params.emplace_back(fit.problem.names[i], fit.result.params[i]);
    std::vector<double> trend(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) trend[i] = res.trend[i] + mean;
    row.rmse = rmse(trend, sim.level);
    write_series(sink, "gpssm_components.csv",
                 {"n", "y", "trend", "trend_sd", "trend_diff", "seasonal", "residual"},
                 {y, trend, res.trend_sd, res.trend_diff, res.seasonal, res.residual});
    if (sink.enabled())
      write_text_file(sink.path("gp_seasonal.json"), seasonal_gp->to_json().dump(2) + "\n");
  } catch (const Error& e) {
    row.ok = false;
    row.error = e.what();
  }
  rows.push_back(row);
  nlohmann::json extra = {{"N", o.N}, {"period", o.period}, {"tau2", o.tau2},
                          {"sigma2", o.sigma2}, {"amplitude", o.amplitude}};
  return finish("seasonal-demo", seed, "Seasonal adjustment models", std::move(rows), extra, sink);
}

}  // namespace gpssm
