// Command-line front end: simulate, kalman, decomp, pf, gpssm, fit, experiment.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpssm/benchmarks.hpp"
#include "gpssm/csv.hpp"
#include "gpssm/decomp.hpp"
#include "gpssm/error.hpp"
#include "gpssm/experiments.hpp"
#include "gpssm/gp_ssm.hpp"
#include "gpssm/linear_ssm.hpp"
#include "gpssm/ml_estimation.hpp"
#include "gpssm/particle_filter.hpp"
#include "gpssm/report.hpp"
#include "gpssm/training_data.hpp"

namespace fs = std::filesystem;
using namespace gpssm;

namespace {

// Every artifact starts with the effective command line (all options,
// defaults included, output directory excluded) so it can be regenerated.
std::vector<std::string> config_comments(const CLI::App& sub) {
  std::string cmd = "gpssm " + sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) {
      if (opt->count() > 0)
        for (const auto& r : opt->results()) cmd += " " + r;
      continue;
    }
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "out") continue;
    if (opt->get_type_size() == 0) {
      if (opt->count() > 0) cmd += " --" + name;
      continue;
    }
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    if (value.empty()) continue;
    cmd += " --" + name + " " + value;
  }
  return {"command: " + cmd};
}

nlohmann::json config_json(const std::vector<std::string>& comments) {
  return {{"command", comments.front().substr(std::string("command: ").size())}};
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

fs::path prepare_out(const std::string& dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out))
    throw InvalidArgument("cannot create output directory '" + dir + "'");
  return out;
}

Series load_series(const std::string& path, const std::string& column, bool take_log = false) {
  Series s = read_series(path, column);
  if (take_log) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.missing[i]) continue;
      if (!(s.values[i] > 0.0))
        throw DataError(path + ": --log needs positive values (row " + std::to_string(i + 1) + ")");
      s.values[i] = std::log(s.values[i]);
    }
  }
  return s;
}

void require_complete(const Series& s, const std::string& what) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.missing[i])
      throw DataError(what + ": missing value at row " + std::to_string(i + 1) +
                      " (the particle filter does not support missing data)");
}

// Benchmark system flags shared by simulate, pf and fit.
struct SystemFlags {
  std::string system = "f24";
  std::optional<double> tau2, sigma2;
  double b1 = 1.0, c1_sq = 5.0, b2 = 10.0, c2_sq = 20.0;
  double a = 0.9;
  std::optional<double> a2;

  void add(CLI::App* app, bool required) {
    auto* o = app->add_option("--system", system, "f24 | f25 | ar")
                  ->check(CLI::IsMember({"f24", "f25", "ar"}))
                  ->capture_default_str();
    if (required) o->required();
    app->add_option("--tau2", tau2, "system noise variance (default 1)");
    app->add_option("--sigma2", sigma2, "observation noise variance (default 1; 10 for f25)");
    app->add_option("--b1", b1, "f24 b1")->capture_default_str();
    app->add_option("--c1sq", c1_sq, "f24 c1^2")->capture_default_str();
    app->add_option("--b2", b2, "f24 b2")->capture_default_str();
    app->add_option("--c2sq", c2_sq, "f24 c2^2")->capture_default_str();
    app->add_option("--a", a, "AR coefficient (a1 when --a2 is given)")->capture_default_str();
    app->add_option("--a2", a2, "AR coefficient for x >= 0; makes the AR asymmetric");
  }

  BenchmarkSystem build() const {
    if (system == "f24") {
      AsymmetricRational p;
      p.b1 = b1;
      p.c1_sq = c1_sq;
      p.b2 = b2;
      p.c2_sq = c2_sq;
      if (tau2) p.tau2 = *tau2;
      if (sigma2) p.sigma2 = *sigma2;
      p.validate();
      return p;
    }
    if (system == "f25") {
      KitagawaSystem p;
      if (tau2) p.tau2 = *tau2;
      if (sigma2) p.sigma2 = *sigma2;
      p.validate();
      return p;
    }
    ARBaseline p;
    p.asymmetric = a2.has_value();
    p.a1 = a;
    p.a2 = a2.value_or(a);
    if (tau2) p.tau2 = *tau2;
    if (sigma2) p.sigma2 = *sigma2;
    p.validate();
    return p;
  }
};

// ---- simulate ---------------------------------------------------------------

struct SimulateCmd {
  SystemFlags sys;
  int n = 100;
  std::uint64_t seed = 0;
  std::optional<double> x0;
  std::string out = ".";

  void setup(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("simulate", "simulate a benchmark system");
    sys.add(sub, true);
    sub->add_option("--n", n, "series length")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "root seed")->capture_default_str();
    sub->add_option("--x0", x0, "initial state (default: drawn from N(0,1))");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->callback([this, sub] { run(*sub); });
  }

  void run(const CLI::App& sub) {
    const auto comments = config_comments(sub);
    const fs::path dir = prepare_out(out);
    const Simulation s = simulate(sys.build(), n, seed, x0);
    CsvWriter w(dir / "simulation.csv", comments, {"n", "x", "y"});
    for (int i = 0; i < n; ++i) w.row({static_cast<double>(i + 1), s.x[i], s.y[i]});
    std::cout << "wrote " << (dir / "simulation.csv").string() << " (" << n << " steps)\n";
  }
};

// ---- kalman -----------------------------------------------------------------

struct KalmanCmd {
  std::string data, column;
  std::string model = "trend";
  int trend_order = 1;
  double tau2 = 1.0, sigma2 = 1.0, a = 0.9;
  bool fit = false;
  std::string out = ".";

  void setup(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("kalman", "Kalman filter and smoother for a linear model");
    sub->add_option("--data", data, "input CSV")->required();
    sub->add_option("--column", column, "column name");
    sub->add_option("--model", model, "trend | ar")
        ->check(CLI::IsMember({"trend", "ar"}))
        ->capture_default_str();
    sub->add_option("--trend-order", trend_order, "1 or 2")->check(CLI::Range(1, 2))->capture_default_str();
    sub->add_option("--tau2", tau2, "system noise variance")->capture_default_str();
    sub->add_option("--sigma2", sigma2, "observation noise variance")->capture_default_str();
    sub->add_option("--a", a, "AR coefficient")->capture_default_str();
    sub->add_flag("--fit", fit, "maximum-likelihood estimate of the variances (and a)");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->callback([this, sub] { run(*sub); });
  }

  LinearSSM build(std::span<const double> p) const {
    if (model == "ar") return ar_linear_model(ARBaseline{false, p[2], p[2], p[0], p[1]});
    return build_trend(trend_order, p[0], p[1]);
  }

  void run(const CLI::App& sub) {
    const auto comments = config_comments(sub);
    const fs::path dir = prepare_out(out);
    const Series y = load_series(data, column);
    std::vector<double> params = {tau2, sigma2};
    if (model == "ar") params.push_back(a);
    nlohmann::json doc = {{"config", config_json(comments)}, {"model", model}};
    if (fit) {
      OptProblem p;
      p.names = {"tau2", "sigma2"};
      p.transforms = {ParamTransform::Log, ParamTransform::Log};
      p.initial = params;
      if (model == "ar") {
        p.names.push_back("a");
        p.transforms.push_back(ParamTransform::Identity);
      }
      p.objective = [&](std::span<const double> v) {
        return kalman_filter(build(v), y.values, y.missing).loglik;
      };
      const OptResult r = nelder_mead_max(p);
      params = r.params;
      doc["fit"] = fit_result_json(p, r);
    }
    const LinearSSM m = build(params);
    const FilterOutput f = kalman_filter(m, y.values, y.missing);
    const SmootherOutput s = kalman_smoother(m, f);
    write_kalman_csv(dir / "kalman.csv", comments, y.values, f, s);
    const int k = static_cast<int>(params.size());
    doc["loglik"] = f.loglik;
    doc["aic"] = aic(f.loglik, k);
    doc["observed"] = f.observed;
    doc["used_pseudo_inverse"] = s.used_pseudo_inverse;
    doc["parameters"] = {{"tau2", params[0]}, {"sigma2", params[1]}};
    if (model == "ar") doc["parameters"]["a"] = params[2];
    else doc["parameters"]["trend_order"] = trend_order;
    write_json(dir / "kalman.json", doc);
    std::cout << "loglik " << format_number(f.loglik) << "\n";
  }
};

// ---- decomp -----------------------------------------------------------------

struct DecompCmd {
  std::string data, column;
  int period = 0;
  int trend_order = 2;
  bool compare = false;
  bool take_log = false;
  int max_evals = 400;
  std::string out = ".";

  void setup(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("decomp", "trend / seasonal decomposition");
    sub->add_option("--data", data, "input CSV (one column, optional date column)")->required();
    sub->add_option("--column", column, "column name");
    sub->add_option("--period", period, "seasonal period (0: trend only)")->capture_default_str();
    sub->add_option("--trend-order", trend_order, "1 or 2")->check(CLI::Range(1, 2))->capture_default_str();
    sub->add_flag("--compare", compare, "fit trend orders 1 and 2 with and without season; keep the AIC best");
    sub->add_flag("--log", take_log, "take natural logarithms first");
    sub->add_option("--max-evals", max_evals, "optimizer budget")->capture_default_str();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->callback([this, sub] { run(*sub); });
  }

  void run(const CLI::App& sub) {
    const auto comments = config_comments(sub);
    const fs::path dir = prepare_out(out);
    if (period == 1 || period < 0) throw InvalidArgument("--period must be 0 or >= 2");
    const Series y = load_series(data, column, take_log);
    std::vector<int> orders = {trend_order};
    std::vector<char> seas = {period > 0};
    if (compare) {
      orders = {1, 2};
      seas = period > 0 ? std::vector<char>{0, 1} : std::vector<char>{0};
    }
    bool seas_b[2];
    for (std::size_t i = 0; i < seas.size(); ++i) seas_b[i] = seas[i] != 0;
    DecompFitOptions fo;
    fo.max_evaluations = max_evals;
    const auto cands = fit_decomp(y.values, orders, std::span<const bool>(seas_b, seas.size()),
                                  period, y.missing, fo);
    if (!cands.front().ok) throw NumericalError("decomp: " + cands.front().error);
    const Decomposition d = decompose(y.values, cands.front().spec, y.missing);
    CsvWriter w(dir / "components.csv", comments,
                {"n", "y", "trend", "trend_sd", "seasonal", "seasonal_sd", "residual"});
    for (std::size_t i = 0; i < y.size(); ++i)
      w.row({static_cast<double>(i + 1), y.missing[i] ? std::nan("") : y.values[i], d.trend[i],
             d.trend_sd[i], d.seasonal[i], d.seasonal_sd[i], d.residual[i]});
    nlohmann::json cj = nlohmann::json::array();
    for (const auto& c : cands) {
      cj.push_back({{"model", c.spec.label()},
                    {"ok", c.ok},
                    {"error", c.error},
                    {"loglik", c.loglik},
                    {"aic", c.aic},
                    {"tau1", c.spec.tau1},
                    {"tau2", c.spec.tau2},
                    {"sigma2", c.spec.sigma2},
                    {"evaluations", c.evaluations}});
    }
    write_json(dir / "decomp.json", {{"config", config_json(comments)},
                                     {"model", d.spec.label()},
                                     {"loglik", d.loglik},
                                     {"aic", d.aic},
                                     {"sigma2", d.sigma2_hat},
                                     {"tau1", d.spec.tau1},
                                     {"tau2", d.spec.tau2},
                                     {"candidates", cj}});
    std::cout << d.spec.label() << ": loglik " << format_number(d.loglik) << ", AIC "
              << format_number(d.aic) << "\n";
  }
};

// ---- pf ---------------------------------------------------------------------

struct PfCmd {
  std::string data, column;
  SystemFlags sys;
  std::size_t particles = 1000;
  std::uint64_t seed = 0;
  std::string resampling = "multinomial";
  double ess_threshold = 0.0;
  int lag = 0;
  std::string out = ".";

  void setup(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("pf", "bootstrap particle filter for a benchmark system");
    sub->add_option("--data", data, "input CSV")->required();
    sub->add_option("--column", column, "column name");
    sys.add(sub, true);
    sub->add_option("--particles", particles, "particle count")->capture_default_str();
    sub->add_option("--seed", seed, "root seed")->capture_default_str();
    sub->add_option("--resampling", resampling, "multinomial | systematic")
        ->check(CLI::IsMember({"multinomial", "systematic"}))
        ->capture_default_str();
    sub->add_option("--ess-threshold", ess_threshold, "resample when ESS < threshold * m (0: always)")
        ->capture_default_str();
    sub->add_option("--lag", lag, "fixed-lag smoother lag (0: off)")->capture_default_str();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->callback([this, sub] { run(*sub); });
  }

  void run(const CLI::App& sub) {
    const auto comments = config_comments(sub);
    const fs::path dir = prepare_out(out);
    const Series y = load_series(data, column);
    require_complete(y, data);
    PfOptions opt;
    opt.particles = particles;
    opt.seed = seed;
    opt.resampling = resampling == "systematic" ? Resampling::Systematic : Resampling::Multinomial;
    opt.ess_threshold = ess_threshold;
    opt.store_history = lag > 0;
    const PfResult run = pf_run(SystemModel(sys.build()), y.values, opt);
    write_pf_csv(dir / "pf.csv", comments, run);
    nlohmann::json doc = pf_summary_json(run);
    doc["config"] = config_json(comments);
    doc["system"] = sys.system;
    if (lag > 0) {
      const SmoothedTrack t = fixed_lag_smooth(run, lag);
      CsvWriter w(dir / "smoothed.csv", comments, {"step", "mean", "median", "ancestor_diversity"});
      for (std::size_t i = 0; i < t.mean.size(); ++i)
        w.row({static_cast<double>(i + 1), t.mean[i], t.median[i], t.ancestor_diversity[i]});
      doc["smoother"] = {{"lag", lag}, {"min_ancestor_diversity", t.min_diversity}};
    }
    write_json(dir / "pf.json", doc);
    std::cout << "loglik " << format_number(run.loglik) << " (se " << format_number(run.loglik_se)
              << ")\n";
  }
};

// ---- gpssm ------------------------------------------------------------------

struct GpssmCmd {
  std::string data, column, train_pairs;
  std::string kernel = "rbf(1)";
  double gp_noise = 0.1, tau2 = 1.0, sigma2 = 1.0;
  std::size_t particles = 1000;
  std::uint64_t seed = 0;
  std::string input = "none";
  std::string input_file;
  std::string obs = "identity";
  double init_mean = 0.0, init_var = 1.0;
  bool fit = false;
  std::size_t fit_particles = 500;
  int max_evals = 200;
  std::vector<double> tau2_starts;
  std::string out = ".";

  void setup(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("gpssm", "particle filter with a GP transition");
    sub->add_option("--data", data, "input CSV")->required();
    sub->add_option("--column", column, "column name");
    sub->add_option("--train-pairs", train_pairs, "pairs CSV (x1,...,xd,target)")->required();
    sub->add_option("--kernel", kernel, "kernel expression")->capture_default_str();
    sub->add_option("--gp-noise", gp_noise, "GP noise variance")->capture_default_str();
    sub->add_option("--tau2", tau2, "process noise variance")->capture_default_str();
    sub->add_option("--sigma2", sigma2, "observation noise variance")->capture_default_str();
    sub->add_option("--particles", particles, "particle count")->capture_default_str();
    sub->add_option("--seed", seed, "root seed")->capture_default_str();
    auto* in = sub->add_option("--input", input, "none | cos:amp=A,freq=W")->capture_default_str();
    auto* inf = sub->add_option("--input-file", input_file, "input series u_1..u_N (CSV)");
    inf->excludes(in);
    sub->add_option("--obs", obs, "identity | quad10")
        ->check(CLI::IsMember({"identity", "quad10"}))
        ->capture_default_str();
    sub->add_option("--init-mean", init_mean, "prior mean of x_0")->capture_default_str();
    sub->add_option("--init-var", init_var, "prior variance of x_0")->capture_default_str();
    sub->add_flag("--fit", fit, "maximum-likelihood fit of tau2, sigma2, kernel and GP noise");
    sub->add_option("--fit-particles", fit_particles, "particles per likelihood evaluation while fitting")
        ->capture_default_str();
    sub->add_option("--max-evals", max_evals, "optimizer budget per start")->capture_default_str();
    sub->add_option("--tau2-starts", tau2_starts, "extra tau2 starting values for --fit")
        ->delimiter(',');
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->callback([this, sub] { run(*sub); });
  }

  void run(const CLI::App& sub) {
    const auto comments = config_comments(sub);
    const fs::path dir = prepare_out(out);
    const Series y = load_series(data, column);
    require_complete(y, data);
    GpSsmFitSpec spec;
    spec.extra_tau2_starts = tau2_starts;
    spec.pairs = read_pairs(train_pairs);
    spec.kernel = Kernel::parse(kernel);
    spec.gp_noise = gp_noise;
    spec.tau2 = tau2;
    spec.sigma2 = sigma2;
    spec.obs = ObservationFunction::parse(obs);
    if (!input_file.empty()) {
      const Series u = load_series(input_file, "");
      require_complete(u, input_file);
      spec.input = ExogenousInput::table(u.values);
    } else {
      spec.input = ExogenousInput::parse(input);
    }
    spec.init_mean = init_mean;
    spec.init_var = init_var;
    spec.particles = fit_particles;
    spec.seed = seed;
    spec.max_evaluations = max_evals;

    nlohmann::json doc;
    GpSsm model;
    if (fit) {
      const GpSsmFit f = fit_gpssm(spec, y.values);
      model = f.model;
      doc["fit"] = fit_result_json(f.problem, f.result);
      doc["fit"]["particles"] = fit_particles;
      doc["fit"]["seed"] = seed;
      doc["fit"]["aic"] = aic(f.result.value, static_cast<int>(f.result.params.size()));
    } else {
      std::vector<double> p = {tau2, sigma2};
      for (double v : spec.kernel.params()) p.push_back(v);
      p.push_back(gp_noise);
      model = gpssm_from_params(spec, p);
    }
    PfOptions opt;
    opt.particles = particles;
    opt.seed = seed;
    const PfResult run = gpssm_filter(model, y.values, opt);
    write_pf_csv(dir / "gpssm.csv", comments, run);
    write_json(dir / "gp.json", model.gp->to_json());
    nlohmann::json summary = pf_summary_json(run);
    for (auto& [k, v] : summary.items()) doc[k] = v;
    doc["config"] = config_json(comments);
    doc["model"] = {{"tau2", model.tau2},
                    {"sigma2", model.sigma2},
                    {"kernel", model.gp->kernel().to_string()},
                    {"gp_noise", model.gp->noise_variance()},
                    {"lag", model.lag()},
                    {"observation", model.obs.name()},
                    {"input", model.input.to_string()}};
    write_json(dir / "gpssm.json", doc);
    std::cout << "loglik " << format_number(run.loglik) << "\n";
  }
};

// ---- fit --------------------------------------------------------------------

struct FitCmd {
  std::string data, column;
  std::string model = "ar";
  int trend_order = 1;
  std::size_t particles = 1000;
  std::uint64_t seed = 0;
  int max_evals = 400;
  std::string profile;
  std::string grid;
  SystemFlags sys;
  std::string out = ".";

  void setup(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("fit", "maximum-likelihood fit of a model's parameters");
    sub->add_option("--data", data, "input CSV")->required();
    sub->add_option("--column", column, "column name");
    sub->add_option("--model", model, "ar | asym-ar | trend | f24 | f25")
        ->check(CLI::IsMember({"ar", "asym-ar", "trend", "f24", "f25"}))
        ->capture_default_str();
    sub->add_option("--trend-order", trend_order, "1 or 2")->check(CLI::Range(1, 2))->capture_default_str();
    sub->add_option("--particles", particles, "particles for filter-based likelihoods")->capture_default_str();
    sub->add_option("--seed", seed, "seed held fixed across evaluations")->capture_default_str();
    sub->add_option("--max-evals", max_evals, "optimizer budget")->capture_default_str();
    sub->add_option("--profile", profile, "parameter name to profile after fitting");
    sub->add_option("--grid", grid, "profile grid lo:hi:count (natural scale)");
    sub->add_option("--b1", sys.b1, "f24 b1")->capture_default_str();
    sub->add_option("--c1sq", sys.c1_sq, "f24 c1^2")->capture_default_str();
    sub->add_option("--b2", sys.b2, "f24 b2")->capture_default_str();
    sub->add_option("--c2sq", sys.c2_sq, "f24 c2^2")->capture_default_str();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->callback([this, sub] { run(*sub); });
  }

  static std::vector<double> parse_grid(const std::string& text) {
    const auto a = text.find(':');
    const auto b = text.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos)
      throw InvalidArgument("--grid must look like lo:hi:count");
    try {
      const double lo = std::stod(text.substr(0, a));
      const double hi = std::stod(text.substr(a + 1, b - a - 1));
      const int count = std::stoi(text.substr(b + 1));
      if (count < 1) throw InvalidArgument("--grid count must be >= 1");
      std::vector<double> g(count);
      for (int i = 0; i < count; ++i) g[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
      return g;
    } catch (const std::logic_error&) {
      throw InvalidArgument("--grid must look like lo:hi:count");
    }
  }

  void run(const CLI::App& sub) {
    const auto comments = config_comments(sub);
    const fs::path dir = prepare_out(out);
    if (!profile.empty() && grid.empty()) throw InvalidArgument("--profile needs --grid");
    const Series y = load_series(data, column);
    OptProblem p;
    p.max_evaluations = max_evals;
    PfOptions pf;
    pf.particles = particles;
    pf.seed = seed;
    pf.summaries = false;
    auto pf_loglik = [pf, &y](const NonlinearModel& m) {
      try {
        return pf_run(m, y.values, pf).loglik;
      } catch (const ParticleCollapse&) {
        return -std::numeric_limits<double>::infinity();
      }
    };

    if (model == "ar" || model == "asym-ar") {
      if (model == "asym-ar") require_complete(y, data);
      if (y.has_missing()) throw DataError(data + ": AR fits do not support missing values");
      ArFitOptions ao;
      ao.particles = particles;
      ao.seed = seed;
      ao.max_evaluations = max_evals;
      const ArFit f = ar_baseline_fit(y.values, model == "asym-ar", ao);
      nlohmann::json params = {{"tau2", f.model.tau2}, {"sigma2", f.model.sigma2}};
      if (f.model.asymmetric) {
        params["a1"] = f.model.a1;
        params["a2"] = f.model.a2;
      } else {
        params["a"] = f.model.a1;
      }
      write_json(dir / "fit.json", {{"config", config_json(comments)},
                                    {"model", model},
                                    {"parameters", params},
                                    {"loglik", f.loglik},
                                    {"aic", f.aic},
                                    {"evaluations", f.evaluations},
                                    {"converged", f.converged},
                                    {"seed", seed}});
      std::cout << "loglik " << format_number(f.loglik) << "\n";
      if (!profile.empty()) throw InvalidArgument("--profile is not available for AR fits");
      return;
    }

    if (model == "trend") {
      p.names = {"tau2", "sigma2"};
      p.transforms = {ParamTransform::Log, ParamTransform::Log};
      double var = 0.0, mean = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (!y.missing[i]) {
          mean += y.values[i];
          ++count;
        }
      mean /= std::max(1, count);
      for (std::size_t i = 0; i < y.size(); ++i)
        if (!y.missing[i]) var += (y.values[i] - mean) * (y.values[i] - mean);
      var = std::max(var / std::max(1, count), 1e-6);
      p.initial = {0.1 * var, 0.5 * var};
      const int order = trend_order;
      p.objective = [&y, order](std::span<const double> v) {
        return kalman_filter(build_trend(order, v[0], v[1]), y.values, y.missing).loglik;
      };
    } else {
      require_complete(y, data);
      p.names = {"tau2", "sigma2"};
      p.transforms = {ParamTransform::Log, ParamTransform::Log};
      p.initial = {1.0, model == "f25" ? 10.0 : 1.0};
      p.tolerance = 1e-3;
      p.x_tolerance = 1e-3;
      const bool f25 = model == "f25";
      const SystemFlags base = sys;
      p.objective = [&, f25, base](std::span<const double> v) {
        SystemFlags s = base;
        s.system = f25 ? "f25" : "f24";
        s.tau2 = v[0];
        s.sigma2 = v[1];
        return pf_loglik(SystemModel(s.build()));
      };
    }
    const OptResult r = nelder_mead_max(p);
    nlohmann::json doc = fit_result_json(p, r);
    doc["config"] = config_json(comments);
    doc["model"] = model;
    doc["aic"] = aic(r.value, static_cast<int>(r.params.size()));
    doc["seed"] = seed;
    write_json(dir / "fit.json", doc);
    if (!profile.empty()) {
      const auto it = std::find(p.names.begin(), p.names.end(), profile);
      if (it == p.names.end()) throw InvalidArgument("unknown parameter '" + profile + "'");
      const std::size_t idx = static_cast<std::size_t>(it - p.names.begin());
      const auto g = parse_grid(grid);
      const auto prof = profile_grid(p, r.params, idx, g);
      CsvWriter w(dir / "profile.csv", comments, {profile, "loglik"});
      for (const auto& pt : prof) w.row({pt.value, pt.loglik});
    }
    std::cout << "loglik " << format_number(r.value) << "\n";
  }
};

// ---- experiment -------------------------------------------------------------

struct ExperimentCmd {
  std::string name;
  std::uint64_t seed = 1;
  std::optional<int> n;
  std::optional<std::size_t> particles, fit_particles;
  std::optional<int> max_evals;
  std::optional<std::uint64_t> data_seed;
  std::string out = ".";

  void setup(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("experiment", "run a full experiment recipe");
    sub->add_option("name", name, "asym-ar | nonlinear-smooth | trend-demo | seasonal-demo")
        ->required()
        ->check(CLI::IsMember({"asym-ar", "nonlinear-smooth", "trend-demo", "seasonal-demo"}));
    sub->add_option("--seed", seed, "root seed")->capture_default_str();
    sub->add_option("--n", n, "series length (recipe default when omitted)");
    sub->add_option("--particles", particles, "particles for reported likelihoods");
    sub->add_option("--fit-particles", fit_particles, "particles per likelihood evaluation while fitting");
    sub->add_option("--max-evals", max_evals, "optimizer budget per fit");
    sub->add_option("--data-seed", data_seed, "asym-ar: simulate from this seed instead of --seed");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->callback([this, sub] { run(*sub); });
  }

  void run(const CLI::App& sub) {
    ArtifactSink sink;
    sink.comments = config_comments(sub);
    sink.dir = prepare_out(out);
    ExperimentResult r;
    if (name == "asym-ar") {
      AsymArOptions o;
      if (n) o.N = *n;
      if (particles) {
        o.eval_particles = *particles;
        o.ar_particles = *particles;
      }
      if (fit_particles) o.fit_particles = *fit_particles;
      if (max_evals) o.max_evaluations = *max_evals;
      o.data_seed = data_seed;
      r = run_asym_ar(o, seed, sink);
    } else if (name == "nonlinear-smooth") {
      NonlinearSmoothOptions o;
      if (n) o.N = *n;
      if (particles) o.particles = *particles;
      if (fit_particles) o.fit_particles = *fit_particles;
      if (max_evals) o.max_evaluations = *max_evals;
      r = run_nonlinear_smooth(o, seed, sink);
    } else if (name == "trend-demo") {
      TrendDemoOptions o;
      if (n) o.N = *n;
      if (particles) o.particles = *particles;
      if (fit_particles) o.fit_particles = *fit_particles;
      if (max_evals) o.max_evaluations = *max_evals;
      r = run_trend_demo(o, seed, sink);
    } else {
      SeasonalDemoOptions o;
      if (n) o.N = *n;
      if (particles) o.particles = *particles;
      if (fit_particles) o.fit_particles = *fit_particles;
      if (max_evals) o.max_evaluations = *max_evals;
      r = run_seasonal_demo(o, seed, sink);
    }
    std::cout << r.table.markdown();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-process state-space models, particle filters and Kalman decomposition"};
  app.require_subcommand(1);
  SimulateCmd simulate_cmd;
  KalmanCmd kalman_cmd;
  DecompCmd decomp_cmd;
  PfCmd pf_cmd;
  GpssmCmd gpssm_cmd;
  FitCmd fit_cmd;
  ExperimentCmd experiment_cmd;
  simulate_cmd.setup(app);
  kalman_cmd.setup(app);
  decomp_cmd.setup(app);
  pf_cmd.setup(app);
  gpssm_cmd.setup(app);
  fit_cmd.setup(app);
  experiment_cmd.setup(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
