#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gpssm/benchmarks.hpp"
#include "gpssm/report.hpp"
#include "json.hpp"

namespace gpssm {

/// Where an experiment writes its CSV/JSON/table.md files. An empty
/// directory disables artifacts (used by the tests).
struct ArtifactSink {
  std::filesystem::path dir;
  std::vector<std::string> comments;  // config header of every artifact

  bool enabled() const { return !dir.empty(); }
  std::filesystem::path path(const std::string& name) const { return dir / name; }
};

struct ModelRow {
  std::string model;
  std::string training = "---";
  std::string kernel = "---";
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double aic = std::numeric_limits<double>::quiet_NaN();
  /// Posterior-mean RMSE against the simulated state (NaN when not defined).
  double rmse = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, double>> params;
  int evaluations = 0;
  bool ok = true;
  std::string error;
};

struct ExperimentResult {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<ModelRow> rows;
  Table table;
  nlohmann::json summary;

  const ModelRow& row(const std::string& model, const std::string& training = "---",
                      const std::string& kernel = "---") const;
};

/// Asymmetric rational system: known-model filter at several particle
/// counts, AR and asymmetric AR fits, then GP-SSMs trained on the true
/// states, the AR-smoothed states and the asymmetric-AR-smoothed states.
struct AsymArOptions {
  int N = 1000;
  AsymmetricRational system;
  std::vector<std::size_t> pf_particles = {1000, 10000, 100000};
  std::size_t ar_particles = 10000;
  std::size_t fit_particles = 1000;
  std::size_t eval_particles = 10000;
  std::size_t smooth_particles = 2000;
  int smooth_lag = 10;
  int max_evaluations = 200;
  int max_pairs = 50;
  std::vector<std::string> kernels = {"rbf(1)", "linear+rbf(1)"};
  std::vector<std::string> sources = {"true", "AR", "AS-AR"};
  /// Simulates from this seed instead of the run seed, so several runs can
  /// share one dataset while the filters and fits vary.
  std::optional<std::uint64_t> data_seed;
  bool fit_asymmetric = true;
};

/// Cosine-driven system with quadratic observation: known-model filter and
/// GP-SSMs trained on filtered-median pairs ("true") and on a noisy step
/// function ("step").
struct NonlinearSmoothOptions {
  int N = 100;
  KitagawaSystem system;
  std::size_t particles = 10000;
  std::size_t fit_particles = 500;
  int max_evaluations = 200;
  int true_stride = 2;
  int step_count = 41;
  double step_lo = -10.0;
  double step_hi = 10.0;
  double step_noise_sd = 1.0;
  double range_lo = -20.0;
  double range_hi = 20.0;
  std::vector<std::string> kernels = {"linear+rbf(10)", "linear+exp(10)"};
  std::vector<std::string> sources = {"true", "step"};
  double init_tau2 = 3.0;
  // the likelihood surface is multimodal in tau2; a second start near zero helps
  std::vector<double> extra_tau2_starts = {0.01};
  double init_gp_noise = 1.0;
};

/// Second-order trend data: Kalman trend models of order 1 and 2 against
/// one- and two-dimensional GP-SSM trend models.
struct TrendDemoOptions {
  int N = 200;
  double level = 10.0;
  double tau2 = 0.01;
  double sigma2 = 1.0;
  std::size_t particles = 5000;
  std::size_t fit_particles = 500;
  int max_evaluations = 200;
  int max_pairs = 50;
};

/// Trend plus fixed seasonal pattern: Decomp models against the additive
/// GP-SSM (fixed seasonal GP, lag-2 trend GP-SSM).
struct SeasonalDemoOptions {
  int N = 144;
  int period = 12;
  double level = 10.0;
  double tau2 = 0.005;
  double amplitude = 2.0;
  double sigma2 = 0.25;
  std::size_t particles = 5000;
  std::size_t fit_particles = 500;
  int max_evaluations = 200;
  int max_pairs = 50;
  std::string seasonal_kernel = "rbf(1)";
  std::string trend_kernel = "linear";
};

ExperimentResult run_asym_ar(const AsymArOptions& options, std::uint64_t seed,
                             const ArtifactSink& sink = {});
ExperimentResult run_nonlinear_smooth(const NonlinearSmoothOptions& options, std::uint64_t seed,
                                      const ArtifactSink& sink = {});
ExperimentResult run_trend_demo(const TrendDemoOptions& options, std::uint64_t seed,
                                const ArtifactSink& sink = {});
ExperimentResult run_seasonal_demo(const SeasonalDemoOptions& options, std::uint64_t seed,
                                   const ArtifactSink& sink = {});

/// Root-mean-square difference of two equal-length series.
double rmse(std::span<const double> a, std::span<const double> b);

/// Stride that keeps at most max_pairs of the N - d available pairs.
int stride_for(std::size_t N, int d, int max_pairs);

}  // namespace gpssm
