#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gpssm/decomp.hpp"
#include "gpssm/error.hpp"
#include "gpssm/particle_filter.hpp"
#include "oracles.hpp"

using namespace gpssm;

namespace {

// Two fixed particles (0 and 1) that never move; unnormalized observation
// weights 0.2 and 0.4.
class TwoPoint : public NonlinearModel {
 public:
  std::size_t state_dim() const override { return 1; }
  void sample_initial(std::span<double> s, Rng&) const override { s[0] = 0; }
  void sample_transition(std::span<double>, int, Rng&) const override {}
  double log_observation(std::span<const double> s, double, int) const override {
    return s[0] == 0.0 ? std::log(0.2) : std::log(0.4);
  }
  void initialize(ParticleCloud& c, const RandomStreams&) const override {
    for (std::size_t i = 0; i < c.size(); ++i) c[i][0] = static_cast<double>(i % 2);
  }
};

// Random walk whose observation density ignores the state.
class Flat : public NonlinearModel {
 public:
  double level = -3.0;
  std::size_t state_dim() const override { return 1; }
  void sample_initial(std::span<double> s, Rng& r) const override { s[0] = r.normal(); }
  void sample_transition(std::span<double> s, int, Rng& r) const override { s[0] += r.normal(); }
  double log_observation(std::span<const double>, double y, int) const override {
    return level - 0.5 * y * y;
  }
};

class Impossible : public Flat {
 public:
  int bad_step = 3;
  double log_observation(std::span<const double> s, double y, int step) const override {
    return step == bad_step ? -std::numeric_limits<double>::infinity()
                            : Flat::log_observation(s, y, step);
  }
};

LinearSSM walk(double tau2, double sigma2) {
  LinearSSM m = build_trend(1, tau2, sigma2);
  m.V0(0, 0) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("log-likelihood closed form, N=1, m=2") {
  PfOptions o;
  o.particles = 2;
  const double y[] = {0.0};
  const PfResult r = pf_run(TwoPoint(), y, o);
  CHECK(r.loglik == doctest::Approx(std::log(0.3)).epsilon(1e-15));
  CHECK(std::abs(r.loglik - std::log(0.3)) <= 1e-15);
  CHECK(log_mean_exp(std::vector<double>{std::log(0.2), std::log(0.4)}) ==
        doctest::Approx(std::log(0.3)));
}

TEST_CASE("state-independent observation density") {
  Flat model;
  PfOptions o;
  o.particles = 100;
  o.seed = 5;
  const std::vector<double> y = {0.5, -1.0, 2.0, 0.0};
  const PfResult r = pf_run(model, y, o);
  double expect = 0;
  for (double v : y) expect += model.level - 0.5 * v * v;
  CHECK(r.loglik == doctest::Approx(expect).epsilon(1e-13));
  for (const auto& s : r.steps) CHECK(s.ess == doctest::Approx(100.0));
  CHECK(r.loglik_se <= 1e-12);
}

TEST_CASE("very small log-densities do not underflow") {
  Flat model;
  model.level = -700.0;
  PfOptions o;
  o.particles = 50;
  const std::vector<double> y = {0.0, 0.0};
  const PfResult r = pf_run(model, y, o);
  CHECK(r.loglik == doctest::Approx(-1400.0));
}

TEST_CASE("errors: collapse, bad observations, too few particles") {
  Impossible model;
  PfOptions o;
  o.particles = 20;
  const std::vector<double> y = {0.0, 0.0, 0.0, 0.0};
  try {
    pf_run(model, y, o);
    FAIL("expected collapse");
  } catch (const ParticleCollapse& e) {
    CHECK(e.step() == 3);
    CHECK(std::string(e.what()).find("step 3") != std::string::npos);
  }
  const std::vector<double> bad = {0.0, std::nan("")};
  CHECK_THROWS_AS(pf_run(Flat(), bad, o), DataError);
  o.particles = 1;
  CHECK_THROWS_AS(pf_run(Flat(), y, o), InvalidArgument);
}

TEST_CASE("determinism") {
  Rng rng(61);
  const LinearSSM m = walk(0.5, 1.0);
  const std::vector<double> y = oracle::simulate_linear(m, 30, rng);
  PfOptions o;
  o.particles = 500;
  o.seed = 9;
  o.store_history = true;
  const PfResult a = pf_run(LinearGaussianModel(m), y, o);
  const PfResult b = pf_run(LinearGaussianModel(m), y, o);
  CHECK(a.loglik == b.loglik);
  CHECK(a.final_cloud.packed().size() == b.final_cloud.packed().size());
  CHECK(std::equal(a.final_cloud.packed().begin(), a.final_cloud.packed().end(),
                   b.final_cloud.packed().begin()));
  for (std::size_t n = 0; n < a.steps.size(); ++n) {
    CHECK(a.steps[n].mean == b.steps[n].mean);
    CHECK(a.steps[n].q50 == b.steps[n].q50);
  }
  o.seed = 10;
  CHECK(pf_run(LinearGaussianModel(m), y, o).loglik != a.loglik);
}

TEST_CASE("Kalman agreement on a linear model") {
  Rng rng(62);
  const LinearSSM m = walk(0.3, 1.0);
  int within = 0;
  for (int s = 0; s < 5; ++s) {
    const std::vector<double> y = oracle::simulate_linear(m, 50, rng);
    PfOptions o;
    o.particles = 20000;
    o.seed = 100 + s;
    o.summaries = false;
    const PfResult r = pf_run(LinearGaussianModel(m), y, o);
    const double kf = kalman_filter(m, y).loglik;
    within += std::abs(r.loglik - kf) <= 3 * r.loglik_se;
  }
  CHECK(within >= 4);
}

TEST_CASE("summaries are consistent") {
  Rng rng(63);
  const LinearSSM m = walk(0.3, 1.0);
  const std::vector<double> y = oracle::simulate_linear(m, 20, rng);
  PfOptions o;
  o.particles = 5000;
  o.seed = 3;
  const PfResult r = pf_run(LinearGaussianModel(m), y, o);
  const FilterOutput kf = kalman_filter(m, y);
  REQUIRE(r.steps.size() == 20);
  for (std::size_t n = 0; n < 20; ++n) {
    const auto& s = r.steps[n];
    CHECK(s.q025 <= s.q25);
    CHECK(s.q25 <= s.q50);
    CHECK(s.q50 <= s.q75);
    CHECK(s.q75 <= s.q975);
    CHECK(s.ess <= 5000.0 + 1e-9);
    CHECK(s.ess >= 1.0);
    const double sd = std::sqrt(kf.filtered_cov[n](0, 0));
    CHECK(std::abs(s.mean - kf.filtered_mean[n](0)) <= 0.1 * sd + 0.05);
    CHECK(s.sd == doctest::Approx(sd).epsilon(0.1));
  }
}

TEST_CASE("resampling") {
  Rng rng(64);
  std::vector<double> w(10, 0.0);
  w[7] = 1.0;
  for (Resampling s : {Resampling::Multinomial, Resampling::Systematic}) {
    const auto a = resample(w, s, rng);
    CHECK(a.size() == 10);
    for (auto i : a) CHECK(i == 7);
  }
  // uniform weights, m = 1e5: counts are ~Poisson(1)
  const std::size_t m = 100000;
  std::vector<double> u(m, 1.0 / m);
  const auto a = resample(u, Resampling::Multinomial, rng);
  std::vector<int> counts(m, 0);
  for (auto i : a) ++counts[i];
  int zeros = 0, big = 0;
  for (int c : counts) {
    zeros += c == 0;
    big += c >= 5;
  }
  // P(0) = e^-1 (sd of the count ~150); P(>=5) ~ 3.66e-3 (sd ~19)
  CHECK(std::abs(zeros - m * std::exp(-1.0)) < 750);
  CHECK(big >= 270);
  CHECK(big <= 460);
  // Systematic with uniform weights keeps every particle exactly once.
  const auto sys = resample(u, Resampling::Systematic, rng);
  std::vector<int> sc(m, 0);
  for (auto i : sys) ++sc[i];
  CHECK(std::all_of(sc.begin(), sc.end(), [](int c) { return c == 1; }));

  std::vector<double> zero(5, 0.0);
  CHECK_THROWS(resample(zero, Resampling::Multinomial, rng));
}

TEST_CASE("both schemes preserve the weighted mean") {
  Rng rng(65);
  const std::size_t m = 20000;
  std::vector<double> x(m), w(m);
  double sw = 0;
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = rng.normal();
    w[i] = std::exp(x[i]);
    sw += w[i];
  }
  double target = 0, var = 0;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] /= sw;
    target += w[i] * x[i];
  }
  for (std::size_t i = 0; i < m; ++i) var += w[i] * (x[i] - target) * (x[i] - target);
  const double se = std::sqrt(var / m);
  for (Resampling s : {Resampling::Multinomial, Resampling::Systematic}) {
    Rng r(66);
    const auto a = resample(w, s, r);
    double mean = 0;
    for (auto i : a) mean += x[i] / m;
    CHECK(std::abs(mean - target) <= 3 * se);
  }
}

TEST_CASE("quantile is type 7") {
  std::vector<double> v = {4, 1, 3, 2};
  CHECK(quantile(v, 0.5) == 2.5);
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  std::vector<double> e;
  CHECK_THROWS(quantile(e, 0.5));
}

TEST_CASE("ESS threshold skips resampling and still matches Kalman") {
  Rng rng(67);
  const LinearSSM m = walk(0.3, 2.0);
  const std::vector<double> y = oracle::simulate_linear(m, 40, rng);
  PfOptions o;
  o.particles = 20000;
  o.seed = 8;
  o.ess_threshold = 0.5;
  o.resampling = Resampling::Systematic;
  const PfResult r = pf_run(LinearGaussianModel(m), y, o);
  int skipped = 0;
  for (const auto& s : r.steps) skipped += !s.resampled;
  CHECK(skipped > 0);
  CHECK(std::abs(r.loglik - kalman_filter(m, y).loglik) <= 4 * r.loglik_se + 0.05);
}

TEST_CASE("fixed-lag smoothing") {
  Rng rng(68);
  const LinearSSM m = walk(0.3, 1.0);
  const std::vector<double> y = oracle::simulate_linear(m, 60, rng);
  PfOptions o;
  o.particles = 20000;
  o.seed = 4;
  o.store_history = true;
  const PfResult r = pf_run(LinearGaussianModel(m), y, o);

  const SmoothedTrack s0 = fixed_lag_smooth(r, 0);
  for (std::size_t n = 0; n < 60; ++n) {
    CHECK(s0.mean[n] == doctest::Approx(r.steps[n].mean).epsilon(1e-12));
    CHECK(s0.median[n] == r.steps[n].q50);
  }

  const SmoothedTrack s = fixed_lag_smooth(r, 20);
  const FilterOutput kf = kalman_filter(m, y);
  const SmootherOutput ks = kalman_smoother(m, kf);
  int within = 0;
  for (std::size_t n = 0; n < 60; ++n) {
    const double sd = std::sqrt(ks.cov[n](0, 0));
    const double eff = std::max(1.0, s.ancestor_diversity[n] * 20000.0);
    within += std::abs(s.mean[n] - ks.mean[n](0)) <= 3 * sd / std::sqrt(eff) + 0.1 * sd;
    CHECK(s.ancestor_diversity[n] > 0.0);
    CHECK(s.ancestor_diversity[n] <= 1.0);
  }
  CHECK(within >= 54);

  CHECK_THROWS_AS(fixed_lag_smooth(r, 60), InvalidArgument);
  CHECK_THROWS_AS(fixed_lag_smooth(r, -1), InvalidArgument);
  PfOptions no_hist = o;
  no_hist.store_history = false;
  CHECK_THROWS_AS(fixed_lag_smooth(pf_run(LinearGaussianModel(m), y, no_hist), 2),
                  InvalidArgument);
}

TEST_CASE("degenerate ancestry is reported, not an error") {
  Rng rng(69);
  const LinearSSM m = walk(1.0, 0.01);  // sharp likelihood, heavy resampling
  const std::vector<double> y = oracle::simulate_linear(m, 50, rng);
  PfOptions o;
  o.particles = 200;
  o.seed = 1;
  o.store_history = true;
  const PfResult r = pf_run(LinearGaussianModel(m), y, o);
  const SmoothedTrack s = fixed_lag_smooth(r, 49);
  CHECK(s.min_diversity < 0.05);
  for (double v : s.mean) CHECK(std::isfinite(v));
  const auto paths = sample_trajectories(r, 5, 2);
  CHECK(paths.size() == 5);
  CHECK(paths[0].size() == 50);
}

TEST_CASE("summary json and csv rows") {
  PfOptions o;
  o.particles = 50;
  o.seed = 77;
  const std::vector<double> y = {0.1, 0.2};
  const PfResult r = pf_run(Flat(), y, o);
  const nlohmann::json j = pf_summary_json(r);
  CHECK(j.at("loglik").get<double>() == r.loglik);
  CHECK(j.at("particles") == 50);
  CHECK(j.at("seed") == 77);
  CHECK(j.at("collapse").at("collapsed") == false);
  CHECK(pf_csv_header().size() == pf_csv_row(1, r.steps[0]).size());
}
