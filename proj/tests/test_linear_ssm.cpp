#include <cmath>

#include "doctest.h"
#include "gpssm/decomp.hpp"
#include "gpssm/error.hpp"
#include "gpssm/linear_ssm.hpp"
#include "gpssm/rng.hpp"
#include "oracles.hpp"

using namespace gpssm;

namespace {

LinearSSM scalar_walk(double q, double sigma2, double x0, double v0) {
  LinearSSM m;
  m.F = Eigen::MatrixXd::Ones(1, 1);
  m.G = Eigen::MatrixXd::Ones(1, 1);
  m.H = Eigen::RowVectorXd::Ones(1);
  m.Q = Eigen::VectorXd::Constant(1, q);
  m.sigma2 = sigma2;
  m.x0 = Eigen::VectorXd::Constant(1, x0);
  m.V0 = Eigen::MatrixXd::Constant(1, 1, v0);
  return m;
}

}  // namespace

TEST_CASE("one-step hand recursion") {
  const double y[] = {1.0};
  const FilterOutput f = kalman_filter(scalar_walk(0, 1, 0, 1), y);
  CHECK(f.predicted_mean[0](0) == 0.0);
  CHECK(f.innovation_var[0] == 2.0);
  CHECK(f.filtered_mean[0](0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f.filtered_cov[0](0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f.loglik ==
        doctest::Approx(-0.5 * (std::log(2 * M_PI) + std::log(2.0) + 0.5)).epsilon(1e-15));
}

TEST_CASE("deterministic state") {
  const double y[] = {3.0, -1.0, 2.5, 0.0};
  const FilterOutput f = kalman_filter(scalar_walk(0, 1, 0.7, 0), y);
  const SmootherOutput s = kalman_smoother(scalar_walk(0, 1, 0.7, 0), f);
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(f.filtered_mean[n](0) == doctest::Approx(0.7));
    CHECK(f.innovation[n] == doctest::Approx(y[n] - 0.7));
    CHECK(s.mean[n](0) == doctest::Approx(0.7));
  }
}

TEST_CASE("all steps masked") {
  const double y[] = {1.0, 2.0, 3.0};
  const std::uint8_t mask[] = {1, 1, 1};
  LinearSSM m = scalar_walk(0.5, 1, 2.0, 1);
  m.F(0, 0) = 0.5;
  const FilterOutput f = kalman_filter(m, y, mask);
  CHECK(f.loglik == 0.0);
  CHECK(f.observed == 0);
  CHECK(f.filtered_mean[0](0) == doctest::Approx(1.0));
  CHECK(f.filtered_mean[2](0) == doctest::Approx(0.25));
  CHECK(std::isnan(f.innovation[1]));
}

TEST_CASE("filter errors") {
  const double y[] = {1.0, NAN};
  CHECK_THROWS_AS(kalman_filter(scalar_walk(1, 1, 0, 1), y), DataError);
  LinearSSM bad = scalar_walk(1, 1, 0, 1);
  bad.sigma2 = 0.0;
  const double y1[] = {1.0};
  CHECK_THROWS_AS(kalman_filter(bad, y1), InvalidArgument);
  CHECK_THROWS_AS(kalman_filter(scalar_walk(1, 1, 0, 1), std::span<const double>{}),
                  InvalidArgument);
  LinearSSM neg = scalar_walk(-1, 1, 0, 1);
  CHECK_THROWS_AS(kalman_filter(neg, y1), InvalidArgument);
}

TEST_CASE("aic") {
  CHECK(aic(-100, 3) == 206);
  CHECK(aic(0, 0) == 0);
}

TEST_CASE("property: smoother matches the dense joint-Gaussian posterior") {
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const LinearSSM m = oracle::random_stable_model(rng, 2, 1 + t % 2);
    const std::vector<double> y = oracle::simulate_linear(m, 20, rng);
    const FilterOutput f = kalman_filter(m, y);
    const SmootherOutput s = kalman_smoother(m, f);
    const oracle::JointPosterior o = oracle::linear_joint(m, y);
    double err = 0.0;
    for (int n = 0; n < 20; ++n) {
      err = std::max(err, (s.mean[n] - o.mean[n]).cwiseAbs().maxCoeff());
      err = std::max(err, (s.cov[n] - o.cov[n]).cwiseAbs().maxCoeff());
    }
    CHECK(err <= 1e-8);
    CHECK(f.loglik == doctest::Approx(o.loglik).epsilon(1e-10));
    // boundary identity
    CHECK((s.mean.back() - f.filtered_mean.back()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.cov.back() - f.filtered_cov.back()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("property: covariances symmetric, r_n >= sigma2") {
  Rng rng(32);
  DecompSpec spec;
  spec.trend_order = 2;
  spec.seasonal_order = 1;
  spec.period = 12;
  spec.tau1 = 0.01;
  spec.tau2 = 0.001;
  spec.sigma2 = 0.5;
  const LinearSSM m = build_seasonal(spec);
  std::vector<double> y(120);
  for (int n = 0; n < 120; ++n) y[n] = 0.05 * n + std::sin(2 * M_PI * n / 12) + rng.normal();
  const FilterOutput f = kalman_filter(m, y);
  const SmootherOutput s = kalman_smoother(m, f);
  for (std::size_t n = 0; n < f.size(); ++n) {
    CHECK(f.innovation_var[n] >= m.sigma2);
    CHECK((f.filtered_cov[n] - f.filtered_cov[n].transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((f.predicted_cov[n] - f.predicted_cov[n].transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.cov[n] - s.cov[n].transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("property: innovations are white for the true model") {
  Rng rng(33);
  const LinearSSM m = scalar_walk(0.5, 2.0, 0, 1);
  int within = 0;
  for (int t = 0; t < 10; ++t) {
    const std::vector<double> y = oracle::simulate_linear(m, 500, rng);
    const FilterOutput f = kalman_filter(m, y);
    std::vector<double> e(500);
    for (int n = 0; n < 500; ++n) e[n] = f.innovation[n] / std::sqrt(f.innovation_var[n]);
    double num = 0, den = 0, mean = 0;
    for (double v : e) mean += v / 500;
    for (int n = 0; n < 500; ++n) {
      den += (e[n] - mean) * (e[n] - mean);
      if (n > 0) num += (e[n] - mean) * (e[n - 1] - mean);
    }
    within += std::abs(num / den) <= 3.0 / std::sqrt(500.0);
  }
  CHECK(within >= 9);
}

TEST_CASE("degenerate smoother falls back to a pseudo-inverse") {
  // Q = 0 and V0 = 0 make V_{n+1|n} singular.
  const double y[] = {1.0, 2.0, 3.0};
  const LinearSSM m = scalar_walk(0, 1, 0.5, 0);
  const SmootherOutput s = kalman_smoother(m, kalman_filter(m, y));
  CHECK(s.used_pseudo_inverse);
  for (const auto& v : s.mean) CHECK(v(0) == doctest::Approx(0.5));
}

TEST_CASE("property: concentration identity and golden-section oracle") {
  Rng rng(34);
  for (int t = 0; t < 20; ++t) {
    LinearSSM m = oracle::random_stable_model(rng, 1 + t % 3, 1);
    const std::vector<double> y = oracle::simulate_linear(m, 40, rng);
    const ConcentratedLoglik c = concentrated_loglik(m, y);
    // Eq.-2 likelihood at sigma2_hat: scale the normalized model.
    const LinearSSM at_hat = m.scaled(c.sigma2_hat / m.sigma2);
    CHECK(kalman_filter(at_hat, y).loglik == doctest::Approx(c.loglik).epsilon(1e-12));
    CHECK(std::abs(kalman_filter(at_hat, y).loglik - c.loglik) <= 1e-9);
    if (t < 5) {
      auto ll = [&](double s2) { return kalman_filter(m.scaled(s2 / m.sigma2), y).loglik; };
      double lo = std::log(c.sigma2_hat) - 3, hi = std::log(c.sigma2_hat) + 3;
      const double g = (std::sqrt(5.0) - 1) / 2;
      for (int it = 0; it < 200; ++it) {
        const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        if (ll(std::exp(a)) > ll(std::exp(b))) hi = b;
        else lo = a;
      }
      CHECK(std::exp(0.5 * (lo + hi)) == doctest::Approx(c.sigma2_hat).epsilon(1e-4));
    }
  }
}

TEST_CASE("concentrated variance is floored on a constant series") {
  std::vector<double> y(30, 4.0);
  const ConcentratedLoglik c = concentrated_loglik(build_trend(1, 0.0, 1.0), y);
  CHECK(c.sigma2_hat >= 1e-12);
  CHECK(std::isfinite(c.loglik));
}
