#include <cmath>

#include "doctest.h"
#include "gpssm/decomp.hpp"
#include "gpssm/error.hpp"
#include "gpssm/rng.hpp"

using namespace gpssm;

namespace {

// Trend of order m1 plus a seasonal block with (1 + B + ... + B^{p-1}) S = v.
std::vector<double> simulate_decomp(int m1, int p, double tau1, double tau2, double sigma2,
                                    int N, Rng& rng, double amplitude = 1.0) {
  std::vector<double> y(N);
  std::vector<double> s(p > 0 ? p - 1 : 0);
  for (int j = 0; j < static_cast<int>(s.size()); ++j) s[j] = amplitude * std::sin(2 * M_PI * j / p);
  double t = 0, t_prev = 0;
  for (int n = 0; n < N; ++n) {
    const double v = std::sqrt(tau1) * rng.normal();
    const double t_new = m1 == 1 ? t + v : 2 * t - t_prev + v;
    t_prev = t;
    t = t_new;
    double sn = 0;
    if (p > 0) {
      double sum = 0;
      for (double v2 : s) sum += v2;
      sn = -sum + std::sqrt(tau2) * rng.normal();
      for (int j = static_cast<int>(s.size()) - 1; j > 0; --j) s[j] = s[j - 1];
      s[0] = sn;
    }
    y[n] = t + sn + std::sqrt(sigma2) * rng.normal();
  }
  return y;
}

}  // namespace

TEST_CASE("trend builders") {
  const LinearSSM m1 = build_trend(1, 0.3, 2.0);
  CHECK(m1.F == Eigen::MatrixXd::Ones(1, 1));
  CHECK(m1.G == Eigen::MatrixXd::Ones(1, 1));
  CHECK(m1.H == Eigen::RowVectorXd::Ones(1));
  CHECK(m1.Q(0) == 0.3);
  CHECK(m1.sigma2 == 2.0);
  const LinearSSM m2 = build_trend(2, 0.3, 2.0);
  Eigen::MatrixXd F(2, 2);
  F << 2, -1, 1, 0;
  CHECK(m2.F == F);
  CHECK(m2.G(0, 0) == 1.0);
  CHECK(m2.G(1, 0) == 0.0);
  CHECK(m2.H(0) == 1.0);
  CHECK(m2.H(1) == 0.0);
  CHECK_THROWS_AS(build_trend(3, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(build_trend(0, 1, 1), InvalidArgument);
}

TEST_CASE("second-order trend with zero noise is exactly linear") {
  LinearSSM m = build_trend(2, 0.0, 1.0);
  Eigen::VectorXd x(2);
  x << 3.0, 1.0;  // T_0 = 3, T_{-1} = 1
  for (int n = 1; n <= 20; ++n) {
    x = m.F * x;
    CHECK(x(0) == 3.0 + 2.0 * n);
  }
}

TEST_CASE("companion and level/slope forms give the same likelihood") {
  Rng rng(41);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> y(80);
    double level = 0, slope = 0;
    for (auto& v : y) {
      slope += 0.1 * rng.normal();
      level += slope;
      v = level + rng.normal();
    }
    const double tau2 = 0.01 + rng.uniform(), s2 = 0.5 + rng.uniform();
    // (T_n, T_{n-1}) = A (level_n, slope_n) with A = [[1, 0], [1, -1]] = A^{-1}.
    Eigen::Matrix2d A;
    A << 1, 0, 1, -1;
    for (double v0 : {1e2, kDiffuseVariance}) {
      const LinearSSM c = build_trend(2, tau2, s2, v0);
      LinearSSM ls = build_trend_level_slope(tau2, s2);
      ls.V0 = A * c.V0 * A.transpose();
      const double a = kalman_filter(c, y).loglik;
      const double b = kalman_filter(ls, y).loglik;
      CHECK(std::abs(a - b) <= 1e-9);
    }
  }
}

TEST_CASE("seasonal builder blocks, p=4 and m1=2") {
  DecompSpec spec;
  spec.trend_order = 2;
  spec.seasonal_order = 1;
  spec.period = 4;
  spec.tau1 = 0.5;
  spec.tau2 = 0.25;
  spec.sigma2 = 2.0;
  const LinearSSM m = build_seasonal(spec);
  Eigen::MatrixXd F(5, 5);
  F << 2, -1, 0, 0, 0,
       1, 0, 0, 0, 0,
       0, 0, -1, -1, -1,
       0, 0, 1, 0, 0,
       0, 0, 0, 1, 0;
  Eigen::MatrixXd G(5, 2);
  G << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0;
  Eigen::RowVectorXd H(5);
  H << 1, 0, 1, 0, 0;
  CHECK(m.F == F);
  CHECK(m.G == G);
  CHECK(m.H == H);
  CHECK(m.Q(0) == 0.5);
  CHECK(m.Q(1) == 0.25);
  CHECK(spec.state_dim() == 5);
}

TEST_CASE("seasonal builder p=2, m1=1") {
  DecompSpec spec;
  spec.trend_order = 1;
  spec.seasonal_order = 1;
  spec.period = 2;
  const LinearSSM m = build_seasonal(spec);
  Eigen::MatrixXd F(2, 2);
  F << 1, 0, 0, -1;
  CHECK(m.F == F);
  CHECK(m.H.sum() == 2.0);
  spec.period = 1;
  CHECK_THROWS_AS(build_seasonal(spec), InvalidArgument);
}

TEST_CASE("property: state dimension and H") {
  for (int m1 = 1; m1 <= 2; ++m1)
    for (int p = 2; p <= 13; ++p) {
      DecompSpec spec;
      spec.trend_order = m1;
      spec.seasonal_order = 1;
      spec.period = p;
      const LinearSSM m = build_seasonal(spec);
      CHECK(m.state_dim() == m1 + p - 1);
      CHECK((m.H.array() == 1.0).count() == 2);
      CHECK((m.H.array() == 0.0).count() == m.state_dim() - 2);
    }
}

TEST_CASE("noise-free seasonal recursion repeats with period p") {
  DecompSpec spec;
  spec.trend_order = 1;
  spec.seasonal_order = 1;
  spec.period = 5;
  spec.tau2 = 0.0;
  const LinearSSM m = build_seasonal(spec);
  Eigen::VectorXd x(5);
  x << 0, 1.0, -2.0, 0.5, 0.25;  // S_0..S_{-3}; implied S_{-4} keeps the sum 0
  std::vector<double> s;
  for (int n = 0; n < 20; ++n) {
    x = m.F * x;
    s.push_back(x(1));
  }
  for (int n = 5; n < 20; ++n) CHECK(s[n] == doctest::Approx(s[n - 5]).epsilon(1e-14));
}

TEST_CASE("decompose reconstruction and boundary cases") {
  Rng rng(42);
  const std::vector<double> y = simulate_decomp(2, 12, 0.01, 0.001, 0.2, 96, rng);
  DecompSpec spec;
  spec.trend_order = 2;
  spec.seasonal_order = 1;
  spec.period = 12;
  spec.tau1 = 0.05;
  spec.tau2 = 0.005;
  const Decomposition d = decompose(y, spec);
  for (std::size_t n = 0; n < y.size(); ++n)
    CHECK(std::abs(d.trend[n] + d.seasonal[n] + d.residual[n] - y[n]) <= 1e-12);
  CHECK(d.aic == doctest::Approx(-2 * d.loglik + 2 * 3));

  DecompSpec trend_only;
  trend_only.trend_order = 1;
  const Decomposition d0 = decompose(y, trend_only);
  for (double s : d0.seasonal) CHECK(s == 0.0);

  const std::vector<double> flat(40, 3.0);
  spec.period = 4;
  const Decomposition dc = decompose(flat, spec);
  for (std::size_t n = 0; n < flat.size(); ++n) {
    CHECK(dc.trend[n] == doctest::Approx(3.0).epsilon(1e-5));
    CHECK(std::abs(dc.seasonal[n]) <= 1e-5);
  }

  spec.period = 12;
  const std::vector<double> short_y(20, 1.0);
  CHECK_THROWS_AS(decompose(short_y, spec), InvalidArgument);
}

TEST_CASE("decompose recovers a known seasonal pattern") {
  const int p = 6, N = 72;
  std::vector<double> pattern = {1.5, 0.5, -0.5, -2.0, -0.25, 0.75};
  Rng rng(43);
  std::vector<double> y(N);
  for (int n = 0; n < N; ++n) y[n] = 0.1 * n + pattern[n % p] + 0.05 * rng.normal();
  DecompSpec spec;
  spec.trend_order = 2;
  spec.seasonal_order = 1;
  spec.period = p;
  spec.tau1 = 1e-4;
  spec.tau2 = 1e-4;
  spec.sigma2 = 0.0025;
  const Decomposition d = decompose(y, spec);
  int inside = 0;
  for (int n = 0; n < N; ++n)
    inside += std::abs(d.seasonal[n] - pattern[n % p]) <= 2 * d.seasonal_sd[n] + 0.05;
  CHECK(inside >= static_cast<int>(0.95 * N));
}

TEST_CASE("decompose handles missing values") {
  Rng rng(44);
  std::vector<double> y = simulate_decomp(1, 4, 0.1, 0.01, 0.3, 40, rng);
  std::vector<std::uint8_t> mask(40, 0);
  mask[7] = mask[20] = 1;
  y[7] = y[20] = std::nan("");
  DecompSpec spec;
  spec.trend_order = 1;
  spec.seasonal_order = 1;
  spec.period = 4;
  const Decomposition d = decompose(y, spec, mask);
  CHECK(std::isnan(d.residual[7]));
  CHECK(std::isfinite(d.trend[7]));
  CHECK(std::isfinite(d.loglik));
}

TEST_CASE("property: smoothed seasonal sums stay near zero") {
  Rng rng(45);
  const int p = 4;
  const double tau2 = 0.01;
  const std::vector<double> y = simulate_decomp(1, p, 0.05, tau2, 0.1, 120, rng);
  DecompSpec spec;
  spec.trend_order = 1;
  spec.seasonal_order = 1;
  spec.period = p;
  spec.tau1 = 0.05;
  spec.tau2 = tau2;
  spec.sigma2 = 0.1;
  const Decomposition d = decompose(y, spec);
  double mean = 0;
  int count = 0;
  for (std::size_t n = p - 1; n < y.size(); ++n) {
    double sum = 0;
    for (int j = 0; j < p; ++j) sum += d.seasonal[n - j];
    mean += sum;
    ++count;
  }
  mean /= count;
  CHECK(std::abs(mean) <= 2 * std::sqrt(tau2) * std::sqrt(p));
}

TEST_CASE("fit_decomp: AIC prefers the generating trend order") {
  int prefer2 = 0;
  for (int s = 0; s < 10; ++s) {
    Rng rng(460 + s);
    const std::vector<double> y = simulate_decomp(2, 0, 0.01, 0, 1.0, 200, rng);
    const int orders[] = {1, 2};
    const bool seas[] = {false};
    const auto c = fit_decomp(y, orders, seas, 0);
    prefer2 += c.front().spec.trend_order == 2;
  }
  CHECK(prefer2 >= 8);
}

TEST_CASE("fit_decomp: seasonal block rejected when there is no season") {
  Rng rng(47);
  const std::vector<double> y = simulate_decomp(1, 0, 0.05, 0, 1.0, 120, rng);
  const int orders[] = {1};
  const bool seas[] = {false, true};
  const auto c = fit_decomp(y, orders, seas, 12);
  REQUIRE(c.size() == 2);
  CHECK_FALSE(c.front().spec.seasonal());
  CHECK(c.front().aic <= c.back().aic);
}

TEST_CASE("fit_decomp single candidate") {
  Rng rng(48);
  const std::vector<double> y = simulate_decomp(1, 4, 0.1, 0.01, 0.5, 60, rng);
  const int orders[] = {1};
  const bool seas[] = {true};
  const auto c = fit_decomp(y, orders, seas, 4);
  REQUIRE(c.size() == 1);
  CHECK(c[0].ok);
  CHECK(c[0].spec.trend_order == 1);
  CHECK(c[0].spec.period == 4);
  CHECK(c[0].aic == doctest::Approx(-2 * c[0].loglik + 2 * 3));
  const int none[] = {1};
  CHECK_THROWS_AS(fit_decomp(y, std::span<const int>(none, 0), seas, 4), InvalidArgument);
}
