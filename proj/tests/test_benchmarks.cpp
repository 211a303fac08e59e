#include <cmath>

#include "doctest.h"
#include "gpssm/benchmarks.hpp"
#include "gpssm/error.hpp"

using namespace gpssm;

TEST_CASE("f24 values") {
  const AsymmetricRational p;
  CHECK(eval_f24(p, 0.0) == 0.0);
  CHECK(eval_f24(p, -2.0) == doctest::Approx(-4.0 / 9.0).epsilon(1e-15));
  CHECK(eval_f24(p, 2.0) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  // continuity at zero from both sides
  CHECK(std::abs(eval_f24(p, -1e-12)) < 1e-11);
  CHECK(std::abs(eval_f24(p, 1e-12)) < 1e-11);
  AsymmetricRational bad;
  bad.c1_sq = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("f25 and g25 values") {
  CHECK(eval_f25(0.0, 0) == 8.0);
  CHECK(eval_g25(0.0) == 0.0);
  CHECK(eval_g25(3.0) == eval_g25(-3.0));
  CHECK(eval_f25(1.0, 0) == doctest::Approx(13.0 + 8.0));
  CHECK(eval_f25(2.0, 5) == doctest::Approx(1.0 + 10.0 + 8 * std::cos(6.0)));
}

TEST_CASE("simulation determinism and noise-free trajectory") {
  KitagawaSystem k;
  const Simulation a = simulate(k, 50, 7), b = simulate(k, 50, 7);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(simulate(k, 50, 8).x != a.x);

  KitagawaSystem quiet;
  quiet.tau2 = 0.0;
  quiet.sigma2 = 0.0;
  const Simulation q1 = simulate(quiet, 30, 1, 0.0), q2 = simulate(quiet, 30, 99, 0.0);
  CHECK(q1.x == q2.x);
  double x = 0.0;
  for (int n = 1; n <= 30; ++n) {
    x = eval_f25(x, n);
    CHECK(q1.x[n - 1] == x);
    CHECK(q1.y[n - 1] == eval_g25(x));
  }
  KitagawaSystem bad;
  bad.tau2 = -1.0;
  CHECK_THROWS_AS(simulate(bad, 5, 1), InvalidArgument);
  CHECK_THROWS_AS(SystemModel{quiet}, InvalidArgument);
}

TEST_CASE("transition and observation means") {
  KitagawaSystem s;
  CHECK(transition_mean(s, 1.0, 3) == eval_f25(1.0, 3));
  CHECK(observation_mean(s, 4.0) == 1.6);
  CHECK(transition_mean(AsymmetricRational{}, -2.0, 1) == eval_f24(AsymmetricRational{}, -2.0));
  CHECK(transition_mean(ARBaseline{}, 2.0, 1) == 0.9 * 2.0);
}

TEST_CASE("x0 override") {
  const Simulation s = simulate(ARBaseline{}, 5, 1, 3.0);
  CHECK(s.x0 == 3.0);
  const Simulation t = simulate(ARBaseline{}, 5, 1);
  CHECK(t.x0 != 3.0);
  CHECK_THROWS_AS(simulate(ARBaseline{}, 0, 1), InvalidArgument);
}

TEST_CASE("property: f24 series live mostly below zero") {
  int mean_ok = 0, below_ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Simulation s = simulate(AsymmetricRational{}, 1000, seed);
    double mean = 0;
    int below = 0;
    for (double x : s.x) {
      mean += x / 1000;
      below += x < 0;
    }
    mean_ok += mean > -3 && mean < 0;
    below_ok += below > 600;
  }
  CHECK(mean_ok == 10);
  CHECK(below_ok == 10);
}

TEST_CASE("f24 with b1 = 5 settles near the negative equilibrium") {
  AsymmetricRational p;
  p.b1 = 5.0;
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Simulation s = simulate(p, 1000, seed);
    double mean = 0;
    int below = 0;
    for (double x : s.x) {
      mean += x / 1000;
      below += x < 0;
    }
    ok += mean > -3 && mean < 0 && below > 600;
  }
  CHECK(ok == 10);
}

TEST_CASE("system model and names") {
  const BenchmarkSystem s = AsymmetricRational{};
  CHECK(system_name(s) == "f24");
  CHECK(system_name(KitagawaSystem{}) == "f25");
  CHECK(process_variance(KitagawaSystem{}) == 1.0);
  CHECK(observation_variance(KitagawaSystem{}) == 10.0);
  const SystemModel m(KitagawaSystem{});
  const double st[] = {2.0};
  CHECK(m.log_observation(st, 0.4, 1) ==
        doctest::Approx(-0.5 * std::log(2 * M_PI * 10.0)));
  ARBaseline asym;
  asym.asymmetric = true;
  asym.a1 = 0.5;
  asym.a2 = 0.8;
  CHECK(asym.coefficient(-1.0) == 0.5);
  CHECK(asym.coefficient(0.0) == 0.8);
}

TEST_CASE("symmetric AR fit recovers the coefficient") {
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Simulation s = simulate(ARBaseline{}, 2000, seed);
    const ArFit f = ar_baseline_fit(s.y, false);
    good += f.model.a1 > 0.85 && f.model.a1 < 0.95;
    CHECK(f.aic == doctest::Approx(-2 * f.loglik + 6));
    CHECK(f.loglik == doctest::Approx(kalman_filter(ar_linear_model(f.model), s.y).loglik));
  }
  CHECK(good >= 2);
}

TEST_CASE("noise-free states give the lag-1 regression coefficient") {
  const Simulation s = simulate(ARBaseline{false, 0.7, 0.7, 1.0, 1.0}, 1500, 4);
  double num = 0, den = 0;
  for (std::size_t n = 1; n < s.x.size(); ++n) {
    num += s.x[n] * s.x[n - 1];
    den += s.x[n - 1] * s.x[n - 1];
  }
  // Fitting the exactly observed states (tiny observation noise).
  const ArFit f = ar_baseline_fit(s.x, false);
  CHECK(f.model.a1 == doctest::Approx(num / den).epsilon(0.02));
  CHECK(f.model.sigma2 < 0.05);
}

TEST_CASE("asymmetric AR nests the symmetric fit") {
  const Simulation s = simulate(AsymmetricRational{}, 300, 11);
  ArFitOptions o;
  o.particles = 2000;
  o.seed = 3;
  o.max_evaluations = 80;
  const ArFit sym = ar_baseline_fit(s.y, false, o);
  const ArFit asym = ar_baseline_fit(s.y, true, o);
  CHECK(asym.model.asymmetric);
  CHECK(asym.loglik >= sym.loglik - 1.0);
  CHECK(asym.aic == doctest::Approx(-2 * asym.loglik + 8));
  const std::vector<double> tiny(5, 0.0);
  CHECK_THROWS_AS(ar_baseline_fit(tiny, false), InvalidArgument);
}

TEST_CASE("known-model filter covers the true state") {
  const Simulation s = simulate(KitagawaSystem{}, 100, 21);
  PfOptions o;
  o.particles = 5000;
  o.seed = 2;
  const PfResult r = pf_run(SystemModel(KitagawaSystem{}), s.y, o);
  int covered = 0;
  for (std::size_t n = 0; n < 100; ++n)
    covered += s.x[n] >= r.steps[n].q025 && s.x[n] <= r.steps[n].q975;
  CHECK(covered >= 80);
}
