#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gpssm/error.hpp"
#include "gpssm/training_data.hpp"

using namespace gpssm;

TEST_CASE("pairs from states") {
  const std::vector<double> s3 = {1, 2, 3};
  const TransitionPairs p = pairs_from_states(s3, 1);
  REQUIRE(p.size() == 2);
  CHECK(p.inputs(0, 0) == 1);
  CHECK(p.targets[0] == 2);
  CHECK(p.inputs(1, 0) == 2);
  CHECK(p.targets[1] == 3);
  CHECK(p.provenance == Provenance::TrueSimulation);
  CHECK(p.subtracted_input.empty());

  const std::vector<double> s4 = {1, 2, 3, 4};
  const TransitionPairs q = pairs_from_states(s4, 2);
  REQUIRE(q.size() == 2);
  CHECK(q.dim() == 2);
  CHECK(q.inputs(0, 0) == 2);
  CHECK(q.inputs(0, 1) == 1);
  CHECK(q.targets[0] == 3);
  CHECK(q.inputs(1, 0) == 3);
  CHECK(q.inputs(1, 1) == 2);
  CHECK(q.targets[1] == 4);

  const std::vector<double> one = {1};
  CHECK_THROWS_AS(pairs_from_states(one, 1), InvalidArgument);
  CHECK_THROWS_AS(pairs_from_states(s3, 1, {}, 0), InvalidArgument);
}

TEST_CASE("known input is subtracted from the targets") {
  std::vector<double> states(10), u(10);
  for (int n = 0; n < 10; ++n) {
    states[n] = 0.3 * n;
    u[n] = 8 * std::cos(1.2 * (n + 1));
  }
  const TransitionPairs p = pairs_from_states(states, 1, u);
  for (std::size_t j = 0; j < p.size(); ++j) {
    CHECK(p.targets[j] == states[j + 1] - u[j + 1]);
    CHECK(p.subtracted_input[j] == u[j + 1]);
  }
}

TEST_CASE("property: stride count") {
  std::vector<double> states(37);
  for (std::size_t i = 0; i < states.size(); ++i) states[i] = std::sin(i);
  for (int d = 1; d <= 2; ++d)
    for (int s = 1; s <= 6; ++s) {
      const std::size_t expect = (states.size() - d + s - 1) / s;
      CHECK(pairs_from_states(states, d, {}, s).size() == expect);
    }
}

TEST_CASE("synthetic step pairs") {
  const TransitionPairs exact = synthetic_step_pairs(0.0, -10.0, 10.0, 0.0);
  REQUIRE(exact.size() == 41);
  int below = 0;
  for (std::size_t i = 0; i < 41; ++i) {
    const double x = exact.inputs(static_cast<Eigen::Index>(i), 0);
    CHECK(x == doctest::Approx(-20.0 + i));
    CHECK(exact.targets[i] == (x < 0 ? -10.0 : 10.0));
    below += x < 0;
  }
  CHECK(below == 20);
  CHECK(exact.provenance == Provenance::SyntheticShape);

  const TransitionPairs a = synthetic_step_pairs(0, -10, 10, 1.0, 41, -20, 20, 5);
  const TransitionPairs b = synthetic_step_pairs(0, -10, 10, 1.0, 41, -20, 20, 5);
  CHECK(a.targets == b.targets);
  CHECK(a.targets != exact.targets);
  CHECK_THROWS_AS(synthetic_step_pairs(0, -1, 1, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(synthetic_step_pairs(0, -1, 1, 0, 10, 3, 3), InvalidArgument);
}

TEST_CASE("property: linear recursion recovered by a linear-kernel GP") {
  for (double a : {0.5, 0.9, -0.7}) {
    std::vector<double> x = {3.0};
    for (int n = 1; n < 20; ++n) x.push_back(a * x.back());
    const TransitionPairs p = pairs_from_states(x, 1);
    const GpModel gp = fit_transition_gp(p, Kernel::linear(), 0.0);
    for (double q : {-5.0, -0.3, 0.7, 4.0}) {
      const double qs[] = {q};
      CHECK(gp.predict(qs).mean / q == doctest::Approx(a).epsilon(1e-6));
    }
  }
}

TEST_CASE("pairs csv round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "gpssm_pairs_test";
  std::filesystem::create_directories(dir);
  const std::vector<double> s = {0.25, -1.5, 3.125, 2.0, 1e-7};
  const TransitionPairs p = pairs_from_states(s, 2, {}, 1, Provenance::KalmanSmoothed);
  write_pairs(dir / "p.csv", p, {"seed 1"});
  const TransitionPairs back = read_pairs(dir / "p.csv");
  CHECK(back.dim() == 2);
  CHECK(back.targets == p.targets);
  CHECK(back.inputs == p.inputs);
  CHECK(parse_provenance(to_string(Provenance::PfSmoothed)) == Provenance::PfSmoothed);
  CHECK_THROWS_AS(parse_provenance("nonsense"), InvalidArgument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pairs from several trajectories") {
  const std::vector<std::vector<double>> tr = {{1, 2, 3}, {4, 5, 6}};
  const TransitionPairs p = pairs_from_trajectories(tr, 1);
  CHECK(p.size() == 4);
  CHECK(p.targets == std::vector<double>{2, 3, 5, 6});
  CHECK(p.provenance == Provenance::PfSmoothed);
}
