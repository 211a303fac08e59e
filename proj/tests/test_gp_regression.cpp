#include <cmath>

#include "doctest.h"
#include "gpssm/error.hpp"
#include "gpssm/gp_regression.hpp"
#include "gpssm/rng.hpp"
#include "oracles.hpp"

using namespace gpssm;

namespace {

InputMatrix col(std::initializer_list<double> v) {
  InputMatrix X(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) X(i++, 0) = x;
  return X;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) y(i++) = x;
  return y;
}

}  // namespace

TEST_CASE("fit examples") {
  const GpModel one = GpModel::fit(col({0}), vec({1}), Kernel::rbf(1), 0.0);
  CHECK(one.cholesky()(0, 0) == 1.0);
  CHECK(one.alpha()(0) == 1.0);
  CHECK(one.jitter() == 0.0);

  const GpModel two = GpModel::fit(col({0, 0}), vec({1, 1}), Kernel::rbf(1), 1.0);
  const Eigen::MatrixXd L = two.cholesky();
  Eigen::MatrixXd Ky(2, 2);
  Ky << 2, 1, 1, 2;
  CHECK((L * L.transpose() - Ky).norm() <= 1e-12);
}

TEST_CASE("predict examples") {
  const double zero[] = {0.0};
  const GpPrediction p = GpModel::fit(col({0}), vec({1}), Kernel::rbf(1), 0.0).predict(zero);
  CHECK(p.mean == 1.0);
  CHECK(p.variance == 0.0);

  const GpPrediction q = GpModel::fit(col({0}), vec({1}), Kernel::rbf(1), 1.0).predict(zero);
  CHECK(q.mean == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q.variance == doctest::Approx(0.5).epsilon(1e-15));

  const double far[] = {1e3};
  const GpPrediction r = GpModel::fit(col({0, 1}), vec({1, 2}), Kernel::rbf(1), 0.1).predict(far);
  CHECK(std::abs(r.mean) < 1e-12);
  CHECK(r.variance == doctest::Approx(1.0));

  const double pair[] = {0.0, 1.0};
  CHECK_THROWS_AS(GpModel::fit(col({0}), vec({1}), Kernel::rbf(1), 0.0).predict(pair),
                  InvalidArgument);
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS(GpModel::fit(InputMatrix(0, 1), Eigen::VectorXd(0), Kernel::rbf(1), 0.0),
                  InvalidArgument);
  CHECK_THROWS_AS(GpModel::fit(col({0, 1}), vec({1}), Kernel::rbf(1), 0.0), InvalidArgument);
  CHECK_THROWS_AS(GpModel::fit(col({0}), vec({1}), Kernel::rbf(1), -1.0), InvalidArgument);
}

TEST_CASE("jitter rescues a singular Gram matrix") {
  // Duplicate inputs with zero noise give an exactly singular rbf Gram.
  const GpModel gp = GpModel::fit(col({0, 0, 1}), vec({1, 1, 2}), Kernel::rbf(1), 0.0);
  CHECK(gp.jitter() > 0.0);
  CHECK(gp.jitter() <= 1e-10 * 256 * 1.0 + 1e-24);
}

TEST_CASE("verbatim periodic kernel on a time grid fails to factorize") {
  InputMatrix X(60, 1);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    X(i, 0) = i + 1;
    y(i) = std::sin(i);
  }
  CHECK_THROWS_AS(GpModel::fit(X, y, Kernel::periodic(1.0, 12.0), 0.0), NumericalError);
}

TEST_CASE("batch prediction equals single predictions bit for bit") {
  Rng rng(21);
  InputMatrix X(30, 2);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y(i) = rng.normal();
  }
  const GpModel gp = GpModel::fit(X, y, Kernel::parse("linear+rbf(1.3)"), 0.2);
  CHECK(gp.predict_batch(InputMatrix(0, 2)).empty());
  InputMatrix Xs(100, 2);
  for (int i = 0; i < 100; ++i) {
    Xs(i, 0) = 2 * rng.normal();
    Xs(i, 1) = 2 * rng.normal();
  }
  const auto batch = gp.predict_batch(Xs);
  REQUIRE(batch.size() == 100);
  for (int i = 0; i < 100; ++i) {
    const GpPrediction p = gp.predict(point(Xs, i));
    CHECK(batch[i].mean == p.mean);
    CHECK(batch[i].variance == p.variance);
  }
  const auto single = gp.predict_batch(InputMatrix(Xs.topRows(1)));
  CHECK(single[0].mean == gp.predict(point(Xs, 0)).mean);
}

TEST_CASE("property: dense-solve oracle, Cholesky reconstruction, variance bound") {
  Rng rng(22);
  const std::vector<std::string> kernels = {"linear+rbf(1)", "rbf(0.5)", "exp(2)",
                                            "rbf(2)*exp(3)", "linear*rbf(4)+exp(1)"};
  for (int t = 0; t < 40; ++t) {
    const Kernel k = Kernel::parse(kernels[t % kernels.size()]);
    const int n = 1 + static_cast<int>(rng.uniform() * 40);
    const int d = 1 + t % 2;
    InputMatrix X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = 2 * rng.normal();
      y(i) = rng.normal();
    }
    const double noise = 0.05 + rng.uniform();
    const GpModel gp = GpModel::fit(X, y, k, noise);
    Eigen::MatrixXd Ky = gram(k, X);
    Ky.diagonal().array() += noise + gp.jitter();
    const Eigen::MatrixXd L = gp.cholesky();
    CHECK((L * L.transpose() - Ky).norm() / Ky.norm() <= 1e-8);
    for (int q = 0; q < 5; ++q) {
      std::vector<double> xs(d);
      for (int j = 0; j < d; ++j) xs[j] = 2 * rng.normal();
      const GpPrediction p = gp.predict(xs);
      const auto [m, v] = oracle::gp_dense(k, X, y, noise, xs);
      CHECK(std::abs(p.mean - m) <= 1e-8);
      CHECK(std::abs(p.variance - std::max(v, 0.0)) <= 1e-8);
      CHECK(p.variance >= 0.0);
      CHECK(p.variance <= k(xs, xs) + 1e-12);
    }
  }
}

TEST_CASE("property: noiseless interpolation") {
  Rng rng(23);
  for (const char* text : {"rbf(1)", "exp(1)", "linear+rbf(2)"}) {
    InputMatrix X(12, 1);
    Eigen::VectorXd y(12);
    for (int i = 0; i < 12; ++i) {
      X(i, 0) = -6.0 + i + 0.3 * rng.uniform();
      y(i) = rng.normal();
    }
    const GpModel gp = GpModel::fit(X, y, Kernel::parse(text), 0.0);
    for (int i = 0; i < 12; ++i) {
      const GpPrediction p = gp.predict(point(X, i));
      CHECK(std::abs(p.mean - y(i)) <= 1e-6);
      CHECK(p.variance <= 1e-6);
    }
  }
}

TEST_CASE("json round trip") {
  const GpModel gp = GpModel::fit(col({-1, 0.5, 2}), vec({0.1, -0.2, 0.3}),
                                  Kernel::parse("linear+exp(1.5)"), 0.25);
  const nlohmann::json doc = gp.to_json();
  CHECK(doc.at("kernel") == gp.kernel().to_string());
  CHECK(doc.at("noise_variance") == 0.25);
  CHECK(doc.contains("jitter"));
  const GpModel back = GpModel::from_json(nlohmann::json::parse(doc.dump()));
  const double q[] = {0.7};
  CHECK(back.predict(q).mean == gp.predict(q).mean);
  CHECK(back.predict(q).variance == gp.predict(q).variance);
  CHECK_THROWS_AS(GpModel::from_json(nlohmann::json::object()), DataError);
}
