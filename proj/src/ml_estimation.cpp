#include "gpssm/ml_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gpssm/error.hpp"

namespace gpssm {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

}  // namespace

void OptProblem::validate() const {
  if (!objective) throw InvalidArgument("OptProblem: objective not set");
  if (initial.empty()) throw InvalidArgument("OptProblem: need at least one parameter");
  if (transforms.size() != initial.size())
    throw InvalidArgument("OptProblem: transforms and initial point differ in length");
  if (!names.empty() && names.size() != initial.size())
    throw InvalidArgument("OptProblem: names and initial point differ in length");
  if (!steps.empty() && steps.size() != initial.size())
    throw InvalidArgument("OptProblem: steps and initial point differ in length");
  if (max_evaluations < 1) throw InvalidArgument("OptProblem: evaluation budget must be >= 1");
  for (std::size_t i = 0; i < initial.size(); ++i)
    if (transforms[i] == ParamTransform::Log && !(initial[i] > 0.0))
      throw InvalidArgument("OptProblem: log-transformed parameter '" +
                            (names.empty() ? std::to_string(i) : names[i]) +
                            "' must start positive");
}

double to_transformed(double natural, ParamTransform t) {
  return t == ParamTransform::Log ? std::log(natural) : natural;
}

double to_natural(double transformed, ParamTransform t) {
  return t == ParamTransform::Log ? std::exp(transformed) : transformed;
}

OptResult nelder_mead_max(const OptProblem& problem) {
  problem.validate();
  const std::size_t d = problem.dim();
  OptResult result;

  std::vector<double> natural(d);
  // Minimizes the negated objective; non-finite values become +inf.
  auto cost = [&](const std::vector<double>& z) {
    for (std::size_t i = 0; i < d; ++i) natural[i] = to_natural(z[i], problem.transforms[i]);
    ++result.evaluations;
    const double v = problem.objective(natural);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(d + 1, std::vector<double>(d));
  std::vector<double> f(d + 1);
  for (std::size_t i = 0; i < d; ++i)
    simplex[0][i] = to_transformed(problem.initial[i], problem.transforms[i]);
  f[0] = cost(simplex[0]);
  if (!std::isfinite(f[0]))
    throw NumericalError("nelder_mead_max: objective is not finite at the initial point");
  for (std::size_t k = 0; k < d; ++k) {
    simplex[k + 1] = simplex[0];
    double step = 0.0;
    if (!problem.steps.empty()) {
      step = problem.steps[k];
    } else if (problem.transforms[k] == ParamTransform::Log) {
      step = 0.5;
    } else {
      step = 0.1 * std::max(1.0, std::abs(simplex[0][k]));
    }
    simplex[k + 1][k] += step;
    f[k + 1] = cost(simplex[k + 1]);
  }

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), trial(d), trial2(d);
  auto point_along = [&](const std::vector<double>& worst, double coef, std::vector<double>& out) {
    for (std::size_t i = 0; i < d; ++i) out[i] = centroid[i] + coef * (centroid[i] - worst[i]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[d - 1];
    result.trace.push_back(-f[best]);

    const double spread = f[worst] - f[best];
    double diameter = 0.0;
    for (std::size_t k = 0; k <= d; ++k)
      for (std::size_t i = 0; i < d; ++i)
        diameter = std::max(diameter, std::abs(simplex[k][i] - simplex[best][i]));
    if (std::isfinite(spread) && spread < problem.tolerance && diameter < problem.x_tolerance) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= problem.max_evaluations) {
      result.budget_exhausted = true;
      break;
    }
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= d; ++k) {
      if (k == worst) continue;
      for (std::size_t i = 0; i < d; ++i) centroid[i] += simplex[k][i] / static_cast<double>(d);
    }

    point_along(simplex[worst], kReflect, trial);
    const double f_reflect = cost(trial);
    if (f_reflect < f[best]) {
      point_along(simplex[worst], kExpand, trial2);
      const double f_expand = cost(trial2);
      if (f_expand < f_reflect) {
        simplex[worst] = trial2;
        f[worst] = f_expand;
      } else {
        simplex[worst] = trial;
        f[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < f[second_worst]) {
      simplex[worst] = trial;
      f[worst] = f_reflect;
      continue;
    }
    // Contraction: outside when the reflected point beats the worst vertex.
    const bool outside = f_reflect < f[worst];
    point_along(simplex[worst], outside ? kContract : -kContract, trial2);
    const double f_contract = cost(trial2);
    if (f_contract < (outside ? f_reflect : f[worst])) {
      simplex[worst] = trial2;
      f[worst] = f_contract;
      continue;
    }
    for (std::size_t k = 0; k <= d; ++k) {
      if (k == best) continue;
      for (std::size_t i = 0; i < d; ++i)
        simplex[k][i] = simplex[best][i] + kShrink * (simplex[k][i] - simplex[best][i]);
      f[k] = cost(simplex[k]);
    }
  }

  const std::size_t best = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  result.transformed = simplex[best];
  result.params.resize(d);
  for (std::size_t i = 0; i < d; ++i)
    result.params[i] = to_natural(simplex[best][i], problem.transforms[i]);
  result.value = -f[best];
  if (!result.trace.empty() && result.trace.back() < result.value) result.trace.push_back(result.value);
  return result;
}

std::vector<ProfilePoint> profile_grid(const OptProblem& problem, std::span<const double> at,
                                       std::size_t index, std::span<const double> grid) {
  if (!problem.objective) throw InvalidArgument("profile_grid: objective not set");
  if (index >= at.size()) throw InvalidArgument("profile_grid: parameter index out of range");
  if (grid.empty()) throw InvalidArgument("profile_grid: empty grid");
  std::vector<double> params(at.begin(), at.end());
  std::vector<ProfilePoint> out;
  out.reserve(grid.size());
  for (double g : grid) {
    params[index] = g;
    out.push_back({g, problem.objective(params)});
  }
  return out;
}

nlohmann::json fit_result_json(const OptProblem& problem, const OptResult& result) {
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < result.params.size(); ++i) {
    params.push_back({
        {"name", problem.names.empty() ? "p" + std::to_string(i) : problem.names[i]},
        {"transform", problem.transforms[i] == ParamTransform::Log ? "log" : "identity"},
        {"natural", result.params[i]},
        {"transformed", result.transformed[i]},
    });
  }
  return {
      {"parameters", params},
      {"loglik", result.value},
      {"evaluations", result.evaluations},
      {"iterations", result.iterations},
      {"converged", result.converged},
      {"budget_exhausted", result.budget_exhausted},
  };
}

}  // namespace gpssm
