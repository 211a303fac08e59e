#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpssm/kernels.hpp"
#include "json.hpp"

namespace gpssm {

/// A log-likelihood to maximize over named parameters. The objective takes
/// natural-scale values; the optimizer works on the transformed scale (log
/// for variances and length scales) so positivity is automatic.
struct OptProblem {
  std::function<double(std::span<const double>)> objective;
  std::vector<std::string> names;
  std::vector<ParamTransform> transforms;
  std::vector<double> initial;
  int max_evaluations = 400;
  double tolerance = 1e-6;    // simplex value spread
  double x_tolerance = 1e-4;  // simplex diameter, transformed scale
  /// Initial simplex offsets in transformed space. Empty: 0.5 for log
  /// parameters, 0.1 * max(1, |x|) for identity ones.
  std::vector<double> steps;

  std::size_t dim() const { return initial.size(); }
  void validate() const;
};

struct OptResult {
  std::vector<double> params;       // natural scale
  std::vector<double> transformed;  // optimizer scale
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  bool budget_exhausted = false;
  /// Best value seen after each iteration; nondecreasing.
  std::vector<double> trace;
};

double to_transformed(double natural, ParamTransform t);
double to_natural(double transformed, ParamTransform t);

/// Nelder-Mead simplex maximization with reflection 1, expansion 2,
/// contraction 0.5 and shrink 0.5. Stops when the spread of simplex values
/// and the simplex diameter both fall below their tolerances, or when the
/// evaluation budget is spent; in the latter case the best point so far is
/// returned with budget_exhausted set.
/// Non-finite objective values rank below every finite value, but a
/// non-finite value at the initial point throws NumericalError.
OptResult nelder_mead_max(const OptProblem& problem);

struct ProfilePoint {
  double value;
  double loglik;
};

/// Objective along `grid` for parameter `index`, others held at `at`.
std::vector<ProfilePoint> profile_grid(const OptProblem& problem, std::span<const double> at,
                                       std::size_t index, std::span<const double> grid);

/// Fit summary: names, natural and transformed values, loglik, evaluations.
nlohmann::json fit_result_json(const OptProblem& problem, const OptResult& result);

}  // namespace gpssm
