#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpssm/gp_regression.hpp"
#include "gpssm/kernels.hpp"

namespace gpssm {

enum class Provenance { TrueSimulation, KalmanSmoothed, PfSmoothed, SyntheticShape };

std::string to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

/// GP training set for a transition function: row i of `inputs` holds the
/// lag vector (x_{n-1}, ..., x_{n-d}) and targets[i] the next state minus any
/// known input.
struct TransitionPairs {
  InputMatrix inputs;
  std::vector<double> targets;
  Provenance provenance = Provenance::SyntheticShape;
  /// Input value removed from each target (empty when there was none).
  std::vector<double> subtracted_input;

  std::size_t size() const { return targets.size(); }
  int dim() const { return static_cast<int>(inputs.cols()); }
  void validate() const;
};

/// Pairs (states[j-1], ..., states[j-d]) -> states[j] - u[j] for j = d..N-1,
/// keeping every stride-th pair starting with the first. `u`, when given, is
/// aligned with `states`.
TransitionPairs pairs_from_states(std::span<const double> states, int d,
                                  std::span<const double> u = {}, int stride = 1,
                                  Provenance provenance = Provenance::TrueSimulation);

/// Concatenated pairs of several trajectories (e.g. posterior draws).
TransitionPairs pairs_from_trajectories(const std::vector<std::vector<double>>& trajectories,
                                        int d, std::span<const double> u = {}, int stride = 1,
                                        Provenance provenance = Provenance::PfSmoothed);

/// `count` equispaced inputs over [range_lo, range_hi] with targets lo below
/// jump_at and hi at or above it, plus N(0, noise_sd^2) noise.
TransitionPairs synthetic_step_pairs(double jump_at, double lo, double hi, double noise_sd,
                                     int count = 41, double range_lo = -20.0,
                                     double range_hi = 20.0, std::uint64_t seed = 0);

/// Same layout with targets f(x) + noise.
TransitionPairs synthetic_function_pairs(const std::function<double(double)>& f, double noise_sd,
                                         int count = 41, double range_lo = -20.0,
                                         double range_hi = 20.0, std::uint64_t seed = 0);

/// GP regression on the pairs.
GpModel fit_transition_gp(const TransitionPairs& pairs, const Kernel& kernel,
                          double noise_variance);

/// CSV with header x1,...,xd,target.
void write_pairs(const std::filesystem::path& path, const TransitionPairs& pairs,
                 const std::vector<std::string>& comments = {});
TransitionPairs read_pairs(const std::filesystem::path& path);

}  // namespace gpssm
