#include "gpssm/training_data.hpp"

#include <cmath>

#include "gpssm/csv.hpp"
#include "gpssm/error.hpp"
#include "gpssm/rng.hpp"

namespace gpssm {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::TrueSimulation: return "true-simulation";
    case Provenance::KalmanSmoothed: return "kalman-smoothed";
    case Provenance::PfSmoothed: return "pf-smoothed";
    case Provenance::SyntheticShape: return "synthetic-shape";
  }
  return "unknown";
}

Provenance parse_provenance(std::string_view text) {
  for (auto p : {Provenance::TrueSimulation, Provenance::KalmanSmoothed, Provenance::PfSmoothed,
                 Provenance::SyntheticShape})
    if (to_string(p) == text) return p;
  throw InvalidArgument("unknown provenance '" + std::string(text) + "'");
}

void TransitionPairs::validate() const {
  if (static_cast<std::size_t>(inputs.rows()) != targets.size())
    throw InvalidArgument("TransitionPairs: inputs and targets differ in length");
  if (!subtracted_input.empty() && subtracted_input.size() != targets.size())
    throw InvalidArgument("TransitionPairs: subtracted input has the wrong length");
  if (!inputs.allFinite()) throw DataError("TransitionPairs: non-finite input");
  for (double t : targets)
    if (!std::isfinite(t)) throw DataError("TransitionPairs: non-finite target");
}

namespace {

void append_pairs(TransitionPairs& out, std::vector<double>& rows, std::span<const double> states,
                  int d, std::span<const double> u, int stride) {
  if (d < 1) throw InvalidArgument("pairs_from_states: lag must be >= 1");
  if (stride < 1) throw InvalidArgument("pairs_from_states: stride must be >= 1");
  if (states.size() <= static_cast<std::size_t>(d))
    throw InvalidArgument("pairs_from_states: series of length " + std::to_string(states.size()) +
                          " is too short for lag " + std::to_string(d));
  if (!u.empty() && u.size() < states.size())
    throw InvalidArgument("pairs_from_states: input series shorter than the states");
  for (std::size_t j = d; j < states.size(); ++j) {
    if ((j - d) % static_cast<std::size_t>(stride) != 0) continue;
    for (int k = 1; k <= d; ++k) rows.push_back(states[j - k]);
    const double uj = u.empty() ? 0.0 : u[j];
    out.targets.push_back(states[j] - uj);
    if (!u.empty()) out.subtracted_input.push_back(uj);
  }
}

void finish(TransitionPairs& out, const std::vector<double>& rows, int d) {
  out.inputs = Eigen::Map<const InputMatrix>(rows.data(), static_cast<Eigen::Index>(out.targets.size()), d);
  out.validate();
}

TransitionPairs grid_pairs(const std::function<double(double)>& f, double noise_sd, int count,
                           double range_lo, double range_hi, std::uint64_t seed) {
  if (count < 2) throw InvalidArgument("synthetic pairs: count must be >= 2");
  if (!(range_hi > range_lo)) throw InvalidArgument("synthetic pairs: empty range");
  if (!(noise_sd >= 0.0)) throw InvalidArgument("synthetic pairs: noise sd must be >= 0");
  Rng rng(named_seed(seed, "synthetic-pairs"));
  TransitionPairs out;
  out.provenance = Provenance::SyntheticShape;
  out.inputs.resize(count, 1);
  out.targets.resize(count);
  for (int i = 0; i < count; ++i) {
    const double x = range_lo + (range_hi - range_lo) * i / (count - 1);
    out.inputs(i, 0) = x;
    out.targets[i] = f(x) + noise_sd * rng.normal();
  }
  return out;
}

}  // namespace

TransitionPairs pairs_from_states(std::span<const double> states, int d, std::span<const double> u,
                                  int stride, Provenance provenance) {
  TransitionPairs out;
  out.provenance = provenance;
  std::vector<double> rows;
  append_pairs(out, rows, states, d, u, stride);
  finish(out, rows, d);
  return out;
}

TransitionPairs pairs_from_trajectories(const std::vector<std::vector<double>>& trajectories,
                                        int d, std::span<const double> u, int stride,
                                        Provenance provenance) {
  if (trajectories.empty()) throw InvalidArgument("pairs_from_trajectories: no trajectories");
  TransitionPairs out;
  out.provenance = provenance;
  std::vector<double> rows;
  for (const auto& t : trajectories) append_pairs(out, rows, t, d, u, stride);
  finish(out, rows, d);
  return out;
}

TransitionPairs synthetic_step_pairs(double jump_at, double lo, double hi, double noise_sd,
                                     int count, double range_lo, double range_hi,
                                     std::uint64_t seed) {
  return grid_pairs([&](double x) { return x < jump_at ? lo : hi; }, noise_sd, count, range_lo,
                    range_hi, seed);
}

TransitionPairs synthetic_function_pairs(const std::function<double(double)>& f, double noise_sd,
                                         int count, double range_lo, double range_hi,
                                         std::uint64_t seed) {
  return grid_pairs(f, noise_sd, count, range_lo, range_hi, seed);
}

GpModel fit_transition_gp(const TransitionPairs& pairs, const Kernel& kernel,
                          double noise_variance) {
  pairs.validate();
  if (pairs.size() == 0) throw InvalidArgument("fit_transition_gp: no training pairs");
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(pairs.targets.data(),
                                                        static_cast<Eigen::Index>(pairs.size()));
  return GpModel::fit(pairs.inputs, std::move(y), kernel, noise_variance);
}

void write_pairs(const std::filesystem::path& path, const TransitionPairs& pairs,
                 const std::vector<std::string>& comments) {
  pairs.validate();
  std::vector<std::string> header;
  for (int k = 1; k <= pairs.dim(); ++k) header.push_back("x" + std::to_string(k));
  header.push_back("target");
  std::vector<std::string> notes = comments;
  notes.push_back("provenance=" + to_string(pairs.provenance));
  CsvWriter w(path, notes, header);
  std::vector<double> row(header.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (int k = 0; k < pairs.dim(); ++k) row[k] = pairs.inputs(static_cast<Eigen::Index>(i), k);
    row.back() = pairs.targets[i];
    w.row(row);
  }
}

TransitionPairs read_pairs(const std::filesystem::path& path) {
  const NumericTable table = read_table(path);
  const int target = table.column("target");
  if (target < 0 || table.header.size() < 2)
    throw DataError(path.string() + ": pairs CSV needs columns x1,...,xd,target");
  const int d = static_cast<int>(table.header.size()) - 1;
  for (int k = 0; k < d; ++k)
    if (table.column("x" + std::to_string(k + 1)) != k)
      throw DataError(path.string() + ": expected column x" + std::to_string(k + 1));
  if (table.rows.empty()) throw DataError(path.string() + ": no training pairs");
  TransitionPairs out;
  out.inputs.resize(static_cast<Eigen::Index>(table.rows.size()), d);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (int k = 0; k < d; ++k) out.inputs(static_cast<Eigen::Index>(i), k) = table.rows[i][k];
    out.targets.push_back(table.rows[i][d]);
  }
  out.validate();
  return out;
}

}  // namespace gpssm
