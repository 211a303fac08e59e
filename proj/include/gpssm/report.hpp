#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gpssm/gp_regression.hpp"
#include "gpssm/linear_ssm.hpp"
#include "gpssm/particle_filter.hpp"

namespace gpssm {

/// Plain comparison table rendered as GitHub markdown.
struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string markdown() const;
};

/// printf-style fixed and scientific formatting ("---" for NaN).
std::string fixed(double value, int digits = 3);
std::string sci(double value, int digits = 3);

/// step, mean, sd and five quantiles per filtering step.
void write_pf_csv(const std::filesystem::path& path, const std::vector<std::string>& comments,
                  const PfResult& run);

/// Predicted, filtered and smoothed mean/sd per step plus smoothed +-1, 2, 3
/// sd bands.
void write_kalman_csv(const std::filesystem::path& path, const std::vector<std::string>& comments,
                      std::span<const double> y, const FilterOutput& filter,
                      const SmootherOutput& smooth, double scale = 1.0);

/// GP mean and sd along a grid of a one-dimensional input.
void write_gp_curve(const std::filesystem::path& path, const std::vector<std::string>& comments,
                    const GpModel& gp, double lo, double hi, int count = 201);

}  // namespace gpssm
