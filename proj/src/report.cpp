#include "gpssm/report.hpp"

#include <cmath>
#include <cstdio>

#include "gpssm/csv.hpp"
#include "gpssm/error.hpp"

namespace gpssm {

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw InvalidArgument("Table: row width differs from header");
  rows.push_back(std::move(row));
}

std::string Table::markdown() const {
  std::string out;
  if (!title.empty()) out += "### " + title + "\n\n";
  auto line = [&](const std::vector<std::string>& cells) {
    out += "|";
    for (const auto& c : cells) out += " " + c + " |";
    out += "\n";
  };
  line(columns);
  out += "|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += "\n";
  for (const auto& r : rows) line(r);
  return out;
}

std::string fixed(double value, int digits) {
  if (std::isnan(value)) return "---";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string sci(double value, int digits) {
  if (std::isnan(value)) return "---";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, value);
  return buf;
}

void write_pf_csv(const std::filesystem::path& path, const std::vector<std::string>& comments,
                  const PfResult& run) {
  CsvWriter w(path, comments, pf_csv_header());
  for (std::size_t n = 0; n < run.steps.size(); ++n)
    w.row(pf_csv_row(static_cast<int>(n) + 1, run.steps[n]));
}

void write_kalman_csv(const std::filesystem::path& path, const std::vector<std::string>& comments,
                      std::span<const double> y, const FilterOutput& filter,
                      const SmootherOutput& smooth, double scale) {
  CsvWriter w(path, comments,
              {"step", "y", "predicted_mean", "predicted_sd", "filtered_mean", "filtered_sd",
               "smoothed_mean", "smoothed_sd", "lower1", "upper1", "lower2", "upper2", "lower3",
               "upper3"});
  for (std::size_t n = 0; n < filter.size(); ++n) {
    const double psd = std::sqrt(std::max(0.0, filter.predicted_cov[n](0, 0) * scale));
    const double fsd = std::sqrt(std::max(0.0, filter.filtered_cov[n](0, 0) * scale));
    const double sm = smooth.mean[n](0);
    const double ssd = std::sqrt(std::max(0.0, smooth.cov[n](0, 0) * scale));
    w.row({static_cast<double>(n + 1), filter.missing[n] ? std::nan("") : y[n],
           filter.predicted_mean[n](0), psd, filter.filtered_mean[n](0), fsd, sm, ssd, sm - ssd,
           sm + ssd, sm - 2 * ssd, sm + 2 * ssd, sm - 3 * ssd, sm + 3 * ssd});
  }
}

void write_gp_curve(const std::filesystem::path& path, const std::vector<std::string>& comments,
                    const GpModel& gp, double lo, double hi, int count) {
  if (gp.input_dim() != 1) throw InvalidArgument("write_gp_curve: GP input is not one-dimensional");
  if (count < 2 || !(hi > lo)) throw InvalidArgument("write_gp_curve: bad grid");
  CsvWriter w(path, comments, {"x", "mean", "sd"});
  for (int i = 0; i < count; ++i) {
    const double x = lo + (hi - lo) * i / (count - 1);
    const GpPrediction p = gp.predict(std::span<const double>(&x, 1));
    w.row({x, p.mean, std::sqrt(p.variance)});
  }
}

}  // namespace gpssm
