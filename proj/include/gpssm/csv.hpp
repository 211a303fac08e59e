#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace gpssm {

/// A univariate series with an explicit missing-value mask (1 = missing).
struct Series {
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
  std::string name;

  std::size_t size() const noexcept { return values.size(); }
  bool has_missing() const noexcept;
};

/// Numeric table with a header row. `NA` cells become NaN.
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(std::string_view name) const;  // -1 when absent
};

/// Shortest decimal text that parses back to the same double; NaN -> "NA".
std::string format_number(double value);

/// Reads one series from CSV text. Lines starting with '#' are comments. The
/// header row is optional. With one column it is used; with two columns the
/// first is taken to be a date/index and ignored; otherwise `column` selects
/// by header name, falling back to a column called "y".
Series parse_series(std::istream& in, std::string_view column = {},
                    std::string_view source = "<input>");
Series read_series(const std::filesystem::path& path, std::string_view column = {});

NumericTable parse_table(std::istream& in, std::string_view source = "<input>");
NumericTable read_table(const std::filesystem::path& path);

/// Writes a CSV file whose first lines are `# ` comments (run config, seed).
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& comments,
            const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values);

 private:
  std::unique_ptr<std::ofstream> out_;
  std::size_t width_;
};

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace gpssm
