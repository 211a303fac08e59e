#include "gpssm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpssm/error.hpp"

namespace gpssm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool is_missing_token(std::string_view cell) {
  return cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" || cell.empty();
}

bool parse_double(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
};

RawCsv read_raw(std::istream& in, std::string_view source) {
  RawCsv raw;
  std::string line;
  int line_no = 0;
  bool first_data_line = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto cells = split(view);
    if (first_data_line) {
      first_data_line = false;
      width = cells.size();
      bool numeric = true;
      for (auto c : cells) {
        double v;
        if (!is_missing_token(c) && !parse_double(c, v)) numeric = false;
      }
      // A row containing any non-numeric, non-NA token is a header. A date
      // column would also trigger this, so only treat it as a header when
      // the last cell is non-numeric too.
      double last;
      if (!numeric && !parse_double(cells.back(), last) && !is_missing_token(cells.back())) {
        for (auto c : cells) raw.header.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " columns, found " +
                      std::to_string(cells.size()));
    }
    std::vector<std::string> row;
    row.reserve(cells.size());
    for (auto c : cells) row.emplace_back(c);
    raw.rows.push_back(std::move(row));
    raw.line_numbers.push_back(line_no);
  }
  if (raw.rows.empty()) throw DataError(std::string(source) + ": no data rows");
  return raw;
}

}  // namespace

bool Series::has_missing() const noexcept {
  return std::any_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; });
}

int NumericTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Series parse_series(std::istream& in, std::string_view column, std::string_view source) {
  RawCsv raw = read_raw(in, source);
  const std::size_t width = raw.rows.front().size();
  std::size_t col = 0;
  if (!column.empty() || width > 2) {
    const std::string_view wanted = column.empty() ? std::string_view("y") : column;
    auto it = std::find(raw.header.begin(), raw.header.end(), wanted);
    if (it == raw.header.end()) {
      throw DataError(std::string(source) + ": column '" + std::string(wanted) +
                      "' not found; use a single-column file or name the column");
    }
    col = static_cast<std::size_t>(it - raw.header.begin());
  } else if (width == 2) {
    col = 1;
  }

  Series series;
  series.name = col < raw.header.size() ? raw.header[col] : "y";
  series.values.reserve(raw.rows.size());
  series.missing.reserve(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const std::string& cell = raw.rows[r][col];
    double v = 0.0;
    if (is_missing_token(cell)) {
      series.values.push_back(std::nan(""));
      series.missing.push_back(1);
    } else if (parse_double(cell, v) && std::isfinite(v)) {
      series.values.push_back(v);
      series.missing.push_back(0);
    } else {
      throw DataError(std::string(source) + ":" + std::to_string(raw.line_numbers[r]) +
                      ": cannot parse '" + cell + "' as a number");
    }
  }
  return series;
}

Series read_series(const std::filesystem::path& path, std::string_view column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_series(in, column, path.string());
}

NumericTable parse_table(std::istream& in, std::string_view source) {
  RawCsv raw = read_raw(in, source);
  NumericTable table;
  table.header = raw.header;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    std::vector<double> row;
    for (const auto& cell : raw.rows[r]) {
      double v = 0.0;
      if (is_missing_token(cell)) {
        v = std::nan("");
      } else if (!parse_double(cell, v)) {
        throw DataError(std::string(source) + ":" + std::to_string(raw.line_numbers[r]) +
                        ": cannot parse '" + cell + "' as a number");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

NumericTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_table(in, path.string());
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& comments,
                     const std::vector<std::string>& header)
    : out_(std::make_unique<std::ofstream>(path, std::ios::binary)), width_(header.size()) {
  if (!*out_) throw DataError("cannot write " + path.string());
  for (const auto& c : comments) *out_ << "# " << c << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) *out_ << (i ? "," : "") << header[i];
  *out_ << '\n';
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw InvalidArgument("CsvWriter: row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    *out_ << (i ? "," : "") << format_number(values[i]);
  *out_ << '\n';
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace gpssm
