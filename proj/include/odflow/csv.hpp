#ifndef ODFLOW_CSV_HPP
#define ODFLOW_CSV_HPP

#include <charconv>
#include <concepts>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "odflow/error.hpp"

namespace odflow::csv {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view field, std::string_view context) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    fail(ErrorCode::ParseError, std::string(context) + ": not a number: '" + std::string(field) + "'");
  }
  return value;
}

inline long long parse_int(std::string_view field, std::string_view context) {
  field = trim(field);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    fail(ErrorCode::ParseError, std::string(context) + ": not an integer: '" + std::string(field) + "'");
  }
  return value;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

template <std::integral Int>
std::string format(Int value) {
  return std::to_string(value);
}

/// Non-empty lines of a text file; lines starting with '#' are skipped.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.emplace_back(t);
  }
  return lines;
}

/// Dense numeric matrix, no header, row-major, comma separated.
inline Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) fail(ErrorCode::ParseError, path.string() + ": empty matrix file");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::vector<double> row;
    for (auto f : split(lines[r])) row.push_back(parse_double(f, path.string() + ":" + std::to_string(r + 1)));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::DimensionMismatch, path.string() + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

template <class Derived>
std::string matrix_text(const Eigen::MatrixBase<Derived>& m) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format(m(i, j));
    }
    out << '\n';
  }
  return out.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace odflow::csv

#endif  // ODFLOW_CSV_HPP
