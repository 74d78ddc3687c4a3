#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divweight/types.hpp"

namespace divweight {

/// Malformed CSV input. `row` and `column` are 1-based data positions (the
/// header is row 0); `line` is the 1-based line of the file.
class CsvParseError : public std::runtime_error {
public:
    CsvParseError(std::size_t row, std::size_t column, std::size_t line, const std::string& what);
    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }
    std::size_t line() const { return line_; }

private:
    std::size_t row_;
    std::size_t column_;
    std::size_t line_;
};

/// Formats a double with 17 significant digits.
std::string format_double(double v);

/// Header of model labels, then one row of natural-log densities per
/// observation.
LogDensityMatrix read_log_density_csv(std::istream& in);
LogDensityMatrix read_log_density_csv_file(const std::string& path);
void write_log_density_csv(std::ostream& out, const LogDensityMatrix& matrix);

/// Two-column `model,optimism` table, returned in the order of `labels`.
/// Label sets must match exactly (throws DimensionError otherwise).
OptimismVector read_optimism_csv(std::istream& in, const std::vector<std::string>& labels);
OptimismVector read_optimism_csv_file(const std::string& path, const std::vector<std::string>& labels);

/// Comma-separated numbers, e.g. "0.5,1,2".
std::vector<double> parse_number_list(const std::string& text);

} // namespace divweight
