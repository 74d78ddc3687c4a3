#include "divweight/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace divweight {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_finite(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* begin = cell.data();
    if (*begin == '+') ++begin;
    const char* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out, std::chars_format::general);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool blank(const std::string& line) { return trim(line).empty(); }

std::string strip_bom(std::string line) {
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    return line;
}

} // namespace

CsvParseError::CsvParseError(std::size_t row, std::size_t column, std::size_t line, const std::string& what)
    : std::runtime_error("row " + std::to_string(row) + ", column " + std::to_string(column) + " (line " +
                         std::to_string(line) + "): " + what),
      row_(row), column_(column), line_(line) {}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

LogDensityMatrix read_log_density_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw CsvParseError(0, 1, 1, "missing header row");
    ++line_no;
    std::vector<std::string> labels = split_cells(strip_bom(line));
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (labels[c].empty()) throw CsvParseError(0, c + 1, line_no, "empty model label");
    }
    if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
        throw CsvParseError(0, 1, line_no, "duplicate model labels in header");
    }

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        ++rows;
        const auto cells = split_cells(line);
        if (cells.size() != labels.size()) {
            throw CsvParseError(rows, std::min(cells.size(), labels.size()) + 1, line_no,
                                "expected " + std::to_string(labels.size()) + " cells, found " +
                                    std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            if (!parse_finite(cells[c], v)) {
                throw CsvParseError(rows, c + 1, line_no, "not a finite number: '" + cells[c] + "'");
            }
            values.push_back(v);
        }
    }

    const auto k = static_cast<Eigen::Index>(labels.size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), k);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < k; ++j) m(i, j) = values[static_cast<std::size_t>(i * k + j)];
    }
    return LogDensityMatrix(std::move(m), std::move(labels));
}

LogDensityMatrix read_log_density_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvParseError(0, 0, 0, "cannot open '" + path + "'");
    return read_log_density_csv(in);
}

void write_log_density_csv(std::ostream& out, const LogDensityMatrix& matrix) {
    const auto& labels = matrix.labels();
    for (std::size_t k = 0; k < labels.size(); ++k) out << (k ? "," : "") << labels[k];
    out << '\n';
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        for (std::size_t k = 0; k < matrix.models(); ++k) out << (k ? "," : "") << format_double(matrix(i, k));
        out << '\n';
    }
}

OptimismVector read_optimism_csv(std::istream& in, const std::vector<std::string>& labels) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw CsvParseError(0, 1, 1, "missing header row");
    ++line_no;
    const auto header = split_cells(strip_bom(line));
    if (header.size() != 2 || header[0] != "model" || header[1] != "optimism") {
        throw CsvParseError(0, 1, line_no, "header must be 'model,optimism'");
    }

    std::map<std::string, double> by_label;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        ++rows;
        const auto cells = split_cells(line);
        if (cells.size() != 2) throw CsvParseError(rows, std::min<std::size_t>(cells.size(), 2) + 1, line_no,
                                                   "expected 2 cells");
        if (cells[0].empty()) throw CsvParseError(rows, 1, line_no, "empty model label");
        double v = 0.0;
        if (!parse_finite(cells[1], v)) {
            throw CsvParseError(rows, 2, line_no, "not a finite number: '" + cells[1] + "'");
        }
        if (!by_label.emplace(cells[0], v).second) {
            throw CsvParseError(rows, 1, line_no, "duplicate model label '" + cells[0] + "'");
        }
    }

    if (by_label.size() != labels.size()) {
        throw DimensionError("optimism table has " + std::to_string(by_label.size()) + " models, matrix has " +
                             std::to_string(labels.size()));
    }
    Eigen::VectorXd op(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const auto it = by_label.find(labels[k]);
        if (it == by_label.end()) throw DimensionError("optimism table has no entry for model '" + labels[k] + "'");
        op(static_cast<Eigen::Index>(k)) = it->second;
    }
    return OptimismVector(std::move(op));
}

OptimismVector read_optimism_csv_file(const std::string& path, const std::vector<std::string>& labels) {
    std::ifstream in(path);
    if (!in) throw CsvParseError(0, 0, 0, "cannot open '" + path + "'");
    return read_optimism_csv(in, labels);
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    const auto cells = split_cells(text);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        double v = 0.0;
        if (!parse_finite(cells[c], v)) {
            throw CsvParseError(1, c + 1, 1, "not a finite number: '" + cells[c] + "'");
        }
        out.push_back(v);
    }
    return out;
}

} // namespace divweight
