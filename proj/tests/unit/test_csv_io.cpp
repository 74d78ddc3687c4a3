#include <doctest.h>

#include <random>
#include <sstream>

#include "divweight/csv_io.hpp"

using namespace divweight;

namespace {

template <class F>
CsvParseError capture(F&& f) {
    try {
        f();
    } catch (const CsvParseError& e) {
        return e;
    }
    FAIL("expected CsvParseError");
    return CsvParseError(0, 0, 0, "");
}

} // namespace

TEST_CASE("log density matrix round trips exactly") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(-3.0, 10.0);
    Eigen::MatrixXd m(17, 4);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = z(rng);
    }
    m(0, 0) = -1e-300;
    m(1, 1) = -7.5e200;
    const LogDensityMatrix original(m, {"a", "b", "c", "d"});
    std::stringstream ss;
    write_log_density_csv(ss, original);
    const auto back = read_log_density_csv(ss);
    CHECK(back.labels() == original.labels());
    REQUIRE(back.rows() == 17);
    for (std::size_t i = 0; i < 17; ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(std::abs(back(i, k) - original(i, k)) <= 1e-15 * std::abs(original(i, k)));
        }
    }
}

TEST_CASE("reader tolerates whitespace, blank lines and a byte order mark") {
    std::istringstream in("\xEF\xBB\xBF" "x, y\r\n-1.5, +2e-1\n\n  -3 ,-4\n");
    const auto m = read_log_density_csv(in);
    CHECK(m.labels() == std::vector<std::string>{"x", "y"});
    CHECK(m.rows() == 2);
    CHECK(m(0, 1) == 0.2);
    CHECK(m(1, 0) == -3.0);
}

TEST_CASE("diagnostics name the row and column") {
    {
        std::istringstream in("a,b,c\n1,2,3\n4,oops,6\n");
        const auto e = capture([&] { read_log_density_csv(in); });
        CHECK(e.row() == 2);
        CHECK(e.column() == 2);
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("oops") != std::string::npos);
        CHECK(std::string(e.what()).find("row 2, column 2") != std::string::npos);
    }
    {
        std::istringstream in("a,b\n1,2\n\n3,nan\n");
        const auto e = capture([&] { read_log_density_csv(in); });
        CHECK(e.row() == 2);
        CHECK(e.column() == 2);
        CHECK(e.line() == 4);
    }
    {
        std::istringstream in("a,b\n1,inf\n");
        CHECK(capture([&] { read_log_density_csv(in); }).column() == 2);
    }
    {
        std::istringstream in("a,b\n1,\n");
        CHECK(capture([&] { read_log_density_csv(in); }).column() == 2);
    }
}

TEST_CASE("ragged rows and bad headers") {
    std::istringstream ragged("a,b,c\n1,2,3\n1,2\n");
    const auto e = capture([&] { read_log_density_csv(ragged); });
    CHECK(e.row() == 2);
    CHECK(e.column() == 3);

    std::istringstream wide("a,b\n1,2,3\n");
    CHECK(capture([&] { read_log_density_csv(wide); }).row() == 1);

    std::istringstream dup("a,b,a\n1,2,3\n");
    CHECK(capture([&] { read_log_density_csv(dup); }).row() == 0);

    std::istringstream empty_label("a,,c\n1,2,3\n");
    CHECK(capture([&] { read_log_density_csv(empty_label); }).column() == 2);

    std::istringstream nothing("");
    CHECK_THROWS_AS(read_log_density_csv(nothing), CsvParseError);
}

TEST_CASE("optimism table is reordered to the matrix labels") {
    std::istringstream in("model,optimism\nb,2.5\na,-1\nc,0\n");
    const auto op = read_optimism_csv(in, {"a", "b", "c"});
    CHECK(op.values() == Eigen::Vector3d(-1.0, 2.5, 0.0));
}

TEST_CASE("optimism table mismatches") {
    std::istringstream missing("model,optimism\na,1\n");
    CHECK_THROWS_AS(read_optimism_csv(missing, {"a", "b"}), DimensionError);
    std::istringstream renamed("model,optimism\na,1\nz,2\n");
    CHECK_THROWS_AS(read_optimism_csv(renamed, {"a", "b"}), DimensionError);
    std::istringstream extra("model,optimism\na,1\nb,2\nc,3\n");
    CHECK_THROWS_AS(read_optimism_csv(extra, {"a", "b"}), DimensionError);

    std::istringstream dup("model,optimism\na,1\na,2\n");
    CHECK(capture([&] { read_optimism_csv(dup, {"a", "b"}); }).row() == 2);
    std::istringstream header("name,value\na,1\n");
    CHECK_THROWS_AS(read_optimism_csv(header, {"a"}), CsvParseError);
    std::istringstream bad("model,optimism\na,x\n");
    const auto e = capture([&] { read_optimism_csv(bad, {"a"}); });
    CHECK(e.row() == 1);
    CHECK(e.column() == 2);
}

TEST_CASE("number lists and formatting") {
    CHECK(parse_number_list("0.5,1, 2") == std::vector<double>{0.5, 1.0, 2.0});
    CHECK(capture([] { parse_number_list("1,,2"); }).column() == 2);
    CHECK_THROWS_AS(parse_number_list("1,a"), CsvParseError);
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(-2.0) == "-2");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("missing files") {
    CHECK_THROWS_AS(read_log_density_csv_file("/nonexistent/dir/x.csv"), CsvParseError);
    CHECK_THROWS_AS(read_optimism_csv_file("/nonexistent/dir/x.csv", {"a"}), CsvParseError);
}
