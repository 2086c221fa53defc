#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>

#include "nlwqed/io.hpp"
#include "oracles.hpp"

using namespace nlwqed;

TEST_CASE("doubles round-trip through their shortest form") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    const double tiny = std::numeric_limits<double>::denorm_min();
    CHECK(std::strtod(format_double(tiny).c_str(), nullptr) == tiny);
}

TEST_CASE("CSV quoting and round trip") {
    CsvTable t;
    t.header = {"a", "b,c", "d"};
    t.rows = {{"1", "x \"quoted\"", ""}, {"2", "line\nbreak", "3"}};
    std::ostringstream os;
    write_csv(os, t);
    CHECK(os.str().rfind("a,\"b,c\",d\n", 0) == 0);
    std::istringstream is(os.str());
    const auto back = read_csv(is);
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    std::ostringstream again;
    write_csv(again, back);
    CHECK(again.str() == os.str());

    std::istringstream broken("a,b\n\"1,2\n");
    CHECK_THROWS_AS(read_csv(broken), ConfigError);
}

TEST_CASE("matrix JSON round trip") {
    std::mt19937 rng(62);
    const auto m = oracle::random_matrix(3, rng);
    const auto j = matrix_to_json(m);
    CHECK(j.size() == 3);
    CHECK(j[0][1][0].get<double>() == m(0, 1).real());
    CHECK(j[0][1][1].get<double>() == m(0, 1).imag());
    CHECK(oracle::max_abs(matrix_from_json(j) - m) == 0.0);
}
