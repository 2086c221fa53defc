#include "doctest.h"

#include <cmath>
#include <vector>

#include "nlwqed/analysis.hpp"

using namespace nlwqed::analysis;

TEST_CASE("local maxima and prominence") {
    const std::vector<double> y{0, 2, 1, 3, 3, 0, 1, 0.5};
    const auto m = local_maxima(y);
    REQUIRE(m.size() == 3);
    CHECK(m[0] == 1);
    CHECK(m[1] == 3);
    CHECK(m[2] == 6);
    CHECK(prominence(y, 1) == doctest::Approx(1.0));
    CHECK(prominence(y, 3) == doctest::Approx(3.0));
    CHECK(prominence(y, 6) == doctest::Approx(0.5));
}

TEST_CASE("prominent maxima of a damped cosine") {
    const auto t = lin_space(0.0, 30.0, 3001);
    auto f = [](double x) { return -std::cos(2.0 * M_PI * x / 8.0) * std::exp(-x / 40.0) + 1e-4 * std::sin(50.0 * x); };
    std::vector<double> y;
    for (double x : t) y.push_back(f(x));
    const auto peaks = prominent_maxima(t, y);
    REQUIRE(peaks.size() == 4);
    CHECK(peaks[0].t == doctest::Approx(4.0).epsilon(0.01));
    CHECK(visible_cycles(t, y) == 4);
    const auto period = rabi_period(t, y);
    REQUIRE(period.has_value());
    CHECK(*period == doctest::Approx(8.0).epsilon(0.01));
    const auto first = first_maximum(t, y);
    REQUIRE(first.has_value());
    CHECK(first->index == peaks[0].index);

    const std::vector<double> mono{0, 1, 2, 3};
    CHECK_FALSE(first_maximum(mono, mono).has_value());
    CHECK_FALSE(rabi_period(mono, mono).has_value());
    CHECK(visible_cycles(mono, mono) == 0);
}

TEST_CASE("parabolic refinement recovers an off-grid peak") {
    const auto t = lin_space(0.0, 2.0, 21);
    std::vector<double> y;
    for (double x : t) y.push_back(-(x - 1.037) * (x - 1.037));
    const auto peaks = prominent_maxima(t, y, 0.0);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].t == doctest::Approx(1.037).epsilon(1e-12));
}

TEST_CASE("slope after a cutoff") {
    const std::vector<double> t{0, 1, 2, 3, 4};
    const std::vector<double> y{0, 5, 5, 5.5, 5.5};
    CHECK(max_abs_slope(t, y, 0.0) == doctest::Approx(5.0));
    CHECK(max_abs_slope(t, y, 1.0) == doctest::Approx(0.5));
    CHECK(max_abs_slope(t, y, 3.0) == doctest::Approx(0.0));
}

TEST_CASE("spectral peaks") {
    const double dt = 0.05;
    std::vector<double> one, two;
    for (int i = 0; i < 4000; ++i) {
        const double x = i * dt;
        one.push_back(3.0 + std::cos(1.3 * x));
        two.push_back(std::cos(1.3 * x) + 0.5 * std::cos(2.9 * x));
    }
    const auto p1 = spectral_peaks(one, dt);
    REQUIRE(p1.size() == 1);
    CHECK(p1[0].frequency == doctest::Approx(1.3).epsilon(0.01));
    const auto p2 = spectral_peaks(two, dt);
    REQUIRE(p2.size() == 2);
    CHECK(p2[0].frequency == doctest::Approx(1.3).epsilon(0.01));
    CHECK(p2[1].frequency == doctest::Approx(2.9).epsilon(0.01));
    CHECK(p2[1].amplitude < p2[0].amplitude);
    SpectrumOptions strict;
    strict.rel_threshold = 0.6;
    CHECK(spectral_peaks(two, dt, strict).size() == 1);
}

TEST_CASE("power-law fit and grids") {
    const auto x = log_space(1e-3, 1.0, 7);
    CHECK(x.front() == 1e-3);
    CHECK(x.back() == 1.0);
    CHECK(x[3] == doctest::Approx(std::pow(10.0, -1.5)));
    std::vector<double> y;
    for (double v : x) y.push_back(0.4 * std::pow(v, 1.7));
    const auto fit = fit_power_law(x, y);
    CHECK(fit.exponent == doctest::Approx(1.7));
    CHECK(fit.prefactor == doctest::Approx(0.4));
    CHECK(fit.max_residual < 1e-12);
    const auto l = lin_space(0.0, 1.0, 11);
    CHECK(l.back() == 1.0);
    CHECK(l[5] == doctest::Approx(0.5));
}
