#include <doctest.h>

#include <cmath>
#include <random>

#include "zeno/detector.hpp"

using namespace zeno;
using detector::DetectorParams;

TEST_CASE("nbar_of_temperature limits and frozen points") {
    CHECK(detector::nbar_of_temperature(1.0, 0.0) == 0.0);
    // T = 1/ln 2: exp(ln 2) - 1 = 1
    CHECK(detector::nbar_of_temperature(1.0, 1.0 / std::log(2.0)) ==
          doctest::Approx(1.0).epsilon(1e-14));
    // T = 1/ln(3/2): exp(ln 1.5) - 1 = 1/2, reciprocal 2
    CHECK(detector::nbar_of_temperature(1.0, 1.0 / std::log(1.5)) ==
          doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::isinf(detector::nbar_of_temperature(1.0,
                                                   std::numeric_limits<double>::infinity())));
    CHECK_THROWS_AS(detector::nbar_of_temperature(0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(detector::nbar_of_temperature(-1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(detector::nbar_of_temperature(1.0, -0.5), ValidationError);
}

TEST_CASE("nbar_of_temperature monotonicity") {
    double prev = -1.0;
    for (double t = 0.1; t < 30.0; t += 0.37) {
        const double n = detector::nbar_of_temperature(1.3, t);
        CHECK(n > prev);
        prev = n;
    }
    // decreasing in omega at fixed T > 0
    prev = 1e300;
    for (double w = 0.2; w < 8.0; w += 0.23) {
        const double n = detector::nbar_of_temperature(w, 2.0);
        CHECK(n < prev);
        prev = n;
    }
}

TEST_CASE("gamma_up detailed balance") {
    CHECK(detector::gamma_up_from_detailed_balance(1.0, 1.0, 0.0) == 0.0);
    CHECK(detector::gamma_up_from_detailed_balance(1.0, 1.0, 1.0 / std::log(2.0)) ==
          doctest::Approx(0.5).epsilon(1e-14));

    // algebraic identity nbar = gu/(gd - gu) over an (omega, T) grid
    for (double w : {0.3, 1.0, 2.7})
        for (double t : {0.2, 0.9, 3.0, 11.0}) {
            const double gd = 1.7;
            const double gu = detector::gamma_up_from_detailed_balance(gd, w, t);
            const double nbar = detector::nbar_of_temperature(w, t);
            CHECK(gu / (gd - gu) == doctest::Approx(nbar).epsilon(1e-12));
            CHECK(gu == doctest::Approx(gd * nbar / (nbar + 1.0)).epsilon(1e-12));
        }
}

TEST_CASE("gamma_eff arithmetic and rejection") {
    auto make = [](double g, double gd, double nbar) {
        return DetectorParams::from_nbar(1.0, g, gd, nbar);
    };
    // (gamma=2, gd=1, gu=0.5) -> 1.25; gu = 0.5 means nbar = 1
    CHECK(detector::gamma_eff(make(2.0, 1.0, 1.0)) == doctest::Approx(1.25));
    CHECK(detector::gamma_eff(make(0.0, 1.0, 0.0)) == doctest::Approx(0.5));
    CHECK(detector::gamma_eff(make(1.0, 0.0, 0.0)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(DetectorParams::from_nbar(1.0, 0.0, 0.0, 1.0), ValidationError);
}

TEST_CASE("DetectorParams invariants") {
    const auto p = DetectorParams::from_nbar(0.7, 2.0, 1.5, 2.5);
    CHECK(p.gamma_up == doctest::Approx(1.5 * 2.5 / 3.5).epsilon(1e-15));
    CHECK(p.gamma_down > p.gamma_up);
    CHECK(p.gamma_eff == doctest::Approx(0.5 * (2.0 + 1.5 - p.gamma_up)));
    // detailed-balance fixed point to 1e-12
    CHECK(p.gamma_up / (p.gamma_down - p.gamma_up) ==
          doctest::Approx(p.nbar).epsilon(1e-12));

    const auto q = DetectorParams::from_temperature(1.0, 1.0, 1.0, 1.0 / std::log(2.0));
    CHECK(q.nbar == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(DetectorParams::from_temperature(
                        1.0, 1.0, 1.0, std::numeric_limits<double>::infinity()),
                    ValidationError);
    const auto capped = DetectorParams::from_temperature(
        1.0, 1.0, 1.0, std::numeric_limits<double>::infinity(), 50.0);
    CHECK(capped.nbar == 50.0);
}

TEST_CASE("thermal_char values and phase invariance") {
    using detector::thermal_char;
    CHECK(thermal_char({0.0, 0.0}, 3.0) == std::complex<double>(1.0, 0.0));
    CHECK(thermal_char({1.0, 0.0}, 0.0) == std::complex<double>(1.0, 0.0));
    // frozen: exp(-1) for |xi| = 1, nbar = 1
    CHECK(thermal_char({1.0, 0.0}, 1.0).real() ==
          doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(thermal_char({1.0, 0.0}, 1.0).imag() == 0.0);

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> mag(0.0, 2.5);
    for (int i = 0; i < 200; ++i) {
        const double r = mag(rng);
        const auto a = thermal_char(std::polar(r, phase(rng)), 1.7);
        const auto b = thermal_char(std::polar(r, phase(rng)), 1.7);
        CHECK(std::abs(a - b) < 1e-14);
        CHECK(a.real() > 0.0);
        CHECK(a.real() <= 1.0);
    }
}
