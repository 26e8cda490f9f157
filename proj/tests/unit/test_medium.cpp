#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mcpl/medium.hpp"

using namespace mcpl;

TEST_CASE("absorption matches the independently evaluated reference point") {
    // 20 C, 70 %, 101.325 kPa at 40 kHz, evaluated with a standalone script
    // over the ISO 9613-1 relaxation formulas and frozen here.
    AirMedium medium;
    CHECK(absorption_coefficient(medium, 40000.0) == doctest::Approx(0.148007024980).epsilon(1e-9));
}

TEST_CASE("absorption vanishes toward DC and grows with frequency") {
    AirMedium medium;
    CHECK(absorption_coefficient(medium, 1e-3) < 1e-12);
    CHECK(absorption_coefficient(medium, 120000.0) > absorption_coefficient(medium, 40000.0));

    double prev = 0.0;
    for (double f = 20.0; f <= 200000.0; f *= 1.5) {
        const double a = absorption_coefficient(medium, f);
        CHECK(a >= prev);
        prev = a;
    }
}

TEST_CASE("absorption is deterministic") {
    AirMedium medium;
    const double a1 = absorption_coefficient(medium, 81234.5);
    const double a2 = absorption_coefficient(medium, 81234.5);
    CHECK(a1 == a2);
}

TEST_CASE("absorption rejects non-positive frequency") {
    AirMedium medium;
    CHECK_THROWS_AS(absorption_coefficient(medium, 0.0), contract_violation);
    CHECK_THROWS_AS(absorption_coefficient(medium, -10.0), contract_violation);
}

TEST_CASE("complex wavenumber real part is omega over c0") {
    AirMedium medium;
    const auto k = complex_wavenumber(medium, 40000.0);
    CHECK(k.real == doctest::Approx(2.0 * std::numbers::pi * 40000.0 / 343.0).epsilon(1e-15));
    CHECK(k.imag == absorption_coefficient(medium, 40000.0));

    // linear dispersion: doubling f doubles the real part exactly
    const auto k2 = complex_wavenumber(medium, 80000.0);
    CHECK(k2.real == doctest::Approx(2.0 * k.real).epsilon(1e-15));
}

TEST_CASE("exp(i k d) decays for positive distance") {
    AirMedium medium;
    for (double f : {100.0, 1000.0, 40000.0, 160000.0}) {
        const auto k = complex_wavenumber(medium, f);
        CHECK(k.imag >= 0.0);
        const double mag = std::abs(std::exp(std::complex<double>(0.0, 1.0) * k.value() * 3.0));
        CHECK(mag <= 1.0);
        CHECK(mag == doctest::Approx(std::exp(-k.imag * 3.0)));
    }
}

TEST_CASE("lossless_audio drops audio absorption only") {
    AirMedium medium;
    medium.lossless_audio = true;
    CHECK(audio_wavenumber(medium, 1000.0).imag == 0.0);
    CHECK(complex_wavenumber(medium, 1000.0).imag > 0.0);

    medium.lossless_audio = false;
    CHECK(audio_wavenumber(medium, 1000.0).imag ==
          complex_wavenumber(medium, 1000.0).imag);
}

TEST_CASE("medium invariants are enforced") {
    AirMedium m;
    m.density = 0.0;
    CHECK_THROWS_AS(m.validate(), contract_violation);
    m = AirMedium{};
    m.relative_humidity = 130.0;
    CHECK_THROWS_AS(m.validate(), contract_violation);
    m = AirMedium{};
    m.nonlinearity = -1.0;
    CHECK_THROWS_AS(m.validate(), contract_violation);
    CHECK_NOTHROW(AirMedium{}.validate());
}
