#include <doctest.h>

#include <cmath>
#include <random>

#include "mcpl/ultrasound.hpp"
#include "../support/oracles.hpp"

using namespace mcpl;

namespace {
AirMedium lossless_medium() {
    AirMedium m;
    return m;
}
const PistonSource kSource{0.1, 1.0};
}  // namespace

TEST_CASE("rayleigh quadrature matches the on-axis closed form within 0.1%") {
    AirMedium medium = lossless_medium();
    for (double z : {0.2, 1.0, 5.0}) {
        // lossless comparison: zero out absorption via a lossless-audio trick
        // is not applicable to ultrasound, so compare against the complex-k
        // closed form directly (valid for absorbing media too)
        const auto exact = oracle::onaxis_piston(kSource, medium, 40000.0, z);
        const auto quadr = rayleigh_pressure(kSource, medium, 40000.0, 0.0, z);
        CHECK(std::abs(quadr - exact) / std::abs(exact) < 1e-3);
    }
}

TEST_CASE("king integral matches the on-axis closed form within 0.1%") {
    AirMedium medium = lossless_medium();
    for (double f : {40000.0, 160000.0}) {
        for (double z : {0.2, 1.0, 5.0}) {
            const auto exact = oracle::onaxis_piston(kSource, medium, f, z);
            const auto spec = king_pressure(kSource, medium, f, 0.0, z);
            CHECK(std::abs(spec - exact) / std::abs(exact) < 1e-3);
        }
    }
}

TEST_CASE("far-field asymptote reached within 2% at z = 20 m") {
    AirMedium medium = lossless_medium();
    medium.relative_humidity = 70.0;
    // evaluate lossless: compare against asymptote with absorption factored out
    const double z = 20.0;
    const auto p = king_pressure(kSource, medium, 40000.0, 0.0, z);
    const double alpha = absorption_coefficient(medium, 40000.0);
    const double expect = oracle::onaxis_farfield(kSource, medium, 40000.0, z) * std::exp(-alpha * z);
    CHECK(std::abs(std::abs(p) - expect) / expect < 0.02);
}

TEST_CASE("field is linear in surface velocity") {
    AirMedium medium = lossless_medium();
    PistonSource doubled = kSource;
    doubled.surface_velocity = 2.0;
    const auto p1 = rayleigh_pressure(kSource, medium, 40000.0, 0.05, 0.7);
    const auto p2 = rayleigh_pressure(doubled, medium, 40000.0, 0.05, 0.7);
    CHECK(p2 == 2.0 * p1);  // exact: same nodes, linear prefactor
}

TEST_CASE("king agrees with rayleigh at random off-axis points") {
    AirMedium medium = lossless_medium();
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> rho_d(0.0, 1.2), z_d(0.05, 8.0);
    for (int i = 0; i < 12; ++i) {
        const double rho = rho_d(rng), z = z_d(rng);
        const auto pr = rayleigh_pressure(kSource, medium, 40000.0, rho, z);
        const auto pk = king_pressure(kSource, medium, 40000.0, rho, z);
        CHECK(std::abs(pk - pr) / std::abs(pr) < 5e-3);
    }
}

TEST_CASE("axisymmetry: negative radius reads as positive") {
    AirMedium medium = lossless_medium();
    CHECK(king_pressure(kSource, medium, 40000.0, -0.3, 1.0) ==
          king_pressure(kSource, medium, 40000.0, 0.3, 1.0));
}

TEST_CASE("amplitude decays beyond the Rayleigh distance") {
    AirMedium medium = lossless_medium();
    const double zr = rayleigh_distance(kSource, medium, 40000.0);
    const auto p1 = king_pressure(kSource, medium, 40000.0, 0.0, zr);
    const auto p2 = king_pressure(kSource, medium, 40000.0, 0.0, 2.0 * zr);
    CHECK(std::abs(p2) < std::abs(p1));
}

TEST_CASE("z <= 0 is rejected") {
    AirMedium medium = lossless_medium();
    CHECK_THROWS_AS(rayleigh_pressure(kSource, medium, 40000.0, 0.0, 0.0), contract_violation);
    CHECK_THROWS_AS(king_pressure(kSource, medium, 40000.0, 0.0, -1.0), contract_violation);
}

TEST_CASE("non-convergence reports estimate and bound") {
    AirMedium medium = lossless_medium();
    quad::QuadSpec strangled;
    strangled.rel_tol = 1e-30;
    strangled.max_doublings = 1;
    try {
        rayleigh_pressure(kSource, medium, 160000.0, 0.4, 0.3, strangled);
        FAIL("expected convergence_error");
    } catch (const convergence_error& e) {
        CHECK(std::abs(e.estimate()) > 0.0);
        CHECK(e.error_bound() >= 0.0);
    }
}

TEST_CASE("degenerate 1x1 grid equals the pointwise backend") {
    AirMedium medium = lossless_medium();
    CylGrid grid{{0.25}, {1.5}};
    const auto field = sample_field(kSource, medium, 40000.0, grid, FieldBackend::king);
    CHECK(field.pressure.size() == 1);
    // same slice machinery, but convergence is settled on probe radii; allow
    // the adaptive tolerance between the two paths
    const auto point = king_pressure(kSource, medium, 40000.0, 0.25, 1.5);
    CHECK(std::abs(field.at(0, 0) - point) / std::abs(point) < 1e-5);

    const auto fray = sample_field(kSource, medium, 40000.0, grid, FieldBackend::rayleigh);
    CHECK(std::abs(fray.at(0, 0) - point) / std::abs(point) < 1e-4);
}

TEST_CASE("resampling a grid is bit-identical") {
    AirMedium medium = lossless_medium();
    CylGrid grid{{0.0, 0.1, 0.2, 0.45}, {0.3, 0.9, 2.0}};
    const auto f1 = sample_field(kSource, medium, 40000.0, grid, FieldBackend::king);
    const auto f2 = sample_field(kSource, medium, 40000.0, grid, FieldBackend::king);
    REQUIRE(f1.pressure.size() == f2.pressure.size());
    for (size_t i = 0; i < f1.pressure.size(); ++i) CHECK(f1.pressure[i] == f2.pressure[i]);
}

TEST_CASE("grid invariants are enforced") {
    CylGrid bad{{0.2, 0.1}, {1.0}};
    CHECK_THROWS_AS(bad.validate(), contract_violation);
    CylGrid bad2{{0.0}, {0.0}};
    CHECK_THROWS_AS(bad2.validate(), contract_violation);
    CylGrid bad3{{}, {1.0}};
    CHECK_THROWS_AS(bad3.validate(), contract_violation);
}
