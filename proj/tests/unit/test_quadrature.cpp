#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "mcpl/bessel.hpp"
#include "mcpl/quadrature.hpp"

using namespace mcpl;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    // order n is exact through degree 2n-1
    const auto& r8 = quad::gauss_legendre(8);
    double sum = 0.0, x15 = 0.0;
    for (size_t i = 0; i < r8.nodes.size(); ++i) {
        sum += r8.weights[i];
        x15 += r8.weights[i] * std::pow(r8.nodes[i], 14);
    }
    CHECK(sum == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(x15 == doctest::Approx(2.0 / 15.0).epsilon(1e-12));
}

TEST_CASE("gauss-legendre handles the design phase budget") {
    // 24 rad across one 16-point panel is the sizing rule everywhere
    const auto& r = quad::gauss_legendre(16);
    const double c = 24.0;
    std::complex<double> acc{0.0, 0.0};
    for (size_t i = 0; i < r.nodes.size(); ++i) {
        const double x = 0.5 * (r.nodes[i] + 1.0);
        acc += 0.5 * r.weights[i] * std::exp(std::complex<double>(0.0, c * x));
    }
    const std::complex<double> exact =
        (std::exp(std::complex<double>(0.0, c)) - 1.0) / std::complex<double>(0.0, c);
    CHECK(std::abs(acc - exact) / std::abs(exact) < 1e-8);
}

TEST_CASE("composite rule covers the interval") {
    quad::CompositeRule rule(1.0, 3.0, 5, 16);
    CHECK(rule.nodes.size() == 80);
    double sum = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        CHECK(rule.nodes[i] > 1.0);
        CHECK(rule.nodes[i] < 3.0);
        sum += rule.weights[i] * rule.nodes[i];  // integral of x over [1,3] = 4
    }
    CHECK(sum == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("panels_rule follows explicit edges") {
    const auto rule = quad::panels_rule({0.0, 0.1, 1.0, 10.0}, 8);
    CHECK(rule.nodes.size() == 24);
    double sum = 0.0;
    for (double w : rule.weights) sum += w;
    CHECK(sum == doctest::Approx(10.0).epsilon(1e-13));
}

TEST_CASE("panel_count respects refine") {
    quad::QuadSpec spec;
    const int base = quad::panel_count(100.0, spec);
    const int fine = quad::panel_count(100.0, spec.refined(2.0));
    CHECK(fine >= 2 * base - 1);
}

TEST_CASE("bessel j0/j1 track the standard library") {
    double max0 = 0.0, max1 = 0.0;
    for (double x = 0.01; x < 4000.0; x *= 1.03) {
        max0 = std::max(max0, std::abs(mcpl::bessel::j0(x) - std::cyl_bessel_j(0, x)));
        max1 = std::max(max1, std::abs(mcpl::bessel::j1(x) - std::cyl_bessel_j(1, x)));
    }
    CHECK(max0 < 2e-8);
    CHECK(max1 < 2e-8);
    CHECK(mcpl::bessel::j0(0.0) == doctest::Approx(1.0));
    CHECK(mcpl::bessel::j1(0.0) == doctest::Approx(0.0));
    CHECK(mcpl::bessel::j1(-2.5) == doctest::Approx(-mcpl::bessel::j1(2.5)));
}
