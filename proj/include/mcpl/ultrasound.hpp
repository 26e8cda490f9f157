#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mcpl/bessel.hpp"
#include "mcpl/errors.hpp"
#include "mcpl/fastmath.hpp"
#include "mcpl/medium.hpp"
#include "mcpl/parallel.hpp"
#include "mcpl/quadrature.hpp"

namespace mcpl {

/// Baffled circular piston radiating into the half space z > 0.
struct PistonSource {
    double radius = 0.1;            ///< a, m
    double surface_velocity = 1.0;  ///< v0, m/s

    void validate() const {
        if (!(radius > 0.0)) throw contract_violation("PistonSource: radius must be > 0");
        if (!(surface_velocity > 0.0))
            throw contract_violation("PistonSource: surface_velocity must be > 0");
    }
};

/// a^2 k / 2, the near-field / far-field transition of the piston.
inline double rayleigh_distance(const PistonSource& source, const AirMedium& medium,
                                double frequency_hz) {
    return 0.5 * source.radius * source.radius * complex_wavenumber(medium, frequency_hz).real;
}

/// Exact on-axis pressure, p(z) = (omega rho0 v0 / k)(e^{ikz} - e^{ik R_a})
/// with R_a = sqrt(z^2 + a^2); holds for complex k. Used to pick truncation
/// bounds quickly; the quadrature backends never call it, so it stays usable
/// as an independent oracle of those paths.
inline std::complex<double> piston_onaxis_pressure(const PistonSource& source,
                                                   const AirMedium& medium, double frequency_hz,
                                                   double z) {
    const std::complex<double> k = complex_wavenumber(medium, frequency_hz).value();
    const double omega = 2.0 * std::numbers::pi * frequency_hz;
    const std::complex<double> i{0.0, 1.0};
    const double ra = std::sqrt(z * z + source.radius * source.radius);
    return omega * medium.density * source.surface_velocity / k *
           (std::exp(i * k * z) - std::exp(i * k * ra));
}

/// Cylindrical sampling grid in front of the baffle (z > 0, axisymmetric).
struct CylGrid {
    std::vector<double> radial;  ///< rho >= 0, strictly increasing, m
    std::vector<double> axial;   ///< z > 0, strictly increasing, m

    void validate() const {
        if (radial.empty() || axial.empty())
            throw contract_violation("CylGrid: node lists must be non-empty");
        for (size_t i = 0; i < radial.size(); ++i) {
            if (radial[i] < 0.0 || (i > 0 && radial[i] <= radial[i - 1]))
                throw contract_violation("CylGrid: radial nodes must be >= 0, strictly increasing");
        }
        for (size_t i = 0; i < axial.size(); ++i) {
            if (axial[i] <= 0.0 || (i > 0 && axial[i] <= axial[i - 1]))
                throw contract_violation("CylGrid: axial nodes must be > 0, strictly increasing");
        }
    }
};

/// One frequency of the linear ultrasound field sampled on a CylGrid.
/// Layout: pressure[iz * radial.size() + ir].
struct UltraFieldGrid {
    CylGrid grid;
    double frequency = 0.0;
    std::vector<std::complex<double>> pressure;

    std::complex<double> at(size_t iz, size_t ir) const {
        return pressure[iz * grid.radial.size() + ir];
    }
};

enum class FieldBackend { rayleigh, king };

inline FieldBackend backend_from_string(const std::string& s) {
    if (s == "rayleigh") return FieldBackend::rayleigh;
    if (s == "king") return FieldBackend::king;
    throw config_error("unknown field backend '" + s + "' (expected rayleigh|king)");
}

namespace detail {

/// One fixed-resolution pass of the polar disc quadrature for the Rayleigh
/// integral. `mult` scales both panel counts.
inline std::complex<double> rayleigh_pass(const PistonSource& src, std::complex<double> k,
                                          double omega, double rho0, double rho, double z,
                                          const quad::QuadSpec& spec, int mult) {
    const double a = src.radius;
    // Phase spans of exp(ikd) across the disc, used to size the panels.
    const double d00 = std::hypot(z, rho - a), d01 = std::hypot(z, rho + a), dc = std::hypot(z, rho);
    const double radial_span = k.real() * (std::max(d00, d01) - std::min({d00, d01, dc})) + 2.0;
    const double angular_span = k.real() * (d01 - d00) + 2.0;
    const int np_r = mult * quad::panel_count(radial_span, spec, 2);
    const int np_p = mult * quad::panel_count(angular_span, spec, 1);
    const quad::CompositeRule rr(0.0, a, np_r, spec.panel_order);
    const quad::CompositeRule rp(0.0, std::numbers::pi, np_p, spec.panel_order);

    std::complex<double> acc{0.0, 0.0};
    for (size_t i = 0; i < rr.nodes.size(); ++i) {
        const double sig = rr.nodes[i];
        const double base = z * z + rho * rho + sig * sig;
        const double cross = 2.0 * rho * sig;
        std::complex<double> inner{0.0, 0.0};
        for (size_t j = 0; j < rp.nodes.size(); ++j) {
            const double d = std::sqrt(base - cross * std::cos(rp.nodes[j]));
            const double att = std::exp(-k.imag() * d);
            inner += rp.weights[j] * att / d *
                     std::complex<double>(std::cos(k.real() * d), std::sin(k.real() * d));
        }
        acc += rr.weights[i] * sig * inner;
    }
    acc *= 2.0;  // phi symmetric about 0
    return std::complex<double>(0.0, -1.0) * (omega * rho0 * src.surface_velocity /
                                              (2.0 * std::numbers::pi)) * acc;
}

/// Spectral (King-type) rule for one z slice: nodes mu_j with premultiplied
/// complex coefficients so that p(rho) = pref * sum_j coeff_j * J0(mu_j rho).
///
/// Propagating segment substitutes mu = kr sin(theta); the Jacobian cancels
/// the 1/k_z singularity at mu -> kr. Evanescent segment substitutes
/// mu = kr cosh(u) and is truncated where exp(Im k_z * z) drops below the
/// configured cutoff.
struct SpectralSliceRule {
    std::vector<double> mu;
    std::vector<std::complex<double>> coeff;
};

inline SpectralSliceRule king_slice_rule(const PistonSource& src, std::complex<double> k, double z,
                                         double rho_max, const quad::QuadSpec& spec, int mult) {
    const double a = src.radius;
    const double kr = k.real();
    const std::complex<double> k2 = k * k;
    SpectralSliceRule rule;

    const double prop_span = kr * (z + a + rho_max);
    const int np1 = mult * quad::panel_count(prop_span, spec, 2);
    const quad::CompositeRule seg1(0.0, 0.5 * std::numbers::pi, np1, spec.panel_order);

    const double zc = std::max(z, 1e-3);
    const double u_max = std::asinh(std::log(1.0 / spec.evanescent_cutoff) / (kr * zc));
    const double evan_span = kr * (a + rho_max) * std::sinh(u_max);
    const int np2 = mult * quad::panel_count(evan_span, spec, 1);
    const quad::CompositeRule seg2(0.0, u_max, np2, spec.panel_order);

    rule.mu.reserve(seg1.nodes.size() + seg2.nodes.size());
    rule.coeff.reserve(seg1.nodes.size() + seg2.nodes.size());
    for (size_t j = 0; j < seg1.nodes.size(); ++j) {
        const double th = seg1.nodes[j];
        const double mu = kr * std::sin(th);
        std::complex<double> kz = std::sqrt(k2 - mu * mu);
        if (kz.imag() < 0.0) kz = -kz;
        rule.mu.push_back(mu);
        rule.coeff.push_back(seg1.weights[j] * bessel::j1(mu * a) *
                             std::exp(std::complex<double>(0.0, 1.0) * kz * z) *
                             (kr * std::cos(th) / kz));
    }
    for (size_t j = 0; j < seg2.nodes.size(); ++j) {
        const double u = seg2.nodes[j];
        const double mu = kr * std::cosh(u);
        std::complex<double> kz = std::sqrt(k2 - mu * mu);
        if (kz.imag() < 0.0) kz = -kz;
        rule.mu.push_back(mu);
        rule.coeff.push_back(seg2.weights[j] * bessel::j1(mu * a) *
                             std::exp(std::complex<double>(0.0, 1.0) * kz * z) *
                             (kr * std::sinh(u) / kz));
    }
    return rule;
}

inline std::complex<double> king_apply(const SpectralSliceRule& rule, double rho) {
    std::complex<double> acc{0.0, 0.0};
    for (size_t j = 0; j < rule.mu.size(); ++j) acc += rule.coeff[j] * bessel::j0(rule.mu[j] * rho);
    return acc;
}

/// Bulk variant for dense radial sampling; the float trig path costs ~1e-7
/// absolute per node, well under the rule's own tolerance.
inline std::complex<double> king_apply_fast(const SpectralSliceRule& rule, double rho) {
    std::complex<double> acc{0.0, 0.0};
    for (size_t j = 0; j < rule.mu.size(); ++j)
        acc += rule.coeff[j] * fastmath::j0(rule.mu[j] * rho);
    return acc;
}

}  // namespace detail

/// Direct Rayleigh-integral pressure of the piston at (rho, z), z > 0.
/// Adaptive polar disc quadrature, panel counts doubled until the result is
/// stable to spec.rel_tol.
inline std::complex<double> rayleigh_pressure(const PistonSource& source, const AirMedium& medium,
                                              double frequency_hz, double rho, double z,
                                              const quad::QuadSpec& spec = {}) {
    source.validate();
    if (!(z > 0.0)) throw contract_violation("rayleigh_pressure: z must be > 0");
    rho = std::abs(rho);
    const std::complex<double> k = complex_wavenumber(medium, frequency_hz).value();
    const double omega = 2.0 * std::numbers::pi * frequency_hz;

    std::complex<double> prev =
        detail::rayleigh_pass(source, k, omega, medium.density, rho, z, spec, 1);
    for (int d = 1; d <= spec.max_doublings; ++d) {
        const std::complex<double> cur =
            detail::rayleigh_pass(source, k, omega, medium.density, rho, z, spec, 1 << d);
        const double change = std::abs(cur - prev);
        if (change <= spec.rel_tol * std::abs(cur)) return cur;
        prev = cur;
    }
    throw convergence_error("rayleigh_pressure: disc quadrature did not converge", prev,
                            std::abs(prev) * spec.rel_tol);
}

/// Spectral King-integral pressure at (rho, z). Equivalent to the Rayleigh
/// integral; much cheaper when many radii share one z.
inline std::complex<double> king_pressure(const PistonSource& source, const AirMedium& medium,
                                          double frequency_hz, double rho, double z,
                                          const quad::QuadSpec& spec = {}) {
    source.validate();
    if (!(z > 0.0)) throw contract_violation("king_pressure: z must be > 0");
    rho = std::abs(rho);
    const std::complex<double> k = complex_wavenumber(medium, frequency_hz).value();
    const double omega = 2.0 * std::numbers::pi * frequency_hz;
    const std::complex<double> pref = omega * medium.density * source.surface_velocity * source.radius;

    std::complex<double> prev =
        pref * detail::king_apply(detail::king_slice_rule(source, k, z, rho, spec, 1), rho);
    for (int d = 1; d <= spec.max_doublings; ++d) {
        const std::complex<double> cur =
            pref * detail::king_apply(detail::king_slice_rule(source, k, z, rho, spec, 1 << d), rho);
        const double change = std::abs(cur - prev);
        if (change <= spec.rel_tol * std::abs(cur)) return cur;
        prev = cur;
    }
    throw convergence_error("king_pressure: spectral quadrature did not converge", prev,
                            std::abs(prev) * spec.rel_tol);
}

/// One z slice of the King integral evaluated at many radii. The mu rule is
/// built once (resolution settled on two probe radii), then applied per rho.
inline void king_sample_slice(const PistonSource& source, const AirMedium& medium,
                              double frequency_hz, double z, std::span<const double> rhos,
                              std::span<std::complex<double>> out,
                              const quad::QuadSpec& spec = {}) {
    if (rhos.size() != out.size())
        throw contract_violation("king_sample_slice: output size mismatch");
    const std::complex<double> k = complex_wavenumber(medium, frequency_hz).value();
    const double omega = 2.0 * std::numbers::pi * frequency_hz;
    const std::complex<double> pref = omega * medium.density * source.surface_velocity * source.radius;
    const double rho_max = rhos.empty() ? 0.0 : rhos.back();

    // settle the resolution on two probe radii, then keep the cheapest rule
    // that a doubled rule confirmed
    detail::SpectralSliceRule rule = detail::king_slice_rule(source, k, z, rho_max, spec, 1);
    std::complex<double> p0 = detail::king_apply(rule, 0.0);
    std::complex<double> p1 = detail::king_apply(rule, rho_max);
    bool settled = false;
    for (int d = 1; d <= spec.max_doublings; ++d) {
        auto refined = detail::king_slice_rule(source, k, z, rho_max, spec, 1 << d);
        const std::complex<double> q0 = detail::king_apply(refined, 0.0);
        const std::complex<double> q1 = detail::king_apply(refined, rho_max);
        const double scale = std::max({std::abs(q0), std::abs(q1), 1e-300});
        const double change = std::max(std::abs(q0 - p0), std::abs(q1 - p1));
        if (change <= std::max(spec.rel_tol, 3e-6) * scale) {
            settled = true;
            break;
        }
        rule = std::move(refined);
        p0 = q0;
        p1 = q1;
    }
    if (!settled)
        throw convergence_error("king_sample_slice: spectral quadrature did not converge at z=" +
                                    std::to_string(z),
                                pref * p0, std::abs(p0) * spec.rel_tol);
    for (size_t i = 0; i < rhos.size(); ++i) out[i] = pref * detail::king_apply_fast(rule, rhos[i]);
}

/// Dense field sampling onto a cylindrical grid. Deterministic for fixed
/// inputs; slices are independent, so the loop parallelizes over z.
inline UltraFieldGrid sample_field(const PistonSource& source, const AirMedium& medium,
                                   double frequency_hz, const CylGrid& grid, FieldBackend backend,
                                   const quad::QuadSpec& spec = {}, unsigned threads = 1) {
    source.validate();
    grid.validate();
    UltraFieldGrid field;
    field.grid = grid;
    field.frequency = frequency_hz;
    field.pressure.resize(grid.radial.size() * grid.axial.size());
    const size_t nr = grid.radial.size();

    if (backend == FieldBackend::king) {
        parallel_for(grid.axial.size(), threads, [&](size_t iz) {
            king_sample_slice(source, medium, frequency_hz, grid.axial[iz], grid.radial,
                              std::span<std::complex<double>>(field.pressure.data() + iz * nr, nr),
                              spec);
        });
    } else {
        parallel_for(grid.axial.size(), threads, [&](size_t iz) {
            for (size_t ir = 0; ir < nr; ++ir)
                field.pressure[iz * nr + ir] = rayleigh_pressure(
                    source, medium, frequency_hz, grid.radial[ir], grid.axial[iz], spec);
        });
    }
    return field;
}

}  // namespace mcpl
