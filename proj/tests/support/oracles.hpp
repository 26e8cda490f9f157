#pragma once

// Test-only reference solutions, kept independent of the solver paths they
// check: closed forms, dense brute-force integration, and a radix-2 FFT for
// spectral assertions.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mcpl/medium.hpp"
#include "mcpl/ultrasound.hpp"

namespace oracle {

/// Exact on-axis pressure of the baffled piston,
/// p(z) = (omega rho0 v0 / k) (e^{ikz} - e^{ik sqrt(z^2+a^2)}), valid for
/// complex k. Lossless magnitude reduces to 2 rho0 c0 v0 |sin(k(R-z)/2)|.
inline std::complex<double> onaxis_piston(const mcpl::PistonSource& src,
                                          const mcpl::AirMedium& medium, double f, double z) {
    const std::complex<double> k = mcpl::complex_wavenumber(medium, f).value();
    const double omega = 2.0 * std::numbers::pi * f;
    const std::complex<double> i{0.0, 1.0};
    const double ra = std::sqrt(z * z + src.radius * src.radius);
    return omega * medium.density * src.surface_velocity / k *
           (std::exp(i * k * z) - std::exp(i * k * ra));
}

/// Far-field on-axis asymptote |p| -> rho0 c0 v0 k a^2 / (2 z).
inline double onaxis_farfield(const mcpl::PistonSource& src, const mcpl::AirMedium& medium,
                              double f, double z) {
    const double k = mcpl::complex_wavenumber(medium, f).real;
    return medium.density * medium.sound_speed * src.surface_velocity * k * src.radius *
           src.radius / (2.0 * z);
}

/// In-place radix-2 FFT (decimation in time). n must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

/// Magnitude spectrum of a real signal; bins 0..n/2.
inline std::vector<double> magnitude_spectrum(const std::vector<double>& samples) {
    std::vector<std::complex<double>> buf(samples.begin(), samples.end());
    fft(buf);
    std::vector<double> mag(buf.size() / 2 + 1);
    for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(buf[i]);
    return mag;
}

}  // namespace oracle
