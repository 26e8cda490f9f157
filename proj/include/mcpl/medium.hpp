#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "mcpl/errors.hpp"

namespace mcpl {

/// Ambient air state shared by all field solvers.
///
/// density and sound_speed are independent inputs rather than being derived
/// from temperature, so a published parameter table can be reproduced verbatim.
struct AirMedium {
    double temperature_c = 20.0;        ///< °C
    double relative_humidity = 70.0;    ///< %
    double density = 1.21;              ///< rho0, kg/m^3
    double sound_speed = 343.0;         ///< c0, m/s
    double nonlinearity = 1.2;          ///< beta, dimensionless
    double ambient_pressure = 101325.0; ///< Pa
    /// When set, audio-band wavenumbers are evaluated without absorption.
    /// Ultrasonic wavenumbers always keep absorption.
    bool lossless_audio = false;

    void validate() const {
        if (!(density > 0.0)) throw contract_violation("AirMedium: density must be > 0");
        if (!(sound_speed > 0.0)) throw contract_violation("AirMedium: sound_speed must be > 0");
        if (!(nonlinearity > 0.0)) throw contract_violation("AirMedium: nonlinearity must be > 0");
        if (!(relative_humidity >= 0.0 && relative_humidity <= 100.0))
            throw contract_violation("AirMedium: relative_humidity must be in [0, 100] %");
        if (!(ambient_pressure > 0.0))
            throw contract_violation("AirMedium: ambient_pressure must be > 0");
    }
};

/// k = real + i*imag with exp(i k d) decaying for d > 0.
struct ComplexWavenumber {
    double real = 0.0;  ///< rad/m, always omega / c0
    double imag = 0.0;  ///< Np/m attenuation, >= 0

    std::complex<double> value() const { return {real, imag}; }
};

/// Pure-tone atmospheric absorption after ISO 9613-1, in Np/m.
///
/// Oxygen and nitrogen relaxation plus the classical term. Inputs taken from
/// the medium state; pressure handled relative to the 101.325 kPa reference.
inline double absorption_coefficient(const AirMedium& medium, double frequency_hz) {
    if (!(frequency_hz > 0.0))
        throw contract_violation("absorption_coefficient: frequency must be > 0");

    const double T = medium.temperature_c + 273.15;
    const double T0 = 293.15;
    const double T01 = 273.16;  // triple point
    const double p_rel = medium.ambient_pressure / 101325.0;

    // molar concentration of water vapour, percent
    const double psat_rel = std::pow(10.0, -6.8346 * std::pow(T01 / T, 1.261) + 4.6151);
    const double h = medium.relative_humidity * psat_rel / p_rel;

    const double fr_o = p_rel * (24.0 + 4.04e4 * h * (0.02 + h) / (0.391 + h));
    const double fr_n = p_rel * std::pow(T / T0, -0.5) *
                        (9.0 + 280.0 * h * std::exp(-4.170 * (std::pow(T / T0, -1.0 / 3.0) - 1.0)));

    const double f2 = frequency_hz * frequency_hz;
    const double alpha_db_per_m =
        8.686 * f2 *
        (1.84e-11 / p_rel * std::sqrt(T / T0) +
         std::pow(T / T0, -2.5) * (0.01275 * std::exp(-2239.1 / T) / (fr_o + f2 / fr_o) +
                                   0.1068 * std::exp(-3352.0 / T) / (fr_n + f2 / fr_n)));

    return alpha_db_per_m / (20.0 / std::numbers::ln10);  // dB/m -> Np/m
}

/// Complex wavenumber at an ultrasonic or audio frequency, absorption included.
inline ComplexWavenumber complex_wavenumber(const AirMedium& medium, double frequency_hz) {
    if (!(frequency_hz > 0.0))
        throw contract_violation("complex_wavenumber: frequency must be > 0");
    return {2.0 * std::numbers::pi * frequency_hz / medium.sound_speed,
            absorption_coefficient(medium, frequency_hz)};
}

/// Audio-band wavenumber, honoring the lossless_audio switch.
inline ComplexWavenumber audio_wavenumber(const AirMedium& medium, double frequency_hz) {
    ComplexWavenumber k = complex_wavenumber(medium, frequency_hz);
    if (medium.lossless_audio) k.imag = 0.0;
    return k;
}

}  // namespace mcpl
