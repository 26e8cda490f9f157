#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "mcpl/errors.hpp"
#include "mcpl/nonlinear.hpp"

namespace mcpl {

enum class FactorMode {
    canonical,  ///< w1 = 1, w2 = w
    balanced    ///< |w1| = |w2| = sqrt(|w|)
};

/// Split an audio weight into a sideband pair with conj(w1) * w2 == w.
inline std::pair<std::complex<double>, std::complex<double>> factor_weights(
    std::complex<double> w, FactorMode mode = FactorMode::canonical) {
    if (mode == FactorMode::balanced) {
        const double mag = std::abs(w);
        if (mag == 0.0) return {{0.0, 0.0}, {0.0, 0.0}};
        const double root = std::sqrt(mag);
        return {{root, 0.0}, w / root};
    }
    return {{1.0, 0.0}, w};
}

/// Composite single-channel drive signal, peak-normalized for export.
struct DriveSignal {
    double sample_rate = 0.0;           ///< Hz
    double duration = 0.0;              ///< s
    std::vector<double> samples;        ///< |s| <= 1 after normalization
    double normalization_gain = 1.0;    ///< peak amplitude divided out
    CarrierSet carriers;
    std::vector<std::complex<double>> weights;
};

/// Sum of modulated sideband pairs, Re sum_n [w1 e^{-i w1n t} + w2 e^{-i w2n t}],
/// sampled on a uniform grid and scaled to unit peak.
inline DriveSignal synthesize(const CarrierSet& carriers,
                              const std::vector<std::complex<double>>& weights,
                              double sample_rate_hz, double duration_s,
                              FactorMode mode = FactorMode::canonical) {
    carriers.validate();
    if (weights.size() != carriers.size())
        throw contract_violation("synthesize: one weight per carrier required");
    if (!(duration_s > 0.0)) throw config_error("synthesize: duration must be > 0");
    for (const auto& ch : carriers.channels) {
        if (sample_rate_hz <= 2.0 * ch.upper_frequency())
            throw config_error("synthesize: sample rate " + std::to_string(sample_rate_hz) +
                               " Hz violates Nyquist for the sideband at " +
                               std::to_string(ch.upper_frequency()) + " Hz");
    }

    DriveSignal sig;
    sig.sample_rate = sample_rate_hz;
    sig.duration = duration_s;
    sig.carriers = carriers;
    sig.weights = weights;

    struct Tone {
        double omega;
        std::complex<double> amp;
    };
    std::vector<Tone> tones;
    for (size_t n = 0; n < carriers.size(); ++n) {
        const auto& ch = carriers.channels[n];
        const auto [w1, w2] = factor_weights(weights[n], mode);
        tones.push_back({2.0 * std::numbers::pi * ch.lower_frequency(), w1});
        tones.push_back({2.0 * std::numbers::pi * ch.upper_frequency(), w2});
    }

    const size_t count = static_cast<size_t>(std::llround(sample_rate_hz * duration_s));
    sig.samples.resize(count);
    double peak = 0.0;
    for (size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        double v = 0.0;
        for (const Tone& tone : tones) {
            // Re[amp * exp(-i omega t)]
            v += tone.amp.real() * std::cos(tone.omega * t) + tone.amp.imag() * std::sin(tone.omega * t);
        }
        sig.samples[i] = v;
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 0.0) {
        for (double& v : sig.samples) v /= peak;
    }
    sig.normalization_gain = peak;
    return sig;
}

/// Single-channel IEEE-float WAV, 32-bit.
inline void write_wav_float32(const std::filesystem::path& path, const DriveSignal& sig) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open " + path.string() + " for writing");

    const uint32_t n = static_cast<uint32_t>(sig.samples.size());
    const uint32_t sample_rate = static_cast<uint32_t>(std::lround(sig.sample_rate));
    const uint32_t data_bytes = n * 4;
    const uint32_t byte_rate = sample_rate * 4;

    auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

    out.write("RIFF", 4);
    put_u32(4 + 26 + 12 + 8 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(18);
    put_u16(3);  // IEEE float
    put_u16(1);  // mono
    put_u32(sample_rate);
    put_u32(byte_rate);
    put_u16(4);
    put_u16(32);
    put_u16(0);  // no extension
    out.write("fact", 4);
    put_u32(4);
    put_u32(n);
    out.write("data", 4);
    put_u32(data_bytes);
    for (double v : sig.samples) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
    if (!out) throw config_error("short write to " + path.string());
}

/// Two-column CSV (time, amplitude).
inline void write_signal_csv(const std::filesystem::path& path, const DriveSignal& sig) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open " + path.string() + " for writing");
    out << "time_s,amplitude\n";
    char buf[64];
    for (size_t i = 0; i < sig.samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", i / sig.sample_rate, sig.samples[i]);
        out << buf;
    }
}

}  // namespace mcpl
