#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "mcpl/errors.hpp"
#include "mcpl/medium.hpp"
#include "mcpl/parallel.hpp"
#include "mcpl/quadrature.hpp"
#include "mcpl/ultrasound.hpp"

namespace mcpl {

/// One ultrasonic carrier with its sideband pair at fc -/+ fa/2.
/// The sideband drive weights w1, w2 matter for signal synthesis only; the
/// audio field model depends on them through audio_weight() = conj(w1) * w2.
struct CarrierChannel {
    double center_frequency = 40000.0;  ///< fc, Hz
    double audio_frequency = 1000.0;    ///< fa, Hz
    std::complex<double> lower_weight{1.0, 0.0};  ///< w1
    std::complex<double> upper_weight{1.0, 0.0};  ///< w2

    double lower_frequency() const { return center_frequency - 0.5 * audio_frequency; }
    double upper_frequency() const { return center_frequency + 0.5 * audio_frequency; }
    std::complex<double> audio_weight() const { return std::conj(lower_weight) * upper_weight; }

    void validate() const {
        if (!(audio_frequency > 0.0))
            throw contract_violation("CarrierChannel: audio_frequency must be > 0");
        if (!(lower_frequency() > 20000.0))
            throw contract_violation("CarrierChannel: lower sideband must stay above 20 kHz (fc=" +
                                     std::to_string(center_frequency) + " Hz)");
    }
};

/// Ordered carrier channels sharing one audio frequency. Carrier spacing must
/// exceed 20 kHz so the demodulated contributions superpose linearly.
struct CarrierSet {
    std::vector<CarrierChannel> channels;

    CarrierSet() = default;
    CarrierSet(const std::vector<double>& carrier_hz, double audio_hz) {
        channels.reserve(carrier_hz.size());
        for (double fc : carrier_hz) channels.push_back({fc, audio_hz});
        validate();
    }

    size_t size() const { return channels.size(); }
    double audio_frequency() const {
        if (channels.empty()) throw contract_violation("CarrierSet: empty set has no frequency");
        return channels.front().audio_frequency;
    }

    void validate() const {
        if (channels.empty()) throw contract_violation("CarrierSet: at least one carrier required");
        for (const auto& ch : channels) ch.validate();
        const double fa = channels.front().audio_frequency;
        for (const auto& ch : channels)
            if (ch.audio_frequency != fa)
                throw contract_violation("CarrierSet: all channels must share the audio frequency");
        for (size_t i = 0; i < channels.size(); ++i)
            for (size_t j = i + 1; j < channels.size(); ++j)
                if (std::abs(channels[i].center_frequency - channels[j].center_frequency) <= 20000.0)
                    throw contract_violation(
                        "CarrierSet: carrier spacing must exceed 20 kHz (got " +
                        std::to_string(channels[i].center_frequency) + " and " +
                        std::to_string(channels[j].center_frequency) + " Hz)");
    }
};

/// Virtual audio source density of the quasilinear Westervelt solution:
/// q = -i beta omega_a / (rho0^2 c0^4) * conj(p_lower) * p_upper, unit 1/s.
inline std::complex<double> virtual_source_density(std::complex<double> ultra_lower,
                                                   std::complex<double> ultra_upper,
                                                   const AirMedium& medium,
                                                   double audio_frequency_hz) {
    const double omega_a = 2.0 * std::numbers::pi * audio_frequency_hz;
    const double c0 = medium.sound_speed;
    const double scale = medium.nonlinearity * omega_a / (medium.density * medium.density * c0 * c0 * c0 * c0);
    return std::complex<double>(0.0, -scale) * std::conj(ultra_lower) * ultra_upper;
}

/// SPL re 20 uPa. Zero magnitude maps to -infinity.
inline double spl(std::complex<double> pressure) {
    const double mag = std::abs(pressure);
    if (mag == 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(mag / 20e-6);
}

/// Truncation of the virtual-source volume. Zeros mean "derive from the
/// sideband decay": z_max where the on-axis amplitude product has dropped
/// decay_db below its maximum, rho_max = 3a + z_max * sin(first-null angle
/// of the lower sideband).
struct VolumeTruncation {
    double z_min = 1e-3;    ///< m
    double z_max = 0.0;     ///< m, 0 = auto
    double rho_max = 0.0;   ///< m, 0 = auto
    double decay_db = 60.0;

    void validate() const {
        if (!(z_min > 0.0)) throw contract_violation("VolumeTruncation: z_min must be > 0");
        if (z_max != 0.0 && !(z_max > z_min))
            throw contract_violation("VolumeTruncation: z_max must exceed z_min");
        if (rho_max != 0.0 && !(rho_max > 0.0))
            throw contract_violation("VolumeTruncation: rho_max must be > 0");
    }
};

/// Node-count controls for the volume quadrature of the audio transfer
/// integral. axial_nodes == 0 picks the phase-adaptive layout.
struct TransferQuadSpec {
    quad::QuadSpec base;
    int axial_nodes = 0;
    int radial_nodes = 128;

    TransferQuadSpec refined(double factor) const {
        TransferQuadSpec s = *this;
        s.base = s.base.refined(factor);
        if (s.axial_nodes > 0) s.axial_nodes = static_cast<int>(std::lround(s.axial_nodes * factor));
        s.radial_nodes = static_cast<int>(std::lround(s.radial_nodes * factor));
        return s;
    }
};

/// Provenance carried by every transfer grid; enough to rebuild the grid
/// bit-identically from the same config.
struct TransferProvenance {
    VolumeTruncation truncation;        // resolved bounds (no zeros)
    int axial_nodes = 0;                // realized counts
    int radial_nodes = 0;
    double phase_per_panel = 0.0;
    double rel_tol = 0.0;
    double refine = 1.0;
    int backend = 1;                    // FieldBackend as int
    bool truncation_warning = false;    // sideband product not decayed at z_max
    double achieved_decay_db = 0.0;
};

/// Sampled per-carrier audio transfer functions H_a,n over observation points
/// in the Oxz plane. One column per carrier, row-major storage.
struct AudioTransferGrid {
    std::vector<std::array<double, 2>> points;  ///< (x, z), m
    std::vector<double> carrier_frequencies;    ///< Hz, column order
    double audio_frequency = 0.0;               ///< Hz
    std::vector<std::complex<double>> values;   ///< [point * n_carriers + carrier], Pa
    TransferProvenance provenance;

    size_t carriers() const { return carrier_frequencies.size(); }
    std::complex<double> at(size_t point, size_t carrier) const {
        return values[point * carrier_frequencies.size() + carrier];
    }
};

/// Linear superposition of the virtual channels: p_a = sum_n w_n H_a,n.
inline std::complex<double> audio_pressure(std::span<const std::complex<double>> weights,
                                           std::span<const std::complex<double>> transfer_row) {
    if (weights.size() != transfer_row.size())
        throw contract_violation("audio_pressure: weights and transfer row length mismatch");
    std::complex<double> acc{0.0, 0.0};
    for (size_t n = 0; n < weights.size(); ++n) acc += weights[n] * transfer_row[n];
    return acc;
}

namespace detail {

/// cos(phi_j) for the shared angular rules, cached per panel count.
inline const std::vector<double>& angular_cosines(int panels, int order) {
    static std::map<std::pair<int, int>, std::vector<double>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(panels, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    quad::CompositeRule rule(0.0, std::numbers::pi, panels, order);
    std::vector<double> cosines(rule.nodes.size());
    for (size_t j = 0; j < rule.nodes.size(); ++j) cosines[j] = std::cos(rule.nodes[j]);
    return cache.emplace(key, std::move(cosines)).first->second;
}

inline const quad::CompositeRule& angular_rule(int panels, int order) {
    static std::map<std::pair<int, int>, quad::CompositeRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(panels, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    return cache.emplace(key, quad::CompositeRule(0.0, std::numbers::pi, panels, order)).first->second;
}

}  // namespace detail

/// Shared-volume transfer solver for a whole carrier set.
///
/// All carriers are integrated over one quadrature grid (the union of the
/// per-carrier truncation volumes, which the lowest carrier dominates), so
/// the Green's kernel of an observation point is evaluated once and reused
/// across carriers. Immutable after construction; evaluation is pure.
class TransferSolver {
public:
    /// Supplies a sampled ultrasound grid; hook point for disk caching.
    using FieldProvider = std::function<UltraFieldGrid(double frequency_hz, const CylGrid& grid)>;

    TransferSolver(const PistonSource& source, const AirMedium& medium, const CarrierSet& carriers,
                   VolumeTruncation truncation = {}, TransferQuadSpec quad_spec = {},
                   FieldBackend backend = FieldBackend::king, unsigned threads = 1,
                   FieldProvider provider = nullptr)
        : source_(source), medium_(medium), carriers_(carriers), quad_spec_(quad_spec) {
        source_.validate();
        medium_.validate();
        carriers_.validate();
        truncation.validate();

        const double fa = carriers_.audio_frequency();
        k_audio_ = audio_wavenumber(medium_, fa).value();
        omega_audio_ = 2.0 * std::numbers::pi * fa;

        resolve_truncation(truncation);
        build_grid();

        if (!provider) {
            provider = [&](double f, const CylGrid& g) {
                return sample_field(source_, medium_, f, g, backend, quad_spec_.base, threads);
            };
        }
        provenance_.backend = static_cast<int>(backend);
        build_sources(provider, threads);
    }

    size_t carriers() const { return carriers_.size(); }
    const CarrierSet& carrier_set() const { return carriers_; }
    const CylGrid& quadrature_grid() const { return grid_; }
    const VolumeTruncation& truncation() const { return truncation_; }
    const TransferProvenance& provenance() const { return provenance_; }

    /// H_a,n for every carrier at one observation point (x, z), z > 0.
    ///
    /// The Green's kernel varies fastest where the source column passes the
    /// observation plane; the panels straddling z_obs are therefore skipped
    /// in the grid pass and re-integrated with graded sub-panels against
    /// interpolated (demodulated) source values.
    std::vector<std::complex<double>> transfer_row(double x, double z) const {
        if (!(z > 0.0)) throw contract_violation("TransferSolver: observation z must be > 0");
        x = std::abs(x);  // field is axisymmetric
        const size_t nc = carriers_.size();
        const size_t nr = grid_.radial.size();
        std::vector<std::complex<double>> acc(nc, {0.0, 0.0});

        const double kr = k_audio_.real();
        const double ki = k_audio_.imag();
        const double pp = quad_spec_.base.effective_phase_per_panel();

        // axial node range covered by the local re-integration window
        size_t skip_lo = grid_.axial.size(), skip_hi = skip_lo;
        double win_lo = 0.0, win_hi = 0.0;
        if (z > panel_edges_.front() && z < panel_edges_.back()) {
            const size_t order = static_cast<size_t>(quad_spec_.base.panel_order);
            const size_t np = panel_edges_.size() - 1;
            const size_t p = static_cast<size_t>(
                std::upper_bound(panel_edges_.begin(), panel_edges_.end(), z) -
                panel_edges_.begin() - 1);
            const size_t p_lo = p >= 2 ? p - 2 : 0;
            const size_t p_hi = std::min(np - 1, p + 2);
            win_lo = panel_edges_[p_lo];
            win_hi = panel_edges_[p_hi + 1];
            skip_lo = p_lo * order;
            skip_hi = std::min((p_hi + 1) * order, grid_.axial.size());
        }

        for (size_t iz = 0; iz < grid_.axial.size(); ++iz) {
            if (iz >= skip_lo && iz < skip_hi) continue;
            const double dz = z - grid_.axial[iz];
            const double dz2 = dz * dz;
            for (size_t ir = 0; ir < nr; ++ir) {
                const std::complex<double> kernel = point_kernel(x, dz2, grid_.radial[ir], kr, ki, pp);
                const std::complex<double>* q = &source_terms_[(iz * nr + ir) * nc];
                for (size_t n = 0; n < nc; ++n) acc[n] += q[n] * kernel;
            }
        }
        if (skip_lo < skip_hi) integrate_window(x, z, win_lo, win_hi, kr, ki, pp, acc);

        const std::complex<double> pref =
            std::complex<double>(0.0, -1.0) * medium_.density * omega_audio_;
        for (auto& v : acc) v *= pref;
        return acc;
    }

    /// Evaluate a whole list of points (deduplicated by |x| internally).
    AudioTransferGrid evaluate(const std::vector<std::array<double, 2>>& points,
                               unsigned threads = 1) const {
        AudioTransferGrid out;
        out.points = points;
        out.audio_frequency = carriers_.audio_frequency();
        for (const auto& ch : carriers_.channels)
            out.carrier_frequencies.push_back(ch.center_frequency);
        out.provenance = provenance_;
        const size_t nc = carriers_.size();
        out.values.assign(points.size() * nc, {0.0, 0.0});

        std::map<std::pair<double, double>, std::vector<size_t>> unique;
        for (size_t i = 0; i < points.size(); ++i)
            unique[{std::abs(points[i][0]), points[i][1]}].push_back(i);
        std::vector<std::pair<std::pair<double, double>, std::vector<size_t>>> work(unique.begin(),
                                                                                    unique.end());
        parallel_for(work.size(), threads, [&](size_t w) {
            const auto row = transfer_row(work[w].first.first, work[w].first.second);
            for (size_t idx : work[w].second)
                std::copy(row.begin(), row.end(), out.values.begin() + idx * nc);
        });
        return out;
    }

private:
    /// Worst-case local phase rate of the volume integrand along z.
    double axial_phase_rate(double zc) const {
        return ka2_ + ku_ * (1.0 - zc / std::sqrt(zc * zc + a2_));
    }

    /// Ring-averaged Green's kernel at one source node: on-axis closed angular
    /// form or the adaptive ring quadrature.
    std::complex<double> point_kernel(double x, double dz2, double rho, double kr, double ki,
                                      double phase_per_panel) const {
        if (x < 1e-12) {
            const double R = std::sqrt(dz2 + rho * rho);
            const double att = ki != 0.0 ? std::exp(static_cast<float>(-ki * R)) : 1.0;
            double s, c;
            fastmath::sincos(kr * R, s, c);
            return 0.5 * att / R * std::complex<double>(c, s);
        }
        return ring_kernel(x, dz2, rho, kr, ki, phase_per_panel);
    }

    /// Re-integrate the axial window [win_lo, win_hi] around the observation
    /// plane: sub-panels grow geometrically away from z_obs (down to the
    /// radial node scale) but never beyond the local phase budget of the
    /// 8-point sub-rule. Source values between grid slices come from 4-point
    /// Lagrange interpolation of the demodulated columns.
    void integrate_window(double x, double z, double win_lo, double win_hi, double kr, double ki,
                          double pp, std::vector<std::complex<double>>& acc) const {
        const size_t nc = carriers_.size();
        const size_t nr = grid_.radial.size();
        const size_t nz = grid_.axial.size();
        const double growth = std::pow(3.0, 1.0 / quad_spec_.base.refine);
        const double delta0 = std::max(grid_.radial.front(), 1e-4) / quad_spec_.base.refine;

        std::vector<double> edges{z};
        for (int side = 0; side < 2; ++side) {
            const double sign = side == 0 ? -1.0 : 1.0;
            const double bound = side == 0 ? win_lo : win_hi;
            double cur = z;
            double w = delta0;
            while (sign * (bound - cur) > 0.0) {
                const double step = std::min(w, 0.5 * pp / axial_phase_rate(cur));
                double next = cur + sign * step;
                if (sign * (bound - next) <= 0.0) next = bound;
                edges.push_back(next);
                cur = next;
                w *= growth;
            }
        }
        std::sort(edges.begin(), edges.end());

        const quad::Rule& base = quad::gauss_legendre(8);
        std::vector<std::complex<double>> q_interp(nr * nc);
        for (size_t e = 0; e + 1 < edges.size(); ++e) {
            const double mid = 0.5 * (edges[e] + edges[e + 1]);
            const double half = 0.5 * (edges[e + 1] - edges[e]);
            if (half <= 0.0) continue;
            for (size_t jn = 0; jn < base.nodes.size(); ++jn) {
                const double zv = mid + half * base.nodes[jn];
                const double wz = half * base.weights[jn];

                // 4-point stencil around zv on the global axial nodes
                size_t i1 = static_cast<size_t>(
                    std::upper_bound(grid_.axial.begin(), grid_.axial.end(), zv) -
                    grid_.axial.begin());
                size_t i0 = i1 >= 2 ? i1 - 2 : 0;
                if (i0 + 4 > nz) i0 = nz - 4;
                double lw[4];
                for (int s = 0; s < 4; ++s) {
                    double num = 1.0, den = 1.0;
                    for (int t = 0; t < 4; ++t) {
                        if (t == s) continue;
                        num *= zv - grid_.axial[i0 + t];
                        den *= grid_.axial[i0 + s] - grid_.axial[i0 + t];
                    }
                    lw[s] = num / den;
                }
                double sm, cm;
                fastmath::sincos(kr_q_ * zv, sm, cm);
                const std::complex<double> remod(cm, sm);
                for (size_t n = 0; n < nc; ++n) {
                    for (size_t ir = 0; ir < nr; ++ir) {
                        const std::complex<double>* c = &demod_[(n * nr + ir) * nz + i0];
                        q_interp[ir * nc + n] =
                            (lw[0] * c[0] + lw[1] * c[1] + lw[2] * c[2] + lw[3] * c[3]) * remod;
                    }
                }

                const double dz2 = (z - zv) * (z - zv);
                for (size_t ir = 0; ir < nr; ++ir) {
                    const std::complex<double> kernel =
                        point_kernel(x, dz2, grid_.radial[ir], kr, ki, pp);
                    const std::complex<double>* q = &q_interp[ir * nc];
                    for (size_t n = 0; n < nc; ++n) acc[n] += wz * q[n] * kernel;
                }
            }
        }
    }

    /// Angular integral of the free-space Green's function over a source ring,
    /// divided by 4 pi: (1/2 pi) * int_0^pi exp(ikR)/R dphi.
    /// Panels sized by the phase span; graded refinement when the ring passes
    /// near the observation point and the 1/R peak gets narrow.
    std::complex<double> ring_kernel(double x, double dz2, double rho, double kr, double ki,
                                     double phase_per_panel) const {
        const double sum2 = dz2 + (x + rho) * (x + rho);
        const double diff2 = dz2 + (x - rho) * (x - rho);
        const double r_max = std::sqrt(sum2);
        const double r_min = std::sqrt(diff2);
        const double span = kr * (r_max - r_min);

        const double xr = x * rho;
        const double peak_width = r_min / std::sqrt(xr);  // rad, half-width of the 1/R peak
        std::complex<double> acc{0.0, 0.0};

        if (peak_width < 0.35) {
            // Geometrically growing panels away from the closest approach at
            // phi = 0; each panel also respects the local phase budget.
            const quad::Rule& base = quad::gauss_legendre(8);
            const double generic_width =
                std::numbers::pi / std::max(1.0, std::ceil((span + 2.0) / phase_per_panel));
            double lo = 0.0;
            double w = std::max(peak_width, 1e-9);
            while (lo < std::numbers::pi) {
                const double r_lo = std::sqrt(diff2 + 2.0 * xr * (1.0 - std::cos(lo)));
                const double slope = kr * xr * std::sin(std::min(lo + w, 0.5 * std::numbers::pi)) / r_lo;
                double width = std::min({w, slope > 0.0 ? phase_per_panel / slope : w,
                                         std::numbers::pi - lo});
                const double mid = lo + 0.5 * width, half = 0.5 * width;
                for (size_t j = 0; j < base.nodes.size(); ++j) {
                    const double phi = mid + half * base.nodes[j];
                    const double R = std::sqrt(diff2 + 2.0 * xr * (1.0 - std::cos(phi)));
                    const double att = ki != 0.0 ? std::exp(static_cast<float>(-ki * R)) : 1.0;
                    double s, c;
                    fastmath::sincos(kr * R, s, c);
                    acc += half * base.weights[j] * att / R * std::complex<double>(c, s);
                }
                lo += width;
                w = std::min(2.0 * w, generic_width);
            }
        } else {
            const int panels = std::max(1, static_cast<int>(std::ceil((span + 2.0) / phase_per_panel)));
            const quad::CompositeRule& rule = detail::angular_rule(panels, 16);
            const std::vector<double>& cosines = detail::angular_cosines(panels, 16);
            for (size_t j = 0; j < rule.nodes.size(); ++j) {
                const double R = std::sqrt(diff2 + 2.0 * xr * (1.0 - cosines[j]));
                const double att = ki != 0.0 ? std::exp(static_cast<float>(-ki * R)) : 1.0;
                double s, c;
                fastmath::sincos(kr * R, s, c);
                acc += rule.weights[j] * att / R * std::complex<double>(c, s);
            }
        }
        return acc / (2.0 * std::numbers::pi);
    }

    void resolve_truncation(VolumeTruncation trunc) {
        const quad::QuadSpec& qs = quad_spec_.base;
        double z_max = trunc.z_max;
        double achieved_db = 0.0;
        bool warn = false;
        if (z_max == 0.0) {
            // decay of the on-axis sideband amplitude product, lowest carrier
            // decays slowest (least absorption); exact on-axis form keeps the
            // scan free
            z_max = 0.0;
            for (const auto& ch : carriers_.channels) {
                double lo = 0.01, cap = 60.0;
                std::vector<double> zs;
                const int n = 960;
                for (int i = 0; i <= n; ++i)
                    zs.push_back(lo * std::pow(cap / lo, static_cast<double>(i) / n));
                std::vector<double> prod(zs.size());
                double peak = 0.0;
                for (size_t i = 0; i < zs.size(); ++i) {
                    const double p1 =
                        std::abs(piston_onaxis_pressure(source_, medium_, ch.lower_frequency(), zs[i]));
                    const double p2 =
                        std::abs(piston_onaxis_pressure(source_, medium_, ch.upper_frequency(), zs[i]));
                    prod[i] = p1 * p2;
                    peak = std::max(peak, prod[i]);
                }
                const double thr = peak * std::pow(10.0, -trunc.decay_db / 20.0);
                size_t last = 0;
                for (size_t i = 0; i < prod.size(); ++i)
                    if (prod[i] >= thr) last = i;
                const double zm = last + 1 < zs.size() ? zs[last + 1] : zs.back();
                if (last + 1 >= zs.size()) warn = true;
                z_max = std::max(z_max, zm);
                achieved_db = std::max(achieved_db, 20.0 * std::log10(peak / prod.back()));
            }
        } else {
            achieved_db = trunc.decay_db;  // user-pinned bound, decay not scanned
        }
        double rho_max = trunc.rho_max;
        if (rho_max == 0.0) {
            double widest = 0.0;
            for (const auto& ch : carriers_.channels) {
                const double k1 = complex_wavenumber(medium_, ch.lower_frequency()).real;
                const double s = std::min(1.0, 3.8317 / (k1 * source_.radius));
                widest = std::max(widest, std::sin(std::asin(s)));
            }
            rho_max = 3.0 * source_.radius + z_max * widest;
        }
        truncation_ = {trunc.z_min, z_max, rho_max, trunc.decay_db};
        provenance_.truncation = truncation_;
        provenance_.truncation_warning = warn;
        provenance_.achieved_decay_db = achieved_db;
        provenance_.phase_per_panel = qs.phase_per_panel;
        provenance_.rel_tol = qs.rel_tol;
        provenance_.refine = qs.refine;
    }

    void build_grid() {
        const double pp = quad_spec_.base.effective_phase_per_panel();
        const int order = quad_spec_.base.panel_order;

        // Radial: Gauss-Legendre panels over [0, rho_max].
        const int want_r = std::max(32, quad_spec_.radial_nodes);
        const int rp = std::max(2, (want_r + order / 2) / order);
        const quad::CompositeRule radial(0.0, truncation_.rho_max, rp, order);
        grid_.radial = radial.nodes;
        radial_weights_ = radial.weights;

        // Axial: phase-adaptive panels. Local phase rate combines the 2 k_a
        // oscillation of the back-radiating tail with the on-axis interference
        // rate of the lowest sideband, k_u (1 - z / sqrt(z^2 + a^2)), which
        // saturates at k_u near the baffle and falls off as k_u a^2 / (2 z^2).
        ka2_ = 2.0 * k_audio_.real();
        ku_ = std::numeric_limits<double>::max();
        for (const auto& ch : carriers_.channels)
            ku_ = std::min(ku_, complex_wavenumber(medium_, ch.lower_frequency()).real);
        a2_ = source_.radius * source_.radius;

        std::vector<double> edges{truncation_.z_min};
        while (edges.back() < truncation_.z_max) {
            const double zc = edges.back();
            double w = std::min(pp / axial_phase_rate(zc), 0.35 * zc / quad_spec_.base.refine);
            w = std::min(w, truncation_.z_max - zc);
            edges.push_back(zc + std::max(w, 1e-6));
        }
        edges.back() = truncation_.z_max;

        if (quad_spec_.axial_nodes > 0) {
            // honor an explicit node budget by scaling the adaptive layout
            const double scale =
                static_cast<double>(quad_spec_.axial_nodes) / (static_cast<double>(edges.size() - 1) * order);
            if (scale < 1.0) {
                const size_t target = std::max<size_t>(2, static_cast<size_t>((edges.size() - 1) * scale) + 1);
                std::vector<double> coarse;
                for (size_t i = 0; i < target; ++i) {
                    const double t = static_cast<double>(i) * (edges.size() - 1) / (target - 1);
                    coarse.push_back(edges[static_cast<size_t>(std::lround(t))]);
                }
                coarse.front() = truncation_.z_min;
                coarse.back() = truncation_.z_max;
                edges = std::move(coarse);
            }
        }
        const quad::CompositeRule axial = quad::panels_rule(edges, order);
        panel_edges_ = edges;
        grid_.axial = axial.nodes;
        axial_weights_ = axial.weights;
        grid_.validate();
        provenance_.axial_nodes = static_cast<int>(grid_.axial.size());
        provenance_.radial_nodes = static_cast<int>(grid_.radial.size());
    }

    void build_sources(const FieldProvider& provider, unsigned threads) {
        (void)threads;
        const size_t nc = carriers_.size();
        const size_t nr = grid_.radial.size();
        const size_t nz = grid_.axial.size();
        source_terms_.assign(nz * nr * nc, {0.0, 0.0});
        demod_.assign(nc * nr * nz, {0.0, 0.0});
        kr_q_ = k_audio_.real();
        const double fa = carriers_.audio_frequency();
        for (size_t n = 0; n < nc; ++n) {
            const auto& ch = carriers_.channels[n];
            const UltraFieldGrid lower = provider(ch.lower_frequency(), grid_);
            const UltraFieldGrid upper = provider(ch.upper_frequency(), grid_);
            if (lower.pressure.size() != nz * nr || upper.pressure.size() != nz * nr)
                throw contract_violation("TransferSolver: provider returned a mismatched grid");
            for (size_t iz = 0; iz < nz; ++iz) {
                const std::complex<double> demod =
                    std::exp(std::complex<double>(0.0, -kr_q_ * grid_.axial[iz]));
                for (size_t ir = 0; ir < nr; ++ir) {
                    const auto q = virtual_source_density(lower.pressure[iz * nr + ir],
                                                          upper.pressure[iz * nr + ir], medium_, fa);
                    const std::complex<double> qr = q * grid_.radial[ir] * radial_weights_[ir];
                    source_terms_[(iz * nr + ir) * nc + n] = qr * axial_weights_[iz];
                    demod_[(n * nr + ir) * nz + iz] = qr * demod;
                }
            }
        }
    }

    PistonSource source_;
    AirMedium medium_;
    CarrierSet carriers_;
    TransferQuadSpec quad_spec_;
    VolumeTruncation truncation_;
    TransferProvenance provenance_;
    CylGrid grid_;
    std::vector<double> panel_edges_;
    std::vector<double> radial_weights_;
    std::vector<double> axial_weights_;
    std::vector<std::complex<double>> source_terms_;  ///< q * rho * w_r * w_z, [node * nc + n]
    std::vector<std::complex<double>> demod_;  ///< q * rho * w_r * e^{-i k_a z}, [(n*nr+ir)*nz+iz]
    std::complex<double> k_audio_;
    double kr_q_ = 0.0;  ///< demodulation wavenumber of the stored columns
    double omega_audio_ = 0.0;
    double ka2_ = 0.0, ku_ = 0.0, a2_ = 0.0;  ///< axial phase-rate model
};

/// Single-point, single-carrier transfer function with unit sideband drive.
/// Convenience wrapper over TransferSolver for tests and spot checks.
inline std::complex<double> audio_transfer(const PistonSource& source, const AirMedium& medium,
                                           const CarrierChannel& channel,
                                           std::array<double, 2> observation_point,
                                           VolumeTruncation truncation = {},
                                           TransferQuadSpec quad_spec = {},
                                           FieldBackend backend = FieldBackend::king) {
    CarrierSet set;
    set.channels = {channel};
    TransferSolver solver(source, medium, set, truncation, quad_spec, backend);
    return solver.transfer_row(observation_point[0], observation_point[1]).front();
}

}  // namespace mcpl
