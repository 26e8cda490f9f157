#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "mcpl/cache.hpp"
#include "mcpl/config.hpp"
#include "mcpl/errors.hpp"
#include "mcpl/nonlinear.hpp"
#include "mcpl/szc.hpp"

namespace mcpl {

/// SPL samples over the Oxz observation grid for one variant.
struct FieldMap {
    std::vector<double> x;   ///< m
    std::vector<double> z;   ///< m
    std::vector<double> spl; ///< dB, [ix * z.size() + iz]
    double audio_frequency = 0.0;
    std::vector<std::complex<double>> weights;

    double at(size_t ix, size_t iz) const { return spl[ix * z.size() + iz]; }
};

/// One (audio frequency, carrier count) run.
struct VariantResult {
    double audio_frequency = 0.0;
    int carrier_count = 0;
    std::vector<std::complex<double>> weights;
    double contrast = 0.0;
    double contrast_db = 0.0;
    double eigen_residual = 0.0;
    EffectiveDistance effective_distance;
    std::vector<std::array<double, 2>> axial_profile;  ///< (z, spl)
    FieldMap map;                                      ///< empty when maps disabled
    std::string directory;                             ///< emitted files live here
};

struct ExperimentSummary {
    std::string config_hash;
    std::vector<VariantResult> variants;
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

inline void fnv_mix(uint64_t& h, const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
}

inline std::string hex64(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Physics-only hash: identical field content implies identical key, and the
/// key ignores where outputs go or how many threads run.
inline uint64_t physics_hash(const ExperimentConfig& cfg) {
    uint64_t h = 1469598103934665603ull;
    auto mixd = [&](double v) { fnv_mix(h, &v, sizeof(v)); };
    mixd(cfg.medium.temperature_c);
    mixd(cfg.medium.relative_humidity);
    mixd(cfg.medium.density);
    mixd(cfg.medium.sound_speed);
    mixd(cfg.medium.nonlinearity);
    mixd(cfg.medium.ambient_pressure);
    mixd(cfg.medium.lossless_audio ? 1.0 : 0.0);
    mixd(cfg.source.radius);
    mixd(cfg.source.surface_velocity);
    for (double f : cfg.carrier_frequencies) mixd(f);
    mixd(cfg.truncation.z_min);
    mixd(cfg.truncation.z_max);
    mixd(cfg.truncation.rho_max);
    mixd(cfg.truncation.decay_db);
    mixd(cfg.quadrature.base.rel_tol);
    mixd(cfg.quadrature.base.phase_per_panel);
    mixd(cfg.quadrature.base.refine);
    mixd(static_cast<double>(cfg.quadrature.axial_nodes));
    mixd(static_cast<double>(cfg.quadrature.radial_nodes));
    mixd(cfg.backend == FieldBackend::king ? 1.0 : 0.0);
    return h;
}

inline uint64_t grid_hash(double frequency_hz, const CylGrid& grid) {
    uint64_t h = 1469598103934665603ull;
    fnv_mix(h, &frequency_hz, sizeof(frequency_hz));
    fnv_mix(h, grid.radial.data(), grid.radial.size() * sizeof(double));
    fnv_mix(h, grid.axial.data(), grid.axial.size() * sizeof(double));
    return h;
}

inline uint64_t points_hash(const std::vector<std::array<double, 2>>& pts) {
    uint64_t h = 1469598103934665603ull;
    fnv_mix(h, pts.data(), pts.size() * sizeof(pts[0]));
    return h;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw config_error("cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out) throw config_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Ultrasound-field provider backed by the on-disk cache. Corrupt or
/// unreadable entries are recomputed and rewritten with a warning.
class CachedFieldProvider {
public:
    CachedFieldProvider(const ExperimentConfig& cfg, ProgressFn progress = nullptr)
        : cfg_(cfg), progress_(std::move(progress)) {
        std::filesystem::create_directories(cfg_.cache_dir);
        physics_ = detail::physics_hash(cfg_);
    }

    UltraFieldGrid operator()(double frequency_hz, const CylGrid& grid) const {
        uint64_t key = physics_;
        detail::fnv_mix(key, &frequency_hz, sizeof(frequency_hz));
        const uint64_t gh = detail::grid_hash(frequency_hz, grid);
        detail::fnv_mix(key, &gh, sizeof(gh));
        const auto path = cfg_.cache_dir / ("ultra_" + detail::hex64(key) + ".mcpl");

        if (std::filesystem::exists(path)) {
            try {
                UltraFieldGrid field = cache::load_ultra_field(path);
                if (field.frequency == frequency_hz && field.grid.radial == grid.radial &&
                    field.grid.axial == grid.axial)
                    return field;
                warn(path.string() + ": stale grid, recomputing");
            } catch (const cache_error& e) {
                warn(std::string(e.what()) + "; recomputing");
            }
        }
        if (progress_)
            progress_("sampling ultrasound field at " + std::to_string(frequency_hz) + " Hz (" +
                      std::to_string(grid.axial.size()) + " x " +
                      std::to_string(grid.radial.size()) + " nodes)");
        UltraFieldGrid field = sample_field(cfg_.source, cfg_.medium, frequency_hz, grid,
                                            cfg_.backend, cfg_.quadrature.base, cfg_.threads);
        cache::store(field, path);
        return field;
    }

private:
    void warn(const std::string& msg) const {
        if (progress_) progress_("cache: " + msg);
        else std::cerr << "warning: cache: " << msg << "\n";
    }

    ExperimentConfig cfg_;
    ProgressFn progress_;
    uint64_t physics_ = 0;
};

/// Build (or load from cache) the transfer grid of one carrier set over a
/// point list.
inline AudioTransferGrid compute_transfer_grid(const ExperimentConfig& cfg,
                                               const TransferSolver& solver,
                                               const std::vector<std::array<double, 2>>& points,
                                               const std::string& tag,
                                               ProgressFn progress = nullptr) {
    uint64_t key = detail::physics_hash(cfg);
    const double fa = solver.carrier_set().audio_frequency();
    detail::fnv_mix(key, &fa, sizeof(fa));
    const uint64_t ph = detail::points_hash(points);
    detail::fnv_mix(key, &ph, sizeof(ph));
    const auto path = cfg.cache_dir / ("transfer_" + detail::hex64(key) + ".mcpl");

    if (std::filesystem::exists(path)) {
        try {
            AudioTransferGrid grid = cache::load_audio_transfer(path);
            if (grid.points == points && grid.audio_frequency == fa &&
                grid.carriers() == solver.carriers())
                return grid;
            if (progress) progress("cache: " + path.string() + ": stale transfer grid, recomputing");
        } catch (const cache_error& e) {
            if (progress) progress("cache: " + std::string(e.what()) + "; recomputing");
            else std::cerr << "warning: cache: " << e.what() << "; recomputing\n";
        }
    }
    if (progress)
        progress("computing transfer grid '" + tag + "' (" + std::to_string(points.size()) +
                 " points, " + std::to_string(solver.carriers()) + " carriers)");
    AudioTransferGrid grid = solver.evaluate(points, cfg.threads);
    std::filesystem::create_directories(cfg.cache_dir);
    cache::store(grid, path);
    return grid;
}

inline void write_axial_csv(const std::filesystem::path& path,
                            const std::vector<std::array<double, 2>>& profile,
                            const std::string& hash) {
    std::string text = "# config_hash=" + hash + "\nz_m,spl_db\n";
    for (const auto& p : profile)
        text += detail::fmt_double(p[0]) + "," + detail::fmt_double(p[1]) + "\n";
    detail::write_text_atomic(path, text);
}

inline void write_map_csv(const std::filesystem::path& path, const FieldMap& map,
                          const std::string& hash) {
    std::string text = "# config_hash=" + hash + "\nx_m,z_m,spl_db\n";
    for (size_t ix = 0; ix < map.x.size(); ++ix)
        for (size_t iz = 0; iz < map.z.size(); ++iz)
            text += detail::fmt_double(map.x[ix]) + "," + detail::fmt_double(map.z[iz]) + "," +
                    detail::fmt_double(map.at(ix, iz)) + "\n";
    detail::write_text_atomic(path, text);
}

inline ordered_json weights_to_json(const std::vector<std::complex<double>>& w) {
    ordered_json arr = ordered_json::array();
    for (const auto& v : w) arr.push_back({{"re", v.real()}, {"im", v.imag()}});
    return arr;
}

/// Full pipeline: per audio frequency, sample the carrier transfer functions
/// once over every observation point, then solve ACC and emit files for each
/// carrier-count variant. Deterministic given config + cache.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, ProgressFn progress = nullptr) {
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    std::filesystem::create_directories(cfg.cache_dir);

    ExperimentSummary summary;
    summary.config_hash = config_hash(cfg);
    CachedFieldProvider provider(cfg, progress);

    const auto bright_pts = cfg.bright_zone.points();
    const auto dark_pts = cfg.dark_zone.points();
    const auto axial_z = cfg.axial_profile.nodes();

    std::vector<std::array<double, 2>> map_pts;
    std::vector<double> map_x, map_z;
    if (cfg.emit_field_maps) {
        for (int i = 0; i < cfg.field_map.nx; ++i)
            map_x.push_back(cfg.field_map.x_min +
                            (cfg.field_map.x_max - cfg.field_map.x_min) * i / (cfg.field_map.nx - 1.0));
        for (int j = 0; j < cfg.field_map.nz; ++j)
            map_z.push_back(cfg.field_map.z_min +
                            (cfg.field_map.z_max - cfg.field_map.z_min) * j / (cfg.field_map.nz - 1.0));
        for (double x : map_x)
            for (double z : map_z) map_pts.push_back({x, z});
    }

    std::vector<std::array<double, 2>> all_pts = bright_pts;
    all_pts.insert(all_pts.end(), dark_pts.begin(), dark_pts.end());
    for (double z : axial_z) all_pts.push_back({0.0, z});
    all_pts.insert(all_pts.end(), map_pts.begin(), map_pts.end());

    const size_t n_bright = bright_pts.size();
    const size_t n_dark = dark_pts.size();
    const size_t n_axial = axial_z.size();

    for (double fa : cfg.audio_frequencies) {
        const CarrierSet carriers(cfg.carrier_frequencies, fa);
        if (progress) progress("building transfer solver for fa=" + std::to_string(fa) + " Hz");
        TransferSolver solver(cfg.source, cfg.medium, carriers, cfg.truncation, cfg.quadrature,
                              cfg.backend, cfg.threads, std::ref(provider));
        const AudioTransferGrid grid = compute_transfer_grid(
            cfg, solver, all_pts, "fa" + std::to_string(static_cast<int>(fa)), progress);

        const size_t nc = carriers.size();
        Eigen::MatrixXcd bright_full(n_bright, nc), dark_full(n_dark, nc);
        for (size_t i = 0; i < n_bright; ++i)
            for (size_t n = 0; n < nc; ++n) bright_full(i, n) = grid.at(i, n);
        for (size_t i = 0; i < n_dark; ++i)
            for (size_t n = 0; n < nc; ++n) dark_full(i, n) = grid.at(n_bright + i, n);

        for (int count : cfg.carrier_counts) {
            VariantResult var;
            var.audio_frequency = fa;
            var.carrier_count = count;

            TransferMatrix bright{bright_full.leftCols(count)};
            TransferMatrix dark{dark_full.leftCols(count)};
            const int norm_idx = cfg.normalize_index() < count ? cfg.normalize_index() : 0;
            const AccSolution acc = acc_solve(bright, dark, cfg.regularization, norm_idx);
            var.weights.assign(acc.weights.data(), acc.weights.data() + acc.weights.size());
            var.contrast = acc.contrast;
            var.contrast_db = acc.contrast_db;
            var.eigen_residual = acc.eigen_residual;

            var.axial_profile.reserve(n_axial);
            for (size_t i = 0; i < n_axial; ++i) {
                const size_t row = n_bright + n_dark + i;
                std::complex<double> p{0.0, 0.0};
                for (int n = 0; n < count; ++n) p += var.weights[n] * grid.at(row, n);
                var.axial_profile.push_back({axial_z[i], spl(p)});
            }
            var.effective_distance = effective_propagation_distance(var.axial_profile);

            if (cfg.emit_field_maps) {
                var.map.x = map_x;
                var.map.z = map_z;
                var.map.audio_frequency = fa;
                var.map.weights = var.weights;
                var.map.spl.resize(map_x.size() * map_z.size());
                const size_t base = n_bright + n_dark + n_axial;
                for (size_t i = 0; i < map_pts.size(); ++i) {
                    std::complex<double> p{0.0, 0.0};
                    for (int n = 0; n < count; ++n) p += var.weights[n] * grid.at(base + i, n);
                    var.map.spl[i] = spl(p);
                }
            }

            const std::string name =
                "fa" + std::to_string(static_cast<int>(fa)) + "_n" + std::to_string(count);
            const auto dir = cfg.output_dir / name;
            std::filesystem::create_directories(dir);
            var.directory = dir.string();

            write_axial_csv(dir / "axial.csv", var.axial_profile, summary.config_hash);
            if (cfg.emit_field_maps) write_map_csv(dir / "map.csv", var.map, summary.config_hash);

            ordered_json metrics;
            metrics["config_hash"] = summary.config_hash;
            metrics["audio_frequency_hz"] = fa;
            metrics["carrier_count"] = count;
            metrics["weights"] = weights_to_json(var.weights);
            metrics["contrast"] = var.contrast;
            metrics["contrast_db"] = var.contrast_db;
            metrics["eigen_residual"] = var.eigen_residual;
            metrics["effective_distance_m"] = var.effective_distance.z;
            metrics["effective_distance_unbounded"] = var.effective_distance.unbounded;
            metrics["truncation"] = {{"z_min", grid.provenance.truncation.z_min},
                                     {"z_max", grid.provenance.truncation.z_max},
                                     {"rho_max", grid.provenance.truncation.rho_max},
                                     {"warning", grid.provenance.truncation_warning}};
            metrics["quadrature"] = {{"axial_nodes", grid.provenance.axial_nodes},
                                     {"radial_nodes", grid.provenance.radial_nodes},
                                     {"phase_per_panel", grid.provenance.phase_per_panel},
                                     {"refine", grid.provenance.refine}};
            detail::write_text_atomic(dir / "metrics.json", metrics.dump(2) + "\n");

            if (progress)
                progress(name + ": contrast " + std::to_string(var.contrast_db) + " dB, distance " +
                         std::to_string(var.effective_distance.z) + " m");
            summary.variants.push_back(std::move(var));
        }
    }

    ordered_json top;
    top["config_hash"] = summary.config_hash;
    top["config"] = config_to_json(cfg);
    ordered_json list = ordered_json::array();
    for (const auto& v : summary.variants) {
        list.push_back({{"audio_frequency_hz", v.audio_frequency},
                        {"carrier_count", v.carrier_count},
                        {"contrast_db", v.contrast_db},
                        {"effective_distance_m", v.effective_distance.z},
                        {"effective_distance_unbounded", v.effective_distance.unbounded},
                        {"directory", v.directory}});
    }
    top["variants"] = list;
    detail::write_text_atomic(cfg.output_dir / "summary.json", top.dump(2) + "\n");
    return summary;
}

}  // namespace mcpl
