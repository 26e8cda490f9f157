#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mcpl/errors.hpp"
#include "mcpl/medium.hpp"
#include "mcpl/nonlinear.hpp"
#include "mcpl/szc.hpp"
#include "mcpl/ultrasound.hpp"

namespace mcpl {

using ordered_json = nlohmann::ordered_json;

/// Observation grid of the on-axis profile.
struct AxialProfileSpec {
    double z_min = 0.05, z_max = 10.0;
    int count = 200;
    bool log_spacing = true;

    std::vector<double> nodes() const {
        if (count < 2 || !(z_min > 0.0) || !(z_max > z_min))
            throw config_error("axial profile: need z_max > z_min > 0 and count >= 2");
        std::vector<double> z(count);
        for (int i = 0; i < count; ++i) {
            const double t = static_cast<double>(i) / (count - 1);
            z[i] = log_spacing ? z_min * std::pow(z_max / z_min, t)
                               : z_min + (z_max - z_min) * t;
        }
        return z;
    }
};

/// Observation grid of the Oxz field maps.
struct FieldMapSpec {
    double x_min = -1.0, x_max = 1.0;
    double z_min = 0.05, z_max = 6.0;
    int nx = 61, nz = 121;

    void validate() const {
        if (nx < 2 || nz < 2 || !(x_min < x_max) || !(z_min > 0.0) || !(z_max > z_min))
            throw config_error("field map: invalid extents or counts");
    }
};

/// Full experiment description; defaults reproduce the published setup at
/// desk resolution.
struct ExperimentConfig {
    AirMedium medium;
    PistonSource source;
    std::vector<double> audio_frequencies{500.0, 1000.0, 2000.0, 4000.0};
    std::vector<double> carrier_frequencies{40000.0, 80000.0, 120000.0, 160000.0};
    std::vector<int> carrier_counts{1, 2, 3, 4};
    ZoneSpec bright_zone{-0.2, 0.2, 0.1, 1.0, 10, 10};
    ZoneSpec dark_zone{-1.0, 1.0, 1.5, 6.0, 30, 45};
    AxialProfileSpec axial_profile;
    FieldMapSpec field_map;
    bool emit_field_maps = true;
    VolumeTruncation truncation;
    TransferQuadSpec quadrature;
    FieldBackend backend = FieldBackend::king;
    double regularization = 1e-8;
    std::filesystem::path cache_dir = "cache";
    std::filesystem::path output_dir = "out";
    unsigned threads = std::thread::hardware_concurrency();

    void validate() const {
        medium.validate();
        source.validate();
        if (audio_frequencies.empty()) throw config_error("config: audio_frequencies is empty");
        for (double fa : audio_frequencies) {
            // constructing the set enforces sideband and spacing rules
            CarrierSet set(carrier_frequencies, fa);
        }
        for (int n : carrier_counts)
            if (n < 1 || n > static_cast<int>(carrier_frequencies.size()))
                throw config_error("config: carrier_counts entries must be in [1, N]");
        bright_zone.validate();
        dark_zone.validate();
        field_map.validate();
        truncation.validate();
        if (regularization < 0.0) throw config_error("config: regularization must be >= 0");
    }

    /// Index of the 40 kHz carrier used for weight normalization, or 0.
    int normalize_index() const {
        for (size_t i = 0; i < carrier_frequencies.size(); ++i)
            if (carrier_frequencies[i] == 40000.0) return static_cast<int>(i);
        return 0;
    }
};

namespace detail {

inline void get_if(const ordered_json& j, const char* key, double& out) {
    if (j.contains(key)) out = j.at(key).get<double>();
}
inline void get_if(const ordered_json& j, const char* key, int& out) {
    if (j.contains(key)) out = j.at(key).get<int>();
}
inline void get_if(const ordered_json& j, const char* key, unsigned& out) {
    if (j.contains(key)) out = j.at(key).get<unsigned>();
}
inline void get_if(const ordered_json& j, const char* key, bool& out) {
    if (j.contains(key)) out = j.at(key).get<bool>();
}

inline ZoneSpec zone_from_json(const ordered_json& j, const ZoneSpec& defaults) {
    ZoneSpec z = defaults;
    if (j.contains("x")) {
        z.x_min = j.at("x").at(0).get<double>();
        z.x_max = j.at("x").at(1).get<double>();
    }
    if (j.contains("z")) {
        z.z_min = j.at("z").at(0).get<double>();
        z.z_max = j.at("z").at(1).get<double>();
    }
    get_if(j, "nx", z.nx);
    get_if(j, "nz", z.nz);
    return z;
}

inline ordered_json zone_to_json(const ZoneSpec& z) {
    return ordered_json{{"x", {z.x_min, z.x_max}}, {"z", {z.z_min, z.z_max}},
                        {"nx", z.nx}, {"nz", z.nz}};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const ordered_json& j) {
    ExperimentConfig cfg;
    try {
        if (j.contains("medium")) {
            const auto& m = j.at("medium");
            detail::get_if(m, "temperature_c", cfg.medium.temperature_c);
            detail::get_if(m, "relative_humidity", cfg.medium.relative_humidity);
            detail::get_if(m, "density", cfg.medium.density);
            detail::get_if(m, "sound_speed", cfg.medium.sound_speed);
            detail::get_if(m, "nonlinearity", cfg.medium.nonlinearity);
            detail::get_if(m, "ambient_pressure", cfg.medium.ambient_pressure);
            detail::get_if(m, "lossless_audio", cfg.medium.lossless_audio);
        }
        if (j.contains("source")) {
            const auto& s = j.at("source");
            detail::get_if(s, "radius", cfg.source.radius);
            detail::get_if(s, "surface_velocity", cfg.source.surface_velocity);
        }
        if (j.contains("audio_frequencies"))
            cfg.audio_frequencies = j.at("audio_frequencies").get<std::vector<double>>();
        if (j.contains("carrier_frequencies"))
            cfg.carrier_frequencies = j.at("carrier_frequencies").get<std::vector<double>>();
        if (j.contains("carrier_counts"))
            cfg.carrier_counts = j.at("carrier_counts").get<std::vector<int>>();
        if (j.contains("bright_zone"))
            cfg.bright_zone = detail::zone_from_json(j.at("bright_zone"), cfg.bright_zone);
        if (j.contains("dark_zone"))
            cfg.dark_zone = detail::zone_from_json(j.at("dark_zone"), cfg.dark_zone);
        if (j.contains("axial_profile")) {
            const auto& a = j.at("axial_profile");
            if (a.contains("z")) {
                cfg.axial_profile.z_min = a.at("z").at(0).get<double>();
                cfg.axial_profile.z_max = a.at("z").at(1).get<double>();
            }
            detail::get_if(a, "count", cfg.axial_profile.count);
            detail::get_if(a, "log_spacing", cfg.axial_profile.log_spacing);
        }
        if (j.contains("field_map")) {
            const auto& f = j.at("field_map");
            if (f.contains("x")) {
                cfg.field_map.x_min = f.at("x").at(0).get<double>();
                cfg.field_map.x_max = f.at("x").at(1).get<double>();
            }
            if (f.contains("z")) {
                cfg.field_map.z_min = f.at("z").at(0).get<double>();
                cfg.field_map.z_max = f.at("z").at(1).get<double>();
            }
            detail::get_if(f, "nx", cfg.field_map.nx);
            detail::get_if(f, "nz", cfg.field_map.nz);
        }
        detail::get_if(j, "emit_field_maps", cfg.emit_field_maps);
        if (j.contains("truncation")) {
            const auto& t = j.at("truncation");
            detail::get_if(t, "z_min", cfg.truncation.z_min);
            detail::get_if(t, "z_max", cfg.truncation.z_max);
            detail::get_if(t, "rho_max", cfg.truncation.rho_max);
            detail::get_if(t, "decay_db", cfg.truncation.decay_db);
        }
        if (j.contains("quadrature")) {
            const auto& q = j.at("quadrature");
            detail::get_if(q, "rel_tol", cfg.quadrature.base.rel_tol);
            detail::get_if(q, "phase_per_panel", cfg.quadrature.base.phase_per_panel);
            detail::get_if(q, "refine", cfg.quadrature.base.refine);
            detail::get_if(q, "axial_nodes", cfg.quadrature.axial_nodes);
            detail::get_if(q, "radial_nodes", cfg.quadrature.radial_nodes);
        }
        if (j.contains("backend")) cfg.backend = backend_from_string(j.at("backend").get<std::string>());
        detail::get_if(j, "regularization", cfg.regularization);
        if (j.contains("cache_dir")) cfg.cache_dir = j.at("cache_dir").get<std::string>();
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
        detail::get_if(j, "threads", cfg.threads);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config: malformed JSON structure: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline ordered_json config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["medium"] = {{"temperature_c", cfg.medium.temperature_c},
                   {"relative_humidity", cfg.medium.relative_humidity},
                   {"density", cfg.medium.density},
                   {"sound_speed", cfg.medium.sound_speed},
                   {"nonlinearity", cfg.medium.nonlinearity},
                   {"ambient_pressure", cfg.medium.ambient_pressure},
                   {"lossless_audio", cfg.medium.lossless_audio}};
    j["source"] = {{"radius", cfg.source.radius},
                   {"surface_velocity", cfg.source.surface_velocity}};
    j["audio_frequencies"] = cfg.audio_frequencies;
    j["carrier_frequencies"] = cfg.carrier_frequencies;
    j["carrier_counts"] = cfg.carrier_counts;
    j["bright_zone"] = detail::zone_to_json(cfg.bright_zone);
    j["dark_zone"] = detail::zone_to_json(cfg.dark_zone);
    j["axial_profile"] = {{"z", {cfg.axial_profile.z_min, cfg.axial_profile.z_max}},
                          {"count", cfg.axial_profile.count},
                          {"log_spacing", cfg.axial_profile.log_spacing}};
    j["field_map"] = {{"x", {cfg.field_map.x_min, cfg.field_map.x_max}},
                      {"z", {cfg.field_map.z_min, cfg.field_map.z_max}},
                      {"nx", cfg.field_map.nx},
                      {"nz", cfg.field_map.nz}};
    j["emit_field_maps"] = cfg.emit_field_maps;
    j["truncation"] = {{"z_min", cfg.truncation.z_min},
                       {"z_max", cfg.truncation.z_max},
                       {"rho_max", cfg.truncation.rho_max},
                       {"decay_db", cfg.truncation.decay_db}};
    j["quadrature"] = {{"rel_tol", cfg.quadrature.base.rel_tol},
                       {"phase_per_panel", cfg.quadrature.base.phase_per_panel},
                       {"refine", cfg.quadrature.base.refine},
                       {"axial_nodes", cfg.quadrature.axial_nodes},
                       {"radial_nodes", cfg.quadrature.radial_nodes}};
    j["backend"] = cfg.backend == FieldBackend::king ? "king" : "rayleigh";
    j["regularization"] = cfg.regularization;
    j["cache_dir"] = cfg.cache_dir.string();
    j["output_dir"] = cfg.output_dir.string();
    j["threads"] = cfg.threads;
    return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

/// desk = tractable observation resolution, paper = denser grids and finer
/// quadrature for figure-quality output.
inline ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "desk") return cfg;
    if (name == "paper") {
        cfg.axial_profile.count = 400;
        cfg.field_map.nx = 121;
        cfg.field_map.nz = 241;
        cfg.quadrature.base.refine = 2.0;
        cfg.quadrature.radial_nodes = 192;
        return cfg;
    }
    throw config_error("unknown preset '" + name + "' (expected desk|paper)");
}

/// FNV-1a over the canonical JSON dump; recorded in every output file so
/// equal hashes imply identical settings.
inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mcpl
