// Command-line front end: reproduces the localized-audible-zone experiments
// end to end (run), or computes individual artifacts (axial, map,
// solve-weights, synth, cache).

#include <CLI11.hpp>
#include <complex>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "mcpl/cache.hpp"
#include "mcpl/config.hpp"
#include "mcpl/experiment.hpp"
#include "mcpl/signal.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset = "desk";
    std::string backend;
    bool lossless_audio = false;
    std::string out_dir;
    std::string cache_dir;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file (preset values as base)");
    cmd->add_option("--preset", opts.preset, "desk|paper resolution preset")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--backend", opts.backend, "ultrasound backend: king|rayleigh")
        ->check(CLI::IsMember({"king", "rayleigh"}));
    cmd->add_flag("--lossless-audio", opts.lossless_audio,
                  "drop audio-band atmospheric absorption");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--cache", opts.cache_dir, "field cache directory");
    cmd->add_option("--threads", opts.threads, "worker threads (0 = hardware)");
}

mcpl::ExperimentConfig resolve_config(const CommonOpts& opts) {
    mcpl::ExperimentConfig cfg = mcpl::preset_config(opts.preset);
    if (!opts.config_path.empty()) {
        // file values override the preset; flags override the file
        mcpl::ordered_json base = mcpl::config_to_json(cfg);
        std::ifstream in(opts.config_path);
        if (!in) throw mcpl::config_error("cannot open config file " + opts.config_path);
        mcpl::ordered_json user;
        try {
            in >> user;
        } catch (const nlohmann::json::exception& e) {
            throw mcpl::config_error(opts.config_path + ": invalid JSON: " + e.what());
        }
        base.merge_patch(user);
        cfg = mcpl::config_from_json(base);
    }
    if (!opts.backend.empty()) cfg.backend = mcpl::backend_from_string(opts.backend);
    if (opts.lossless_audio) cfg.medium.lossless_audio = true;
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    if (!opts.cache_dir.empty()) cfg.cache_dir = opts.cache_dir;
    if (opts.threads > 0) cfg.threads = opts.threads;
    if (cfg.threads == 0) cfg.threads = 1;
    cfg.validate();
    return cfg;
}

void progress(const std::string& msg) { std::cerr << "[mcpl] " << msg << "\n"; }

/// ACC weights for the leading `count` carriers at one audio frequency.
mcpl::AccSolution solve_for(const mcpl::ExperimentConfig& cfg, double fa, int count,
                            mcpl::TransferSolver& solver) {
    const auto bright_pts = cfg.bright_zone.points();
    const auto dark_pts = cfg.dark_zone.points();
    std::vector<std::array<double, 2>> pts = bright_pts;
    pts.insert(pts.end(), dark_pts.begin(), dark_pts.end());
    const auto grid = mcpl::compute_transfer_grid(cfg, solver, pts, "zones", progress);

    Eigen::MatrixXcd bright(bright_pts.size(), count), dark(dark_pts.size(), count);
    for (size_t i = 0; i < bright_pts.size(); ++i)
        for (int n = 0; n < count; ++n) bright(i, n) = grid.at(i, n);
    for (size_t i = 0; i < dark_pts.size(); ++i)
        for (int n = 0; n < count; ++n) dark(i, n) = grid.at(bright_pts.size() + i, n);
    const int norm = cfg.normalize_index() < count ? cfg.normalize_index() : 0;
    return mcpl::acc_solve({bright}, {dark}, cfg.regularization, norm);
}

int cmd_run(const CommonOpts& opts, bool no_maps) {
    mcpl::ExperimentConfig cfg = resolve_config(opts);
    if (no_maps) cfg.emit_field_maps = false;
    const auto summary = mcpl::run_experiment(cfg, progress);
    std::cout << "config " << summary.config_hash << ": " << summary.variants.size()
              << " variants written to " << cfg.output_dir.string() << "\n";
    return 0;
}

int cmd_axial(const CommonOpts& opts, double fa, int count) {
    mcpl::ExperimentConfig cfg = resolve_config(opts);
    const mcpl::CarrierSet carriers(cfg.carrier_frequencies, fa);
    mcpl::CachedFieldProvider provider(cfg, progress);
    mcpl::TransferSolver solver(cfg.source, cfg.medium, carriers, cfg.truncation, cfg.quadrature,
                                cfg.backend, cfg.threads, std::ref(provider));
    const auto acc = solve_for(cfg, fa, count, solver);

    std::vector<std::array<double, 2>> pts;
    for (double z : cfg.axial_profile.nodes()) pts.push_back({0.0, z});
    const auto grid = mcpl::compute_transfer_grid(cfg, solver, pts, "axial", progress);

    std::vector<std::array<double, 2>> profile;
    for (size_t i = 0; i < pts.size(); ++i) {
        std::complex<double> p{0.0, 0.0};
        for (int n = 0; n < count; ++n) p += acc.weights(n) * grid.at(i, n);
        profile.push_back({pts[i][1], mcpl::spl(p)});
    }
    const auto dist = mcpl::effective_propagation_distance(profile);

    std::filesystem::create_directories(cfg.output_dir);
    const auto path = cfg.output_dir / ("axial_fa" + std::to_string(static_cast<int>(fa)) + "_n" +
                                        std::to_string(count) + ".csv");
    mcpl::write_axial_csv(path, profile, mcpl::config_hash(cfg));
    std::cout << path.string() << "\neffective distance: " << dist.z << " m"
              << (dist.unbounded ? " (unbounded)" : "") << "\ncontrast: " << acc.contrast_db
              << " dB\n";
    return 0;
}

int cmd_map(const CommonOpts& opts, double fa, int count) {
    mcpl::ExperimentConfig cfg = resolve_config(opts);
    const mcpl::CarrierSet carriers(cfg.carrier_frequencies, fa);
    mcpl::CachedFieldProvider provider(cfg, progress);
    mcpl::TransferSolver solver(cfg.source, cfg.medium, carriers, cfg.truncation, cfg.quadrature,
                                cfg.backend, cfg.threads, std::ref(provider));
    const auto acc = solve_for(cfg, fa, count, solver);

    mcpl::FieldMap map;
    map.audio_frequency = fa;
    map.weights.assign(acc.weights.data(), acc.weights.data() + acc.weights.size());
    for (int i = 0; i < cfg.field_map.nx; ++i)
        map.x.push_back(cfg.field_map.x_min +
                        (cfg.field_map.x_max - cfg.field_map.x_min) * i / (cfg.field_map.nx - 1.0));
    for (int j = 0; j < cfg.field_map.nz; ++j)
        map.z.push_back(cfg.field_map.z_min +
                        (cfg.field_map.z_max - cfg.field_map.z_min) * j / (cfg.field_map.nz - 1.0));
    std::vector<std::array<double, 2>> pts;
    for (double x : map.x)
        for (double z : map.z) pts.push_back({x, z});
    const auto grid = mcpl::compute_transfer_grid(cfg, solver, pts, "map", progress);
    map.spl.resize(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        std::complex<double> p{0.0, 0.0};
        for (int n = 0; n < count; ++n) p += acc.weights(n) * grid.at(i, n);
        map.spl[i] = mcpl::spl(p);
    }

    std::filesystem::create_directories(cfg.output_dir);
    const auto path = cfg.output_dir / ("map_fa" + std::to_string(static_cast<int>(fa)) + "_n" +
                                        std::to_string(count) + ".csv");
    mcpl::write_map_csv(path, map, mcpl::config_hash(cfg));
    std::cout << path.string() << "\n";
    return 0;
}

int cmd_solve_weights(const CommonOpts& opts, double fa, int count) {
    mcpl::ExperimentConfig cfg = resolve_config(opts);
    const mcpl::CarrierSet carriers(cfg.carrier_frequencies, fa);
    mcpl::CachedFieldProvider provider(cfg, progress);
    mcpl::TransferSolver solver(cfg.source, cfg.medium, carriers, cfg.truncation, cfg.quadrature,
                                cfg.backend, cfg.threads, std::ref(provider));
    const auto acc = solve_for(cfg, fa, count, solver);

    mcpl::ordered_json out;
    out["config_hash"] = mcpl::config_hash(cfg);
    out["audio_frequency_hz"] = fa;
    out["carrier_count"] = count;
    std::vector<std::complex<double>> w(acc.weights.data(), acc.weights.data() + acc.weights.size());
    out["weights"] = mcpl::weights_to_json(w);
    out["contrast"] = acc.contrast;
    out["contrast_db"] = acc.contrast_db;
    out["eigen_residual"] = acc.eigen_residual;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_synth(const CommonOpts& opts, double fa, int count, const std::string& weights_file,
              double rate, double duration, const std::string& wav_path,
              const std::string& csv_path, bool balanced) {
    mcpl::ExperimentConfig cfg = resolve_config(opts);
    std::vector<double> fcs(cfg.carrier_frequencies.begin(),
                            cfg.carrier_frequencies.begin() + count);
    const mcpl::CarrierSet carriers(fcs, fa);

    std::vector<std::complex<double>> weights(count, {1.0, 0.0});
    if (!weights_file.empty()) {
        std::ifstream in(weights_file);
        if (!in) throw mcpl::config_error("cannot open weights file " + weights_file);
        mcpl::ordered_json j;
        in >> j;
        const auto& arr = j.contains("weights") ? j.at("weights") : j;
        if (static_cast<int>(arr.size()) != count)
            throw mcpl::config_error("weights file holds " + std::to_string(arr.size()) +
                                     " weights, need " + std::to_string(count));
        for (int n = 0; n < count; ++n)
            weights[n] = {arr.at(n).at("re").get<double>(), arr.at(n).at("im").get<double>()};
    }

    const auto sig = mcpl::synthesize(carriers, weights, rate, duration,
                                      balanced ? mcpl::FactorMode::balanced
                                               : mcpl::FactorMode::canonical);
    if (!wav_path.empty()) {
        mcpl::write_wav_float32(wav_path, sig);
        std::cout << wav_path << " (" << sig.samples.size() << " samples, peak gain "
                  << sig.normalization_gain << ")\n";
    }
    if (!csv_path.empty()) {
        mcpl::write_signal_csv(csv_path, sig);
        std::cout << csv_path << "\n";
    }
    if (wav_path.empty() && csv_path.empty())
        std::cout << "synthesized " << sig.samples.size()
                  << " samples (peak gain " << sig.normalization_gain
                  << "); pass --wav or --csv to export\n";
    return 0;
}

int cmd_cache_gc(const CommonOpts& opts, bool all) {
    mcpl::ExperimentConfig cfg = resolve_config(opts);
    if (!std::filesystem::exists(cfg.cache_dir)) {
        std::cout << "cache directory " << cfg.cache_dir.string() << " does not exist\n";
        return 0;
    }
    size_t removed = 0, kept = 0;
    for (const auto& entry : std::filesystem::directory_iterator(cfg.cache_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".mcpl") continue;
        bool drop = all;
        if (!drop) {
            try {
                const auto name = entry.path().filename().string();
                if (name.rfind("ultra_", 0) == 0) mcpl::cache::load_ultra_field(entry.path());
                else if (name.rfind("transfer_", 0) == 0) mcpl::cache::load_audio_transfer(entry.path());
                else drop = true;
            } catch (const mcpl::cache_error&) {
                drop = true;
            }
        }
        if (drop) {
            std::filesystem::remove(entry.path());
            ++removed;
        } else {
            ++kept;
        }
    }
    std::cout << "removed " << removed << ", kept " << kept << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-channel multi-carrier parametric loudspeaker simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    double fa = 1000.0;
    int count = 4;
    bool no_maps = false;

    auto* run = app.add_subcommand("run", "full experiment pipeline from config");
    add_common(run, opts);
    run->add_flag("--no-maps", no_maps, "skip the Oxz field maps");

    auto* axial = app.add_subcommand("axial", "on-axis SPL profile for one variant");
    add_common(axial, opts);
    axial->add_option("--fa", fa, "audio frequency, Hz");
    axial->add_option("--carriers", count, "number of carriers");

    auto* mapc = app.add_subcommand("map", "Oxz SPL map for one variant");
    add_common(mapc, opts);
    mapc->add_option("--fa", fa, "audio frequency, Hz");
    mapc->add_option("--carriers", count, "number of carriers");

    auto* solve = app.add_subcommand("solve-weights", "ACC weights for one variant");
    add_common(solve, opts);
    solve->add_option("--fa", fa, "audio frequency, Hz");
    solve->add_option("--carriers", count, "number of carriers");

    std::string weights_file, wav_path, csv_path;
    double rate = 409600.0, duration = 0.1;
    bool balanced = false;
    auto* synth = app.add_subcommand("synth", "export the composite drive signal");
    add_common(synth, opts);
    synth->add_option("--fa", fa, "audio frequency, Hz");
    synth->add_option("--carriers", count, "number of carriers");
    synth->add_option("--weights-file", weights_file, "metrics.json or weights JSON");
    synth->add_option("--rate", rate, "sample rate, Hz");
    synth->add_option("--duration", duration, "seconds");
    synth->add_option("--wav", wav_path, "output WAV (float32) path");
    synth->add_option("--csv", csv_path, "output CSV path");
    synth->add_flag("--balanced", balanced, "balanced sideband factorization");

    bool gc_all = false;
    auto* cache_cmd = app.add_subcommand("cache", "cache maintenance");
    auto* gc = cache_cmd->add_subcommand("gc", "drop corrupt or unrecognized entries");
    add_common(gc, opts);
    gc->add_flag("--all", gc_all, "drop everything");
    cache_cmd->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(opts, no_maps);
        if (axial->parsed()) return cmd_axial(opts, fa, count);
        if (mapc->parsed()) return cmd_map(opts, fa, count);
        if (solve->parsed()) return cmd_solve_weights(opts, fa, count);
        if (synth->parsed()) return cmd_synth(opts, fa, count, weights_file, rate, duration,
                                              wav_path, csv_path, balanced);
        if (cache_cmd->parsed() && gc->parsed()) return cmd_cache_gc(opts, gc_all);
    } catch (const mcpl::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
