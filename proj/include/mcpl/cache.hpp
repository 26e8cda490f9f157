#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>
#include <zlib.h>

#include "mcpl/errors.hpp"
#include "mcpl/nonlinear.hpp"
#include "mcpl/ultrasound.hpp"

namespace mcpl::cache {

static_assert(std::endian::native == std::endian::little,
              "cache format is little-endian; big-endian hosts are unsupported");

inline constexpr char kMagic[8] = {'M', 'C', 'P', 'L', 'G', 'R', 'D', '\0'};
inline constexpr uint32_t kVersion = 1;
inline constexpr uint32_t kKindUltraField = 1;
inline constexpr uint32_t kKindAudioTransfer = 2;

namespace detail {

struct Writer {
    std::vector<char> bytes;

    template <typename T>
    void put(const T& v) {
        const size_t at = bytes.size();
        bytes.resize(at + sizeof(T));
        std::memcpy(bytes.data() + at, &v, sizeof(T));
    }
    void put_doubles(const double* p, size_t n) {
        const size_t at = bytes.size();
        bytes.resize(at + n * sizeof(double));
        std::memcpy(bytes.data() + at, p, n * sizeof(double));
    }
};

struct Reader {
    const char* p;
    const char* end;

    template <typename T>
    T get() {
        if (p + sizeof(T) > end) throw cache_error("cache payload truncated");
        T v;
        std::memcpy(&v, p, sizeof(T));
        p += sizeof(T);
        return v;
    }
    void get_doubles(double* out, size_t n) {
        if (p + n * sizeof(double) > end) throw cache_error("cache payload truncated");
        std::memcpy(out, p, n * sizeof(double));
        p += n * sizeof(double);
    }
};

inline void write_file(const std::filesystem::path& path, uint32_t kind,
                       const std::vector<char>& payload) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw cache_error("cannot open " + tmp.string() + " for writing");
        out.write(kMagic, sizeof(kMagic));
        const uint32_t version = kVersion;
        out.write(reinterpret_cast<const char*>(&version), 4);
        out.write(reinterpret_cast<const char*>(&kind), 4);
        const uint64_t size = payload.size();
        out.write(reinterpret_cast<const char*>(&size), 8);
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        const uint32_t crc = static_cast<uint32_t>(
            ::crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
                    static_cast<uInt>(payload.size())));
        out.write(reinterpret_cast<const char*>(&crc), 4);
        if (!out) throw cache_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::vector<char> read_file(const std::filesystem::path& path, uint32_t expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cache_error("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw cache_error(path.string() + ": not a field cache file");
    uint32_t version = 0, kind = 0;
    uint64_t size = 0;
    if (!in.read(reinterpret_cast<char*>(&version), 4) ||
        !in.read(reinterpret_cast<char*>(&kind), 4) || !in.read(reinterpret_cast<char*>(&size), 8))
        throw cache_error(path.string() + ": truncated header");
    if (version != kVersion)
        throw cache_error(path.string() + ": cache version " + std::to_string(version) +
                          " does not match expected " + std::to_string(kVersion));
    if (kind != expected_kind)
        throw cache_error(path.string() + ": wrong payload kind");
    std::vector<char> payload(size);
    if (!in.read(payload.data(), static_cast<std::streamsize>(size)))
        throw cache_error(path.string() + ": truncated payload");
    uint32_t crc = 0;
    if (!in.read(reinterpret_cast<char*>(&crc), 4))
        throw cache_error(path.string() + ": missing checksum");
    const uint32_t actual = static_cast<uint32_t>(::crc32(
        0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
    if (crc != actual) throw cache_error(path.string() + ": checksum mismatch, file corrupt");
    return payload;
}

}  // namespace detail

inline void store(const UltraFieldGrid& field, const std::filesystem::path& path) {
    detail::Writer w;
    w.put(field.frequency);
    w.put<uint64_t>(field.grid.radial.size());
    w.put<uint64_t>(field.grid.axial.size());
    w.put_doubles(field.grid.radial.data(), field.grid.radial.size());
    w.put_doubles(field.grid.axial.data(), field.grid.axial.size());
    w.put_doubles(reinterpret_cast<const double*>(field.pressure.data()),
                  2 * field.pressure.size());
    detail::write_file(path, kKindUltraField, w.bytes);
}

inline UltraFieldGrid load_ultra_field(const std::filesystem::path& path) {
    const std::vector<char> payload = detail::read_file(path, kKindUltraField);
    detail::Reader r{payload.data(), payload.data() + payload.size()};
    UltraFieldGrid field;
    field.frequency = r.get<double>();
    const uint64_t nr = r.get<uint64_t>();
    const uint64_t nz = r.get<uint64_t>();
    field.grid.radial.resize(nr);
    field.grid.axial.resize(nz);
    r.get_doubles(field.grid.radial.data(), nr);
    r.get_doubles(field.grid.axial.data(), nz);
    field.pressure.resize(nr * nz);
    r.get_doubles(reinterpret_cast<double*>(field.pressure.data()), 2 * nr * nz);
    return field;
}

inline void store(const AudioTransferGrid& grid, const std::filesystem::path& path) {
    detail::Writer w;
    w.put(grid.audio_frequency);
    w.put<uint64_t>(grid.points.size());
    w.put<uint64_t>(grid.carrier_frequencies.size());
    w.put_doubles(grid.carrier_frequencies.data(), grid.carrier_frequencies.size());
    w.put_doubles(reinterpret_cast<const double*>(grid.points.data()), 2 * grid.points.size());
    w.put_doubles(reinterpret_cast<const double*>(grid.values.data()), 2 * grid.values.size());
    const TransferProvenance& p = grid.provenance;
    w.put(p.truncation.z_min);
    w.put(p.truncation.z_max);
    w.put(p.truncation.rho_max);
    w.put(p.truncation.decay_db);
    w.put<int32_t>(p.axial_nodes);
    w.put<int32_t>(p.radial_nodes);
    w.put(p.phase_per_panel);
    w.put(p.rel_tol);
    w.put(p.refine);
    w.put<int32_t>(p.backend);
    w.put<uint8_t>(p.truncation_warning ? 1 : 0);
    w.put(p.achieved_decay_db);
    detail::write_file(path, kKindAudioTransfer, w.bytes);
}

inline AudioTransferGrid load_audio_transfer(const std::filesystem::path& path) {
    const std::vector<char> payload = detail::read_file(path, kKindAudioTransfer);
    detail::Reader r{payload.data(), payload.data() + payload.size()};
    AudioTransferGrid grid;
    grid.audio_frequency = r.get<double>();
    const uint64_t np = r.get<uint64_t>();
    const uint64_t nc = r.get<uint64_t>();
    grid.carrier_frequencies.resize(nc);
    r.get_doubles(grid.carrier_frequencies.data(), nc);
    grid.points.resize(np);
    r.get_doubles(reinterpret_cast<double*>(grid.points.data()), 2 * np);
    grid.values.resize(np * nc);
    r.get_doubles(reinterpret_cast<double*>(grid.values.data()), 2 * np * nc);
    TransferProvenance& p = grid.provenance;
    p.truncation.z_min = r.get<double>();
    p.truncation.z_max = r.get<double>();
    p.truncation.rho_max = r.get<double>();
    p.truncation.decay_db = r.get<double>();
    p.axial_nodes = r.get<int32_t>();
    p.radial_nodes = r.get<int32_t>();
    p.phase_per_panel = r.get<double>();
    p.rel_tol = r.get<double>();
    p.refine = r.get<double>();
    p.backend = r.get<int32_t>();
    p.truncation_warning = r.get<uint8_t>() != 0;
    p.achieved_decay_db = r.get<double>();
    return grid;
}

}  // namespace mcpl::cache
