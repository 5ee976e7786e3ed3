#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bectwist/core/field.hpp"

namespace bectwist {

/// Metadata carried by the JSON sidecar of a field snapshot.
struct SnapshotInfo {
    Geometry geometry = Geometry::Cartesian3D;
    std::vector<std::size_t> points;
    std::vector<double> lengths;
    double time = 0.0;
    std::string component;
};

namespace detail {
inline std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big)
        return __builtin_bswap64(v);
    return v;
}
} // namespace detail

/**
 * Writes `<base>.bin` (little-endian float64 pairs (re, im), row-major axis
 * order) and `<base>.json` (geometry, points, lengths, time, component).
 * Returns the two paths written.
 */
inline std::array<std::filesystem::path, 2>
write_snapshot(const std::filesystem::path &base, const ComplexField &field, double time,
               const std::string &component) {
    const auto &g = *field.grid();
    std::filesystem::path bin = base, meta = base;
    bin += ".bin";
    meta += ".json";
    {
        std::ofstream out(bin, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("io", "cannot open " + bin.string());
        for (const auto &z : field.values()) {
            for (double part : {z.real(), z.imag()}) {
                const auto raw = detail::to_little_endian(std::bit_cast<std::uint64_t>(part));
                out.write(reinterpret_cast<const char *>(&raw), sizeof raw);
            }
        }
    }
    nlohmann::json j = {{"format", "f64le-complex-interleaved"},
                        {"geometry", to_string(g.geometry())},
                        {"points", g.points()},
                        {"lengths_m", g.lengths()},
                        {"time_s", time},
                        {"component", component},
                        {"count", g.size()},
                        {"data_file", bin.filename().string()}};
    std::ofstream out(meta, std::ios::trunc);
    if (!out)
        throw Error("io", "cannot open " + meta.string());
    out << j.dump(2) << '\n';
    return {bin, meta};
}

inline SnapshotInfo read_snapshot_info(const std::filesystem::path &base) {
    std::filesystem::path meta = base;
    meta += ".json";
    std::ifstream in(meta);
    if (!in)
        throw Error("io", "cannot open " + meta.string());
    const auto j = nlohmann::json::parse(in);
    SnapshotInfo info;
    info.geometry = geometry_from_string(j.at("geometry").get<std::string>());
    info.points = j.at("points").get<std::vector<std::size_t>>();
    info.lengths = j.at("lengths_m").get<std::vector<double>>();
    info.time = j.at("time_s").get<double>();
    info.component = j.at("component").get<std::string>();
    return info;
}

/// Reads a snapshot back onto `grid`, which must match the sidecar.
inline ComplexField read_snapshot(const std::filesystem::path &base, const GridPtr &grid) {
    const auto info = read_snapshot_info(base);
    if (info.geometry != grid->geometry() || info.points != grid->points())
        throw Error("io", "snapshot grid does not match");
    std::filesystem::path bin = base;
    bin += ".bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in)
        throw Error("io", "cannot open " + bin.string());
    ComplexField f(grid);
    for (auto &z : f.values()) {
        std::uint64_t raw[2];
        in.read(reinterpret_cast<char *>(raw), sizeof raw);
        if (!in)
            throw Error("io", "snapshot data truncated: " + bin.string());
        z = {std::bit_cast<double>(detail::to_little_endian(raw[0])),
             std::bit_cast<double>(detail::to_little_endian(raw[1]))};
    }
    return f;
}

} // namespace bectwist
