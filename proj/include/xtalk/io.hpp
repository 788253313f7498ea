#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "xtalk/forward_model.hpp"
#include "xtalk/scene.hpp"

namespace xtalk {

inline constexpr const char* kProducer = "xtalk 0.1.0";

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename UInt>
void append_le(std::string& out, UInt value) {
    for (size_t b = 0; b < sizeof(UInt); ++b)
        out.push_back(static_cast<char>((value >> (8 * b)) & 0xff));
}

template <typename UInt>
UInt read_le(const char* p) {
    UInt value = 0;
    for (size_t b = 0; b < sizeof(UInt); ++b)
        value |= static_cast<UInt>(static_cast<unsigned char>(p[b])) << (8 * b);
    return value;
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in && !in.eof()) throw IoError("read failed: " + path);
    return ss.str();
}

// Sidecar metadata: "key = value" lines, '#' comments.
inline void write_meta(const std::string& path, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string text;
    for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
    write_file(path, text);
}

inline std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                           const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto notspace = [](unsigned char c) { return !std::isspace(c); };
        line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
        line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
        value.erase(value.begin(), std::find_if(value.begin(), value.end(), notspace));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

inline std::vector<double> parse_numbers(const std::string& value, const std::string& what) {
    std::istringstream ss(value);
    std::vector<double> out;
    double v;
    while (ss >> v) out.push_back(v);
    std::string rest;
    if (ss.clear(), ss >> rest)
        throw ConfigError("cannot parse numbers for " + what + ": '" + value + "'");
    if (out.empty()) throw ConfigError("no numbers given for " + what);
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Volumes: raw little-endian float32, x1-fastest, with a text sidecar.
// ---------------------------------------------------------------------------

inline void write_volume(const std::string& path, const ScalarField3D& field,
                         std::vector<std::pair<std::string, std::string>> extra_meta = {}) {
    std::string bytes;
    bytes.reserve(field.values.size() * 4);
    for (double v : field.values)
        detail::append_le(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    detail::write_file(path, bytes);

    std::vector<std::pair<std::string, std::string>> kv = {
        {"format", "xtalk-volume"},
        {"version", "1"},
        {"dtype", "float32-le"},
        {"order", "x1-fastest"},
        {"dims", std::to_string(field.grid.n1) + " " + std::to_string(field.grid.n2) + " " +
                     std::to_string(field.grid.n3)},
        {"spacing", detail::format_double(field.grid.spacing.x1) + " " +
                        detail::format_double(field.grid.spacing.x2) + " " +
                        detail::format_double(field.grid.spacing.x3)},
        {"origin", detail::format_double(field.grid.origin.x1) + " " +
                       detail::format_double(field.grid.origin.x2) + " " +
                       detail::format_double(field.grid.origin.x3)},
        {"units", "length"},
        {"producer", kProducer},
    };
    for (auto& e : extra_meta) kv.push_back(std::move(e));
    detail::write_meta(path + ".meta", kv);
}

inline ScalarField3D read_volume(const std::string& path) {
    const auto kv = detail::parse_key_values(detail::read_file(path + ".meta"), path + ".meta");
    const auto need = [&](const std::string& k) {
        const auto it = kv.find(k);
        if (it == kv.end()) throw IoError(path + ".meta: missing key '" + k + "'");
        return it->second;
    };
    if (need("format") != "xtalk-volume") throw IoError(path + ": not an xtalk volume");
    const auto dims = detail::parse_numbers(need("dims"), "dims");
    const auto spacing = detail::parse_numbers(need("spacing"), "spacing");
    const auto origin = detail::parse_numbers(need("origin"), "origin");
    if (dims.size() != 3 || spacing.size() != 3 || origin.size() != 3)
        throw IoError(path + ".meta: dims/spacing/origin need 3 entries");

    GridSpec grid;
    grid.n1 = static_cast<int>(dims[0]);
    grid.n2 = static_cast<int>(dims[1]);
    grid.n3 = static_cast<int>(dims[2]);
    grid.spacing = {spacing[0], spacing[1], spacing[2]};
    grid.origin = {origin[0], origin[1], origin[2]};
    grid.validate();

    const std::string bytes = detail::read_file(path);
    if (bytes.size() != static_cast<size_t>(grid.size()) * 4)
        throw IoError(path + ": payload size does not match dims");
    ScalarField3D field(grid);
    for (size_t i = 0; i < field.values.size(); ++i) {
        field.values[i] = std::bit_cast<float>(detail::read_le<std::uint32_t>(bytes.data() + 4 * i));
        if (!std::isfinite(field.values[i])) throw IoError(path + ": non-finite sample in payload");
    }
    return field;
}

// ---------------------------------------------------------------------------
// Data cubes: raw little-endian float64 plus geometry sidecar.
// ---------------------------------------------------------------------------

inline void write_datacube(const std::string& path, const DataCube& cube) {
    std::string bytes;
    bytes.reserve(cube.samples.size() * 8);
    for (double v : cube.samples) detail::append_le(bytes, std::bit_cast<std::uint64_t>(v));
    detail::write_file(path, bytes);

    const AcquisitionGeometry& g = cube.geometry;
    auto vec = [](Vec3 v) {
        return detail::format_double(v.x1) + " " + detail::format_double(v.x2) + " " +
               detail::format_double(v.x3);
    };
    auto range = [](const AxisRange& r) {
        return detail::format_double(r.lo) + " " + detail::format_double(r.hi) + " " +
               std::to_string(r.count);
    };
    detail::write_meta(path + ".meta",
                       {{"format", "xtalk-datacube"},
                        {"version", "1"},
                        {"dtype", "float64-le"},
                        {"order", "t-fastest r2 r1"},
                        {"e1", vec(g.e1)},
                        {"e2", vec(g.e2)},
                        {"track_height", detail::format_double(g.track_height)},
                        {"r1", range(g.r1_range)},
                        {"r2", range(g.r2_range)},
                        {"c0", detail::format_double(g.c0)},
                        {"t_min", detail::format_double(cube.timegrid.t_min)},
                        {"t_max", detail::format_double(cube.timegrid.t_max)},
                        {"n_t", std::to_string(cube.timegrid.n_t)},
                        {"clipped_fraction", detail::format_double(cube.clipped_fraction)},
                        {"producer", kProducer}});
}

inline DataCube read_datacube(const std::string& path) {
    const auto kv = detail::parse_key_values(detail::read_file(path + ".meta"), path + ".meta");
    const auto need = [&](const std::string& k) {
        const auto it = kv.find(k);
        if (it == kv.end()) throw IoError(path + ".meta: missing key '" + k + "'");
        return it->second;
    };
    if (need("format") != "xtalk-datacube") throw IoError(path + ": not an xtalk data cube");
    DataCube cube;
    auto vec = [&](const std::string& k) {
        const auto v = detail::parse_numbers(need(k), k);
        if (v.size() != 3) throw IoError(path + ".meta: " + k + " needs 3 entries");
        return Vec3{v[0], v[1], v[2]};
    };
    auto range = [&](const std::string& k) {
        const auto v = detail::parse_numbers(need(k), k);
        if (v.size() != 3) throw IoError(path + ".meta: " + k + " needs 3 entries");
        return AxisRange{v[0], v[1], static_cast<int>(v[2])};
    };
    cube.geometry.e1 = vec("e1");
    cube.geometry.e2 = vec("e2");
    cube.geometry.track_height = detail::parse_numbers(need("track_height"), "track_height")[0];
    cube.geometry.r1_range = range("r1");
    cube.geometry.r2_range = range("r2");
    cube.geometry.c0 = detail::parse_numbers(need("c0"), "c0")[0];
    cube.timegrid.t_min = detail::parse_numbers(need("t_min"), "t_min")[0];
    cube.timegrid.t_max = detail::parse_numbers(need("t_max"), "t_max")[0];
    cube.timegrid.n_t = static_cast<int>(detail::parse_numbers(need("n_t"), "n_t")[0]);
    cube.clipped_fraction = detail::parse_numbers(need("clipped_fraction"), "clipped_fraction")[0];
    cube.geometry.validate();
    cube.timegrid.validate();

    const std::string bytes = detail::read_file(path);
    if (bytes.size() != static_cast<size_t>(cube.size()) * 8)
        throw IoError(path + ": payload size does not match geometry/timegrid");
    cube.samples.resize(static_cast<size_t>(cube.size()));
    for (size_t i = 0; i < cube.samples.size(); ++i) {
        cube.samples[i] = std::bit_cast<double>(detail::read_le<std::uint64_t>(bytes.data() + 8 * i));
        if (!std::isfinite(cube.samples[i])) throw IoError(path + ": non-finite sample in payload");
    }
    return cube;
}

// ---------------------------------------------------------------------------
// Axis-aligned slice exports: raw CSV plus a 16-bit graymap normalized to
// [0, 1] per slice, with the normalization recorded in the sidecar.
// ---------------------------------------------------------------------------

struct SliceSpec {
    int axis = 3;           // 1, 2 or 3: the axis held constant
    double coordinate = 0.0;
};

namespace detail {

// Extract a slice as (rows, cols, values): axis 3 -> rows x2, cols x1;
// axis 2 -> rows x3, cols x1; axis 1 -> rows x3, cols x2.
struct Slice {
    int rows = 0, cols = 0;
    int fixed_index = 0;
    std::vector<double> values;
};

inline Slice extract_slice(const ScalarField3D& field, const SliceSpec& spec) {
    const GridSpec& g = field.grid;
    const auto nearest = [](double coord, double origin, double spacing, int n) {
        int i = static_cast<int>(std::lround((coord - origin) / spacing));
        return std::clamp(i, 0, n - 1);
    };
    Slice s;
    if (spec.axis == 3) {
        s.fixed_index = nearest(spec.coordinate, g.origin.x3, g.spacing.x3, g.n3);
        s.rows = g.n2; s.cols = g.n1;
        for (int j = 0; j < g.n2; ++j)
            for (int i = 0; i < g.n1; ++i) s.values.push_back(field.at(i, j, s.fixed_index));
    } else if (spec.axis == 2) {
        s.fixed_index = nearest(spec.coordinate, g.origin.x2, g.spacing.x2, g.n2);
        s.rows = g.n3; s.cols = g.n1;
        for (int k = 0; k < g.n3; ++k)
            for (int i = 0; i < g.n1; ++i) s.values.push_back(field.at(i, s.fixed_index, k));
    } else if (spec.axis == 1) {
        s.fixed_index = nearest(spec.coordinate, g.origin.x1, g.spacing.x1, g.n1);
        s.rows = g.n3; s.cols = g.n2;
        for (int k = 0; k < g.n3; ++k)
            for (int j = 0; j < g.n2; ++j) s.values.push_back(field.at(s.fixed_index, j, k));
    } else {
        throw ConfigError("slice axis must be 1, 2 or 3");
    }
    return s;
}

} // namespace detail

inline void write_slice(const std::string& path_stem, const ScalarField3D& field,
                        const SliceSpec& spec) {
    const detail::Slice s = detail::extract_slice(field, spec);

    std::string csv;
    for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
            if (c) csv += ',';
            csv += detail::format_double(s.values[static_cast<size_t>(r) * s.cols + c]);
        }
        csv += '\n';
    }
    detail::write_file(path_stem + ".csv", csv);

    double lo = 0.0, hi = 0.0;
    for (double v : s.values) { lo = std::min(lo, v); hi = std::max(hi, v); }
    const double scale = hi > lo ? hi - lo : 1.0;
    std::string pgm = "P5\n# xtalk slice, scale_offset=" + detail::format_double(lo) +
                      " scale_range=" + detail::format_double(scale) + "\n" +
                      std::to_string(s.cols) + " " + std::to_string(s.rows) + "\n65535\n";
    for (double v : s.values) {
        const double n = (v - lo) / scale;
        const auto q = static_cast<std::uint16_t>(std::lround(n * 65535.0));
        pgm.push_back(static_cast<char>((q >> 8) & 0xff)); // PGM is big-endian
        pgm.push_back(static_cast<char>(q & 0xff));
    }
    detail::write_file(path_stem + ".pgm", pgm);

    detail::write_meta(path_stem + ".meta",
                       {{"format", "xtalk-slice"},
                        {"axis", std::to_string(spec.axis)},
                        {"coordinate", detail::format_double(spec.coordinate)},
                        {"grid_index", std::to_string(s.fixed_index)},
                        {"rows", std::to_string(s.rows)},
                        {"cols", std::to_string(s.cols)},
                        {"scale_offset", detail::format_double(lo)},
                        {"scale_range", detail::format_double(scale)},
                        {"producer", kProducer}});
}

} // namespace xtalk
