#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xtalk/io.hpp"
#include "xtalk/mitigation.hpp"

namespace xtalk {

enum class SceneType { gaussian, box, point, zero };

struct SceneConfig {
    SceneType type = SceneType::gaussian;
    Vec3 center{0.0, 2.0, 3.0}; // gaussian/point
    double width = 1.0;         // gaussian
    Vec3 lo{-2.0, -1.0, 0.0};   // box
    Vec3 hi{2.0, 1.0, 0.5};
};

enum class MitigationMethod { none, geometry, displacement };

struct OutputConfig {
    std::string prefix = "experiment";
    std::vector<SliceSpec> slices;
};

// Full experiment description, parsed from a strict key-value file. Unknown
// keys are errors: config drift is the main reproducibility hazard.
struct ExperimentConfig {
    AcquisitionGeometry geometry;
    GridSpec grid;
    SceneConfig scene;
    std::optional<TimeGrid> explicit_timegrid;
    int n_t = 768;
    MuteSpec mute;
    BeamMask::Mode beam_mode = BeamMask::Mode::none;
    EmitterSubset emitters{true, true};
    MitigationMethod method = MitigationMethod::none;
    MitigationConfig mitigation;
    SymbolHook symbols;
    OutputConfig output;

    TimeGrid timegrid() const {
        return explicit_timegrid ? *explicit_timegrid : auto_time_grid(grid, geometry, n_t);
    }

    ScalarField3D build_scene() const {
        switch (scene.type) {
            case SceneType::gaussian: return make_gaussian_scene(grid, scene.center, scene.width);
            case SceneType::box: return make_box_scene(grid, scene.lo, scene.hi);
            case SceneType::point: return make_point_scene(grid, scene.center);
            case SceneType::zero: return make_zero_scene(grid);
        }
        throw ConfigError("unhandled scene type");
    }
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "schema_version",
        "geometry.e1", "geometry.e2", "geometry.track_height", "geometry.r1", "geometry.r2",
        "geometry.c0",
        "grid.min", "grid.max", "grid.dims",
        "scene.type", "scene.center", "scene.width", "scene.lo", "scene.hi",
        "timegrid.n_t", "timegrid.t_min", "timegrid.t_max",
        "mute.enabled", "mute.taper_fraction",
        "beam.mode",
        "emitters",
        "mitigation.method", "mitigation.roi", "mitigation.policy", "mitigation.iterations",
        "mitigation.adjoint_emitter", "mitigation.symbol_diag", "mitigation.symbol_mixed",
        "output.prefix", "output.slices",
    };
    return keys;
}

inline Vec3 to_vec3(const std::string& value, const std::string& key) {
    const auto v = parse_numbers(value, key);
    if (v.size() != 3) throw ConfigError(key + ": expected 3 numbers, got " + std::to_string(v.size()));
    return {v[0], v[1], v[2]};
}

inline AxisRange to_range(const std::string& value, const std::string& key) {
    const auto v = parse_numbers(value, key);
    if (v.size() != 3) throw ConfigError(key + ": expected 'min max count'");
    if (v[2] != std::floor(v[2]) || v[2] < 1) throw ConfigError(key + ": count must be a positive integer");
    return {v[0], v[1], static_cast<int>(v[2])};
}

inline bool to_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

} // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    const auto kv = detail::parse_key_values(text, origin);
    for (const auto& [key, value] : kv)
        if (!detail::known_config_keys().count(key))
            throw ConfigError(origin + ": unknown key '" + key + "'");

    const auto get = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    const auto require = [&](const std::string& key) {
        const auto v = get(key);
        if (!v) throw ConfigError(origin + ": missing required key '" + key + "'");
        return *v;
    };

    if (require("schema_version") != "1")
        throw ConfigError(origin + ": schema_version must be 1");

    ExperimentConfig cfg;
    cfg.geometry.e1 = detail::to_vec3(require("geometry.e1"), "geometry.e1");
    cfg.geometry.e2 = detail::to_vec3(require("geometry.e2"), "geometry.e2");
    cfg.geometry.track_height = detail::parse_numbers(require("geometry.track_height"), "geometry.track_height")[0];
    cfg.geometry.r1_range = detail::to_range(require("geometry.r1"), "geometry.r1");
    cfg.geometry.r2_range = detail::to_range(require("geometry.r2"), "geometry.r2");
    if (const auto v = get("geometry.c0")) cfg.geometry.c0 = detail::parse_numbers(*v, "geometry.c0")[0];

    const Vec3 gmin = detail::to_vec3(require("grid.min"), "grid.min");
    const Vec3 gmax = detail::to_vec3(require("grid.max"), "grid.max");
    const auto dims = detail::parse_numbers(require("grid.dims"), "grid.dims");
    if (dims.size() != 3) throw ConfigError("grid.dims: expected 3 integers");
    for (double d : dims)
        if (d != std::floor(d) || d < 1) throw ConfigError("grid.dims: entries must be positive integers");
    cfg.grid.origin = gmin;
    cfg.grid.n1 = static_cast<int>(dims[0]);
    cfg.grid.n2 = static_cast<int>(dims[1]);
    cfg.grid.n3 = static_cast<int>(dims[2]);
    const auto spacing_of = [](double lo, double hi, int n, const char* axis) {
        if (n < 1) throw ConfigError(std::string("grid.dims: ") + axis + " must be >= 1");
        if (n == 1) return 1.0;
        if (!(hi > lo)) throw ConfigError(std::string("grid: max must exceed min on ") + axis);
        return (hi - lo) / (n - 1);
    };
    cfg.grid.spacing = {spacing_of(gmin.x1, gmax.x1, cfg.grid.n1, "x1"),
                        spacing_of(gmin.x2, gmax.x2, cfg.grid.n2, "x2"),
                        spacing_of(gmin.x3, gmax.x3, cfg.grid.n3, "x3")};

    if (const auto v = get("scene.type")) {
        if (*v == "gaussian") cfg.scene.type = SceneType::gaussian;
        else if (*v == "box") cfg.scene.type = SceneType::box;
        else if (*v == "point") cfg.scene.type = SceneType::point;
        else if (*v == "zero") cfg.scene.type = SceneType::zero;
        else throw ConfigError("scene.type: unknown type '" + *v + "'");
    }
    if (const auto v = get("scene.center")) cfg.scene.center = detail::to_vec3(*v, "scene.center");
    if (const auto v = get("scene.width")) cfg.scene.width = detail::parse_numbers(*v, "scene.width")[0];
    if (const auto v = get("scene.lo")) cfg.scene.lo = detail::to_vec3(*v, "scene.lo");
    if (const auto v = get("scene.hi")) cfg.scene.hi = detail::to_vec3(*v, "scene.hi");

    if (const auto v = get("timegrid.n_t")) cfg.n_t = static_cast<int>(detail::parse_numbers(*v, "timegrid.n_t")[0]);
    const auto tmin = get("timegrid.t_min"), tmax = get("timegrid.t_max");
    if (tmin.has_value() != tmax.has_value())
        throw ConfigError("timegrid.t_min and timegrid.t_max must be given together");
    if (tmin) {
        TimeGrid tg;
        tg.t_min = detail::parse_numbers(*tmin, "timegrid.t_min")[0];
        tg.t_max = detail::parse_numbers(*tmax, "timegrid.t_max")[0];
        tg.n_t = cfg.n_t;
        cfg.explicit_timegrid = tg;
    }

    if (const auto v = get("mute.enabled")) cfg.mute.enabled = detail::to_bool(*v, "mute.enabled");
    if (const auto v = get("mute.taper_fraction"))
        cfg.mute.edge_taper_fraction = detail::parse_numbers(*v, "mute.taper_fraction")[0];

    if (const auto v = get("beam.mode")) {
        if (*v == "none") cfg.beam_mode = BeamMask::Mode::none;
        else if (*v == "critical_angle") cfg.beam_mode = BeamMask::Mode::critical_angle;
        else throw ConfigError("beam.mode: expected none or critical_angle");
    }

    if (const auto v = get("emitters")) {
        if (*v == "both") cfg.emitters = {true, true};
        else if (*v == "1") cfg.emitters = {true, false};
        else if (*v == "2") cfg.emitters = {false, true};
        else throw ConfigError("emitters: expected 1, 2 or both");
    }

    if (const auto v = get("mitigation.method")) {
        if (*v == "none") cfg.method = MitigationMethod::none;
        else if (*v == "geometry") cfg.method = MitigationMethod::geometry;
        else if (*v == "displacement") cfg.method = MitigationMethod::displacement;
        else throw ConfigError("mitigation.method: expected none, geometry or displacement");
    }
    if (const auto v = get("mitigation.roi")) {
        std::istringstream ss(*v);
        std::string kind;
        ss >> kind;
        if (kind == "slab") {
            double H;
            if (!(ss >> H)) throw ConfigError("mitigation.roi: expected 'slab H'");
            cfg.mitigation.roi = SlabRoi{H};
        } else if (kind == "sphere") {
            double cx, cy, cz, R;
            if (!(ss >> cx >> cy >> cz >> R))
                throw ConfigError("mitigation.roi: expected 'sphere cx cy cz R'");
            cfg.mitigation.roi = SphereRoi{{cx, cy, cz}, R};
        } else {
            throw ConfigError("mitigation.roi: expected slab or sphere");
        }
    }
    if (const auto v = get("mitigation.policy")) {
        if (*v == "per_bin") cfg.mitigation.mute_policy = MutePolicy::per_bin;
        else if (*v == "per_receiver") cfg.mitigation.mute_policy = MutePolicy::per_receiver;
        else throw ConfigError("mitigation.policy: expected per_bin or per_receiver");
    }
    if (const auto v = get("mitigation.iterations"))
        cfg.mitigation.displacement_iterations = static_cast<int>(detail::parse_numbers(*v, "mitigation.iterations")[0]);
    if (const auto v = get("mitigation.adjoint_emitter"))
        cfg.mitigation.adjoint_emitter = static_cast<int>(detail::parse_numbers(*v, "mitigation.adjoint_emitter")[0]);
    if (const auto v = get("mitigation.symbol_diag"))
        cfg.symbols.diag = detail::parse_numbers(*v, "mitigation.symbol_diag")[0];
    if (const auto v = get("mitigation.symbol_mixed"))
        cfg.symbols.mixed = detail::parse_numbers(*v, "mitigation.symbol_mixed")[0];

    if (const auto v = get("output.prefix")) cfg.output.prefix = *v;
    if (const auto v = get("output.slices")) {
        std::istringstream ss(*v);
        std::string item;
        while (ss >> item) {
            if (item.size() < 4 || item[0] != 'x' || item[2] != ':')
                throw ConfigError("output.slices: expected items like 'x3:3.0', got '" + item + "'");
            SliceSpec spec;
            spec.axis = item[1] - '0';
            if (spec.axis < 1 || spec.axis > 3)
                throw ConfigError("output.slices: axis must be x1, x2 or x3");
            spec.coordinate = detail::parse_numbers(item.substr(3), "output.slices")[0];
            cfg.output.slices.push_back(spec);
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    return parse_config_text(detail::read_file(path), path);
}

// Validates every module precondition that can be checked before compute.
inline void validate_config(const ExperimentConfig& cfg) {
    cfg.geometry.validate();
    cfg.grid.validate();
    cfg.mute.validate();
    cfg.mitigation.validate();
    if (cfg.n_t < 2) throw ConfigError("timegrid.n_t must be >= 2");
    if (cfg.explicit_timegrid) cfg.explicit_timegrid->validate();
    if (!(cfg.geometry.track_height > cfg.grid.max_corner().x3))
        throw ConfigError("geometry.track_height must exceed the top of the scene grid");
    if (cfg.scene.type == SceneType::gaussian && !(cfg.scene.width > 0.0))
        throw ConfigError("scene.width must be positive");
    if (cfg.scene.type == SceneType::box &&
        !(cfg.scene.lo.x1 < cfg.scene.hi.x1 && cfg.scene.lo.x2 < cfg.scene.hi.x2 &&
          cfg.scene.lo.x3 < cfg.scene.hi.x3))
        throw ConfigError("scene box requires lo < hi componentwise");
    if (cfg.scene.type == SceneType::point && !cfg.grid.contains(cfg.scene.center))
        throw ConfigError("scene.center must lie inside the grid for point scenes");
    if (cfg.method == MitigationMethod::displacement) {
        if (cfg.mitigation.displacement_iterations < 1)
            throw ConfigError("displacement method needs mitigation.iterations >= 1");
        // Surface the plane/ROI conflict during validation rather than mid-run.
        if (cfg.beam_mode == BeamMask::Mode::none)
            detail::check_plane_clear_of_roi(cfg.geometry, cfg.grid, cfg.mitigation.roi);
    }
}

} // namespace xtalk
