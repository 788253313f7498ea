#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "xtalk/errors.hpp"
#include "xtalk/vec3.hpp"

namespace xtalk {

// Regular sampling grid. origin is the position of sample (0,0,0); sample
// (i,j,k) sits at origin + (i*d1, j*d2, k*d3). Values are stored x1-fastest.
struct GridSpec {
    Vec3 origin;
    Vec3 spacing{1.0, 1.0, 1.0};
    int n1 = 1, n2 = 1, n3 = 1;

    std::int64_t size() const {
        return static_cast<std::int64_t>(n1) * n2 * n3;
    }
    std::int64_t index(int i, int j, int k) const {
        return static_cast<std::int64_t>(k) * n2 * n1 + static_cast<std::int64_t>(j) * n1 + i;
    }
    Vec3 position(int i, int j, int k) const {
        return {origin.x1 + spacing.x1 * i, origin.x2 + spacing.x2 * j, origin.x3 + spacing.x3 * k};
    }
    Vec3 max_corner() const {
        return position(n1 - 1, n2 - 1, n3 - 1);
    }
    double voxel_volume() const { return spacing.x1 * spacing.x2 * spacing.x3; }

    bool contains(Vec3 p) const {
        const Vec3 hi = max_corner();
        return p.x1 >= origin.x1 && p.x1 <= hi.x1 && p.x2 >= origin.x2 && p.x2 <= hi.x2 &&
               p.x3 >= origin.x3 && p.x3 <= hi.x3;
    }

    void validate() const {
        if (n1 < 1 || n2 < 1 || n3 < 1) throw ConfigError("grid dims must be positive");
        if (!(spacing.x1 > 0.0) || !(spacing.x2 > 0.0) || !(spacing.x3 > 0.0))
            throw ConfigError("grid spacing must be positive");
        if (!is_finite(origin) || !is_finite(spacing))
            throw ConfigError("grid origin/spacing must be finite");
    }

    friend bool operator==(const GridSpec& a, const GridSpec& b) {
        return a.origin == b.origin && a.spacing == b.spacing && a.n1 == b.n1 && a.n2 == b.n2 &&
               a.n3 == b.n3;
    }
};

// Sampled reflectivity or image volume.
struct ScalarField3D {
    GridSpec grid;
    std::vector<double> values;

    explicit ScalarField3D(const GridSpec& g = GridSpec{})
        : grid(g), values(static_cast<size_t>(g.size()), 0.0) {}

    double& at(int i, int j, int k) { return values[static_cast<size_t>(grid.index(i, j, k))]; }
    double at(int i, int j, int k) const { return values[static_cast<size_t>(grid.index(i, j, k))]; }
};

inline ScalarField3D make_zero_scene(const GridSpec& grid) { return ScalarField3D(grid); }

// Spherical Gaussian exp(-|x - center|^2 / width^2), peak 1 at the center.
inline ScalarField3D make_gaussian_scene(const GridSpec& grid, Vec3 center, double width) {
    if (!(width > 0.0)) throw ConfigError("gaussian scene width must be positive");
    ScalarField3D field(grid);
    const double inv_w2 = 1.0 / (width * width);
    std::int64_t idx = 0;
    for (int k = 0; k < grid.n3; ++k)
        for (int j = 0; j < grid.n2; ++j)
            for (int i = 0; i < grid.n1; ++i, ++idx) {
                const Vec3 p = grid.position(i, j, k);
                field.values[static_cast<size_t>(idx)] = std::exp(-norm_sq(p - center) * inv_w2);
            }
    return field;
}

// Indicator of the open box (lo, hi).
inline ScalarField3D make_box_scene(const GridSpec& grid, Vec3 lo, Vec3 hi) {
    if (!(lo.x1 < hi.x1 && lo.x2 < hi.x2 && lo.x3 < hi.x3))
        throw ConfigError("box scene requires lo < hi componentwise");
    ScalarField3D field(grid);
    std::int64_t idx = 0;
    for (int k = 0; k < grid.n3; ++k)
        for (int j = 0; j < grid.n2; ++j)
            for (int i = 0; i < grid.n1; ++i, ++idx) {
                const Vec3 p = grid.position(i, j, k);
                const bool inside = p.x1 > lo.x1 && p.x1 < hi.x1 && p.x2 > lo.x2 && p.x2 < hi.x2 &&
                                    p.x3 > lo.x3 && p.x3 < hi.x3;
                field.values[static_cast<size_t>(idx)] = inside ? 1.0 : 0.0;
            }
    return field;
}

// Point-like scatterer: a narrow Gaussian of 1.5 voxels per axis, peak 1.
// Narrower spikes alias badly through the broadband forward kernel.
inline ScalarField3D make_point_scene(const GridSpec& grid, Vec3 location) {
    if (!grid.contains(location))
        throw OutOfBounds("point scatterer " + to_string(location) + " outside grid bounds");
    ScalarField3D field(grid);
    const Vec3 w{1.5 * grid.spacing.x1, 1.5 * grid.spacing.x2, 1.5 * grid.spacing.x3};
    std::int64_t idx = 0;
    for (int k = 0; k < grid.n3; ++k)
        for (int j = 0; j < grid.n2; ++j)
            for (int i = 0; i < grid.n1; ++i, ++idx) {
                const Vec3 p = grid.position(i, j, k);
                const double q = (p.x1 - location.x1) * (p.x1 - location.x1) / (w.x1 * w.x1) +
                                 (p.x2 - location.x2) * (p.x2 - location.x2) / (w.x2 * w.x2) +
                                 (p.x3 - location.x3) * (p.x3 - location.x3) / (w.x3 * w.x3);
                field.values[static_cast<size_t>(idx)] = std::exp(-q);
            }
    return field;
}

} // namespace xtalk
