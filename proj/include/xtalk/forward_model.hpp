#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "xtalk/geometry.hpp"
#include "xtalk/parallel.hpp"
#include "xtalk/scene.hpp"

namespace xtalk {

struct TimeGrid {
    double t_min = 0.0;
    double t_max = 1.0;
    int n_t = 2;

    double dt() const { return (t_max - t_min) / (n_t - 1); }

    void validate() const {
        if (!(t_min < t_max) || n_t < 2) throw ConfigError("time grid requires t_min < t_max and n_t >= 2");
    }
};

// Which emitters contribute to the simulated data.
struct EmitterSubset {
    bool use1 = true;
    bool use2 = true;
};

// Smooth raised-cosine taper over the track edges and the time window.
// Boundary samples are always zero while enabled; the interior is one.
struct MuteSpec {
    bool enabled = true;
    double edge_taper_fraction = 0.0; // of each axis, in [0, 0.5]

    void validate() const {
        if (!(edge_taper_fraction >= 0.0) || !(edge_taper_fraction <= 0.5))
            throw ConfigError("mute taper fraction must lie in [0, 0.5]");
    }
};

// Per-receiver critical-angle mask. Rays at depression angle <= theta_c(r)
// would cross the equal-range plane at or above ground and are dropped.
struct BeamMask {
    enum class Mode { none, critical_angle };
    Mode mode = Mode::none;
    std::vector<double> theta_c; // per receiver, row-major in (r1, r2), radians

    bool active() const { return mode == Mode::critical_angle; }

    bool keep(int receiver_flat, Vec3 receiver, Vec3 x) const {
        if (!active()) return true;
        return depression_angle(receiver, x) > theta_c[static_cast<size_t>(receiver_flat)];
    }
};

inline BeamMask build_beam_mask(const AcquisitionGeometry& geo, BeamMask::Mode mode) {
    BeamMask mask;
    mask.mode = mode;
    if (mode == BeamMask::Mode::critical_angle) {
        mask.theta_c.resize(static_cast<size_t>(geo.receiver_count()));
        size_t flat = 0;
        for (int i1 = 0; i1 < geo.r1_range.count; ++i1)
            for (int i2 = 0; i2 < geo.r2_range.count; ++i2, ++flat)
                mask.theta_c[flat] = critical_angle(i1, i2, geo).theta_c;
    }
    return mask;
}

// Simulated measurements d(r, t); one time series per receiver, stored
// time-fastest then r2 then r1.
struct DataCube {
    AcquisitionGeometry geometry;
    TimeGrid timegrid;
    std::vector<double> samples;
    double clipped_fraction = 0.0; // nonzero-scene splats falling outside the window

    std::int64_t series_offset(int i1, int i2) const {
        return (static_cast<std::int64_t>(i1) * geometry.r2_range.count + i2) * timegrid.n_t;
    }
    std::int64_t size() const {
        return static_cast<std::int64_t>(geometry.receiver_count()) * timegrid.n_t;
    }
};

namespace detail {

inline double edge_taper(double s, double frac) {
    // s in [0, 1] along the axis; zero at the ends, one inside the taper band.
    if (s <= 0.0 || s >= 1.0) return 0.0;
    if (frac <= 0.0) return 1.0;
    const double m = std::min(s, 1.0 - s);
    if (m >= frac) return 1.0;
    return 0.5 * (1.0 - std::cos(M_PI * m / frac));
}

// Shared splat/interp coordinate so simulate and backproject are exact
// transposes: a hat kernel over the two bins bracketing the delay.
struct Tap {
    int bin = -1;
    double w = 0.0; // weight of bin+1; bin gets 1-w
    bool lo_ok = false, hi_ok = false;
};

inline Tap time_tap(double t, const TimeGrid& tg) {
    Tap tap;
    const double u = (t - tg.t_min) / tg.dt();
    const double fl = std::floor(u);
    tap.bin = static_cast<int>(fl);
    tap.w = u - fl;
    tap.lo_ok = tap.bin >= 0 && tap.bin < tg.n_t;
    tap.hi_ok = tap.w > 0.0 && tap.bin + 1 >= 0 && tap.bin + 1 < tg.n_t;
    return tap;
}

} // namespace detail

// Mute weights over (r1, r2, t), separable raised cosine per axis.
inline std::vector<double> build_mute(const AcquisitionGeometry& geo, const TimeGrid& tg,
                                      const MuteSpec& spec) {
    spec.validate();
    const int nr1 = geo.r1_range.count, nr2 = geo.r2_range.count, nt = tg.n_t;
    std::vector<double> mute(static_cast<size_t>(nr1) * nr2 * nt, 1.0);
    if (!spec.enabled) return mute;

    auto axis_taper = [&](int n, int i) {
        if (n == 1) return 1.0; // single-sample axis carries no edge
        return detail::edge_taper(static_cast<double>(i) / (n - 1), spec.edge_taper_fraction);
    };
    std::vector<double> w1(static_cast<size_t>(nr1)), w2(static_cast<size_t>(nr2)),
        wt(static_cast<size_t>(nt));
    for (int i = 0; i < nr1; ++i) w1[static_cast<size_t>(i)] = axis_taper(nr1, i);
    for (int i = 0; i < nr2; ++i) w2[static_cast<size_t>(i)] = axis_taper(nr2, i);
    for (int i = 0; i < nt; ++i) wt[static_cast<size_t>(i)] = axis_taper(nt, i);

    size_t idx = 0;
    for (int i1 = 0; i1 < nr1; ++i1)
        for (int i2 = 0; i2 < nr2; ++i2) {
            const double wr = w1[static_cast<size_t>(i1)] * w2[static_cast<size_t>(i2)];
            for (int it = 0; it < nt; ++it, ++idx) mute[idx] = wr * wt[static_cast<size_t>(it)];
        }
    return mute;
}

// Broadband single-scattering forward model: every voxel deposits its value
// times the voxel volume into the two time bins bracketing the bistatic delay
// t = (|x - gamma| + |x - E_i|)/c0, summed over the requested emitters, then
// multiplied by the mute. Parallel over receivers; each time series is an
// independent accumulation, so results do not depend on the thread count.
inline DataCube simulate(const ScalarField3D& scene, const AcquisitionGeometry& geo,
                         const TimeGrid& tg, const std::vector<double>& mute, const BeamMask& beam,
                         EmitterSubset emitters, int threads = 0) {
    tg.validate();
    DataCube cube;
    cube.geometry = geo;
    cube.timegrid = tg;
    cube.samples.assign(static_cast<size_t>(cube.size()), 0.0);

    const GridSpec& grid = scene.grid;
    const double voxvol = grid.voxel_volume();
    const double inv_c0 = 1.0 / geo.c0;
    const int nr2 = geo.r2_range.count;
    const std::int64_t n_recv = geo.receiver_count();

    std::vector<std::int64_t> clipped(static_cast<size_t>(n_recv), 0);
    std::vector<std::int64_t> considered(static_cast<size_t>(n_recv), 0);

    parallel_chunks(n_recv, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t r = begin; r < end; ++r) {
            const int i1 = static_cast<int>(r / nr2);
            const int i2 = static_cast<int>(r % nr2);
            const Vec3 gamma = geo.receiver(i1, i2);
            double* series = cube.samples.data() + cube.series_offset(i1, i2);
            const double* mrow = mute.data() + cube.series_offset(i1, i2);
            std::int64_t n_clip = 0, n_seen = 0;

            // Each emitter accumulates into its own buffer and is muted before
            // summation, so a two-emitter cube equals the per-emitter cubes
            // added bit for bit.
            std::vector<double> scratch(static_cast<size_t>(tg.n_t));
            for (int which : {1, 2}) {
                if ((which == 1 && !emitters.use1) || (which == 2 && !emitters.use2)) continue;
                const Vec3 em = geo.emitter(which);
                std::fill(scratch.begin(), scratch.end(), 0.0);
                std::int64_t idx = 0;
                for (int k = 0; k < grid.n3; ++k)
                    for (int j = 0; j < grid.n2; ++j)
                        for (int i = 0; i < grid.n1; ++i, ++idx) {
                            const double v = scene.values[static_cast<size_t>(idx)];
                            if (v == 0.0) continue;
                            const Vec3 x = grid.position(i, j, k);
                            if (!beam.keep(static_cast<int>(r), gamma, x)) continue;
                            const double t = bistatic_range(x, gamma, em) * inv_c0;
                            const detail::Tap tap = detail::time_tap(t, tg);
                            ++n_seen;
                            const double mass = v * voxvol;
                            bool clip = false;
                            if (tap.lo_ok)
                                scratch[static_cast<size_t>(tap.bin)] += (1.0 - tap.w) * mass;
                            else if (tap.w < 1.0)
                                clip = true;
                            if (tap.hi_ok)
                                scratch[static_cast<size_t>(tap.bin + 1)] += tap.w * mass;
                            else if (tap.w > 0.0)
                                clip = true;
                            if (clip) ++n_clip;
                        }
                for (int it = 0; it < tg.n_t; ++it)
                    series[it] += scratch[static_cast<size_t>(it)] * mrow[it];
            }
            clipped[static_cast<size_t>(r)] = n_clip;
            considered[static_cast<size_t>(r)] = n_seen;
        }
    });

    std::int64_t total_clip = 0, total_seen = 0;
    for (std::int64_t r = 0; r < n_recv; ++r) {
        total_clip += clipped[static_cast<size_t>(r)];
        total_seen += considered[static_cast<size_t>(r)];
    }
    cube.clipped_fraction = total_seen > 0 ? static_cast<double>(total_clip) / total_seen : 0.0;
    return cube;
}

inline DataCube simulate(const ScalarField3D& scene, const AcquisitionGeometry& geo,
                         const TimeGrid& tg, const MuteSpec& mute_spec, const BeamMask& beam,
                         EmitterSubset emitters, int threads = 0) {
    return simulate(scene, geo, tg, build_mute(geo, tg, mute_spec), beam, emitters, threads);
}

// Time grid that covers every bistatic delay of the grid for both emitters,
// with a small pad so no splat is clipped. The lower bound uses the emitter
// to receiver distance, which bounds any bistatic range from below.
inline TimeGrid auto_time_grid(const GridSpec& grid, const AcquisitionGeometry& geo, int n_t) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int i1 = 0; i1 < geo.r1_range.count; ++i1)
        for (int i2 = 0; i2 < geo.r2_range.count; ++i2) {
            const Vec3 gamma = geo.receiver(i1, i2);
            for (const Vec3& em : {geo.e1, geo.e2}) {
                lo = std::min(lo, norm(gamma - em));
                for (int ci = 0; ci < 2; ++ci)
                    for (int cj = 0; cj < 2; ++cj)
                        for (int ck = 0; ck < 2; ++ck) {
                            const Vec3 corner = grid.position(ci ? grid.n1 - 1 : 0,
                                                              cj ? grid.n2 - 1 : 0,
                                                              ck ? grid.n3 - 1 : 0);
                            hi = std::max(hi, bistatic_range(corner, gamma, em));
                        }
            }
        }
    TimeGrid tg;
    tg.n_t = n_t;
    const double pad = 0.02 * (hi - lo) + 1e-9;
    tg.t_min = (lo - pad) / geo.c0;
    tg.t_max = (hi + pad) / geo.c0;
    return tg;
}

} // namespace xtalk
