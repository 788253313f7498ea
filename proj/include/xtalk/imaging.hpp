#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#include "xtalk/forward_model.hpp"

namespace xtalk {

// Delay-and-sum backprojection: the exact transpose of the simulate splat,
// gathering mute*data at the bistatic delay of each voxel for the chosen
// adjoint emitter. With normalize on, each voxel is divided by the number of
// receivers that contribute to it (in-window delay, beam mask open), which
// equalizes aperture coverage. The unnormalized variant is the adjoint proper.
// Parallel over voxels; receiver accumulation order is fixed.
inline ScalarField3D backproject(const DataCube& data, const GridSpec& grid, int adjoint_emitter,
                                 const std::vector<double>& mute, const BeamMask& beam,
                                 bool normalize = true, int threads = 0) {
    const AcquisitionGeometry& geo = data.geometry;
    const TimeGrid& tg = data.timegrid;
    const Vec3 em = geo.emitter(adjoint_emitter);
    const double voxvol = grid.voxel_volume();
    const double inv_c0 = 1.0 / geo.c0;
    const int nr1 = geo.r1_range.count, nr2 = geo.r2_range.count;

    // Receiver positions once, flat row-major.
    std::vector<Vec3> gammas(static_cast<size_t>(geo.receiver_count()));
    {
        size_t flat = 0;
        for (int i1 = 0; i1 < nr1; ++i1)
            for (int i2 = 0; i2 < nr2; ++i2, ++flat) gammas[flat] = geo.receiver(i1, i2);
    }

    ScalarField3D image(grid);
    std::atomic<bool> any_contribution{false};

    const std::int64_t n_vox = grid.size();
    parallel_chunks(n_vox, threads, [&](std::int64_t begin, std::int64_t end) {
        bool local_any = false;
        for (std::int64_t idx = begin; idx < end; ++idx) {
            const int i = static_cast<int>(idx % grid.n1);
            const int j = static_cast<int>((idx / grid.n1) % grid.n2);
            const int k = static_cast<int>(idx / (static_cast<std::int64_t>(grid.n1) * grid.n2));
            const Vec3 x = grid.position(i, j, k);

            double acc = 0.0;
            int count = 0;
            for (size_t r = 0; r < gammas.size(); ++r) {
                const Vec3 gamma = gammas[r];
                if (!beam.keep(static_cast<int>(r), gamma, x)) continue;
                const double t = bistatic_range(x, gamma, em) * inv_c0;
                const detail::Tap tap = detail::time_tap(t, tg);
                if (!tap.lo_ok && !tap.hi_ok) continue;
                const std::int64_t base = static_cast<std::int64_t>(r) * tg.n_t;
                double sample = 0.0;
                if (tap.lo_ok)
                    sample += (1.0 - tap.w) * mute[static_cast<size_t>(base + tap.bin)] *
                              data.samples[static_cast<size_t>(base + tap.bin)];
                if (tap.hi_ok)
                    sample += tap.w * mute[static_cast<size_t>(base + tap.bin + 1)] *
                              data.samples[static_cast<size_t>(base + tap.bin + 1)];
                acc += voxvol * sample;
                ++count;
            }
            if (count > 0) local_any = true;
            image.values[static_cast<size_t>(idx)] = (normalize && count > 0)
                                                         ? acc / count
                                                         : (normalize ? 0.0 : acc);
        }
        if (local_any) any_contribution.store(true, std::memory_order_relaxed);
    });

    if (!any_contribution.load())
        throw EmptyAperture("no receiver contributes to any voxel of the reconstruction grid");
    return image;
}

// Two-operator reconstruction: adjoint emitter 1 on the side of the
// equal-range plane nearer E2 (plane_pi_side > 0), adjoint emitter 2 on the
// other side, blended by a smooth partition of unity across a band of
// band_width_voxels mean voxel widths.
inline ScalarField3D stitched_backproject(const DataCube& data, const GridSpec& grid,
                                          const std::vector<double>& mute, const BeamMask& beam,
                                          double band_width_voxels = 4.0, int threads = 0) {
    const AcquisitionGeometry& geo = data.geometry;
    if (geo.e1 == geo.e2) throw ConfigError("stitched backprojection needs distinct emitters");
    const ScalarField3D img1 = backproject(data, grid, 1, mute, beam, true, threads);
    const ScalarField3D img2 = backproject(data, grid, 2, mute, beam, true, threads);

    const double band =
        band_width_voxels * (grid.spacing.x1 + grid.spacing.x2 + grid.spacing.x3) / 3.0;
    ScalarField3D out(grid);
    std::int64_t idx = 0;
    for (int k = 0; k < grid.n3; ++k)
        for (int j = 0; j < grid.n2; ++j)
            for (int i = 0; i < grid.n1; ++i, ++idx) {
                const double s = plane_pi_signed_distance(grid.position(i, j, k), geo);
                double t = std::clamp(s / band + 0.5, 0.0, 1.0);
                const double w1 = t * t * (3.0 - 2.0 * t); // smoothstep, w1 + w2 = 1
                out.values[static_cast<size_t>(idx)] =
                    w1 * img1.values[static_cast<size_t>(idx)] +
                    (1.0 - w1) * img2.values[static_cast<size_t>(idx)];
            }
    return out;
}

// Stitching blend weight for emitter 1 at a point (exposed for tests).
inline double stitch_weight_e1(Vec3 x, const AcquisitionGeometry& geo, const GridSpec& grid,
                               double band_width_voxels = 4.0) {
    const double band =
        band_width_voxels * (grid.spacing.x1 + grid.spacing.x2 + grid.spacing.x3) / 3.0;
    const double t = std::clamp(plane_pi_signed_distance(x, geo) / band + 0.5, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// ---------------------------------------------------------------------------
// Peak extraction (test/report helper)
// ---------------------------------------------------------------------------

struct Peak {
    int i = 0, j = 0, k = 0;
    Vec3 pos;
    double value = 0.0; // smoothed value
};

namespace detail {

inline ScalarField3D box_smooth(const ScalarField3D& f) {
    const GridSpec& g = f.grid;
    ScalarField3D out(g);
    for (int k = 0; k < g.n3; ++k)
        for (int j = 0; j < g.n2; ++j)
            for (int i = 0; i < g.n1; ++i) {
                double sum = 0.0;
                int n = 0;
                for (int dk = -1; dk <= 1; ++dk)
                    for (int dj = -1; dj <= 1; ++dj)
                        for (int di = -1; di <= 1; ++di) {
                            const int ii = i + di, jj = j + dj, kk = k + dk;
                            if (ii < 0 || jj < 0 || kk < 0 || ii >= g.n1 || jj >= g.n2 || kk >= g.n3)
                                continue;
                            sum += f.at(ii, jj, kk);
                            ++n;
                        }
                out.at(i, j, k) = sum / n;
            }
    return out;
}

} // namespace detail

// Local maxima of the 1-voxel box-smoothed field above threshold_frac of its
// global maximum, sorted by value descending.
inline std::vector<Peak> find_peaks(const ScalarField3D& field, double threshold_frac = 0.5) {
    const ScalarField3D sm = detail::box_smooth(field);
    const GridSpec& g = sm.grid;
    const double global_max = *std::max_element(sm.values.begin(), sm.values.end());
    if (!(global_max > 0.0)) return {};
    const double thresh = threshold_frac * global_max;

    std::vector<Peak> peaks;
    for (int k = 0; k < g.n3; ++k)
        for (int j = 0; j < g.n2; ++j)
            for (int i = 0; i < g.n1; ++i) {
                const double v = sm.at(i, j, k);
                if (v < thresh) continue;
                bool is_max = true;
                for (int dk = -1; dk <= 1 && is_max; ++dk)
                    for (int dj = -1; dj <= 1 && is_max; ++dj)
                        for (int di = -1; di <= 1 && is_max; ++di) {
                            if (di == 0 && dj == 0 && dk == 0) continue;
                            const int ii = i + di, jj = j + dj, kk = k + dk;
                            if (ii < 0 || jj < 0 || kk < 0 || ii >= g.n1 || jj >= g.n2 || kk >= g.n3)
                                continue;
                            if (sm.at(ii, jj, kk) > v) is_max = false;
                        }
                if (is_max) peaks.push_back(Peak{i, j, k, g.position(i, j, k), v});
            }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.value != b.value) return a.value > b.value;
        return std::tie(a.k, a.j, a.i) < std::tie(b.k, b.j, b.i);
    });
    return peaks;
}

// Distance in voxel widths between two points (anisotropic grids normalize
// per axis).
inline double voxel_distance(Vec3 a, Vec3 b, const GridSpec& grid) {
    const double d1 = (a.x1 - b.x1) / grid.spacing.x1;
    const double d2 = (a.x2 - b.x2) / grid.spacing.x2;
    const double d3 = (a.x3 - b.x3) / grid.spacing.x3;
    return std::sqrt(d1 * d1 + d2 * d2 + d3 * d3);
}

// Peaks further than min_separation_voxels from the strongest peak.
inline std::vector<Peak> secondary_peaks(const std::vector<Peak>& peaks, const GridSpec& grid,
                                         double min_separation_voxels = 3.0) {
    std::vector<Peak> out;
    if (peaks.empty()) return out;
    const Peak& main = peaks.front();
    for (size_t p = 1; p < peaks.size(); ++p)
        if (voxel_distance(peaks[p].pos, main.pos, grid) > min_separation_voxels)
            out.push_back(peaks[p]);
    return out;
}

} // namespace xtalk
