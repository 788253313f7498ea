#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "xtalk/imaging.hpp"

namespace xtalk {

// Region that must end artifact free: the slab 0 <= x3 <= H over the image
// grid's horizontal extent, or a sphere.
struct SlabRoi {
    double H = 1.0;
};
struct SphereRoi {
    Vec3 center;
    double R = 1.0;
};
using Roi = std::variant<SlabRoi, SphereRoi>;

enum class MutePolicy { per_bin, per_receiver };

struct MitigationConfig {
    Roi roi = SlabRoi{1.0};
    MutePolicy mute_policy = MutePolicy::per_bin;
    int displacement_iterations = 1;
    int adjoint_emitter = 1;

    void validate() const {
        if (const auto* slab = std::get_if<SlabRoi>(&roi)) {
            if (!(slab->H > 0.0)) throw ConfigError("slab ROI height H must be positive");
        } else {
            const auto& s = std::get<SphereRoi>(roi);
            if (!(s.R > 0.0)) throw ConfigError("sphere ROI radius R must be positive");
        }
        if (displacement_iterations < 0) throw ConfigError("displacement iterations must be >= 0");
        if (adjoint_emitter != 1 && adjoint_emitter != 2)
            throw ConfigError("adjoint emitter must be 1 or 2");
    }
};

namespace detail {

// Zero the two bins that carry a delay. Conservative on the window edge.
inline void zero_delay_bins(double* series, const TimeGrid& tg, double t) {
    const Tap tap = time_tap(t, tg);
    if (tap.bin >= 0 && tap.bin < tg.n_t) series[tap.bin] = 0.0;
    if (tap.bin + 1 >= 0 && tap.bin + 1 < tg.n_t) series[tap.bin + 1] = 0.0;
}

// ROI sample set: indices of reconstruction grid voxels inside the ROI.
inline std::vector<std::int64_t> roi_voxels(const GridSpec& grid, const Roi& roi) {
    std::vector<std::int64_t> out;
    std::int64_t idx = 0;
    for (int k = 0; k < grid.n3; ++k)
        for (int j = 0; j < grid.n2; ++j)
            for (int i = 0; i < grid.n1; ++i, ++idx) {
                const Vec3 p = grid.position(i, j, k);
                bool inside = false;
                if (const auto* slab = std::get_if<SlabRoi>(&roi))
                    inside = p.x3 >= 0.0 && p.x3 <= slab->H;
                else {
                    const auto& s = std::get<SphereRoi>(roi);
                    inside = norm(p - s.center) <= s.R;
                }
                if (inside) out.push_back(idx);
            }
    return out;
}

template <typename Violates>
std::vector<double> geometry_mute(const AcquisitionGeometry& geo, const GridSpec& grid,
                                  const TimeGrid& tg, const std::vector<std::int64_t>& roi,
                                  MutePolicy policy, int threads, Violates&& violates) {
    const int nr2 = geo.r2_range.count;
    const std::int64_t n_recv = geo.receiver_count();
    std::vector<double> mute(static_cast<size_t>(n_recv) * tg.n_t, 1.0);
    const double inv_c0 = 1.0 / geo.c0;

    parallel_chunks(n_recv, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t r = begin; r < end; ++r) {
            const Vec3 gamma = geo.receiver(static_cast<int>(r / nr2), static_cast<int>(r % nr2));
            double* series = mute.data() + r * tg.n_t;
            for (std::int64_t vox : roi) {
                const int i = static_cast<int>(vox % grid.n1);
                const int j = static_cast<int>((vox / grid.n1) % grid.n2);
                const int k = static_cast<int>(vox / (static_cast<std::int64_t>(grid.n1) * grid.n2));
                const Vec3 x = grid.position(i, j, k);
                if (!violates(x, gamma)) continue;
                if (policy == MutePolicy::per_receiver) {
                    std::fill(series, series + tg.n_t, 0.0);
                    break;
                }
                // Drop the bins this scatterer feeds for either emitter's delay.
                zero_delay_bins(series, tg, bistatic_range(x, gamma, geo.e1) * inv_c0);
                zero_delay_bins(series, tg, bistatic_range(x, gamma, geo.e2) * inv_c0);
            }
        }
    });
    return mute;
}

} // namespace detail

// Data mute that keeps only acquisitions whose predicted artifacts fall
// outside the slab [0, H]: (x, r) pairs with h - H <= Gamma(x, r) <= h would
// deposit an artifact inside the slab and are omitted. The result multiplies
// the acquisition mute. c <= 0 means no artifact exists for the pair (the
// matched ellipsoid is empty) and the data is kept.
inline std::vector<double> geometry_mute_slab(const AcquisitionGeometry& geo, const GridSpec& grid,
                                              const TimeGrid& tg, double H,
                                              MutePolicy policy = MutePolicy::per_bin,
                                              int threads = 0) {
    const auto roi = detail::roi_voxels(grid, Roi{SlabRoi{H}});
    return detail::geometry_mute(geo, grid, tg, roi, policy, threads, [&](Vec3 x, Vec3 gamma) {
        if (!artifact_exists(x, gamma, geo)) return false;
        const double g = gamma_fn(x, gamma, geo);
        return g >= gamma.x3 - H && g <= gamma.x3;
    });
}

// Data mute that keeps only acquisitions whose artifacts land farther than R
// from their source: omit pairs with |c - 1| <= R / |x - gamma|, since the
// displacement distance is exactly |c - 1| |x - gamma|.
inline std::vector<double> geometry_mute_sphere(const AcquisitionGeometry& geo, const GridSpec& grid,
                                                const TimeGrid& tg, Vec3 center, double R,
                                                MutePolicy policy = MutePolicy::per_bin,
                                                int threads = 0) {
    const auto roi = detail::roi_voxels(grid, Roi{SphereRoi{center, R}});
    return detail::geometry_mute(geo, grid, tg, roi, policy, threads, [&](Vec3 x, Vec3 gamma) {
        if (!artifact_exists(x, gamma, geo)) return false;
        const double c = artifact_scale_c(x, gamma, geo);
        return std::abs(c - 1.0) * norm(x - gamma) <= R;
    });
}

// P = (adjoint 1 backprojection) of (emitter 1 forward model): a
// pseudodifferential filter that reconstructs features in place.
inline ScalarField3D pseudo_op(const ScalarField3D& image, const AcquisitionGeometry& geo,
                               const TimeGrid& tg, const std::vector<double>& mute,
                               const BeamMask& beam, int threads = 0) {
    const DataCube d = simulate(image, geo, tg, mute, beam, EmitterSubset{true, false}, threads);
    return backproject(d, image.grid, 1, mute, beam, true, threads);
}

// M = (adjoint 1 backprojection) of (emitter 2 forward model): moves features
// along the crosstalk artifact relation.
inline ScalarField3D mixed_op(const ScalarField3D& image, const AcquisitionGeometry& geo,
                              const TimeGrid& tg, const std::vector<double>& mute,
                              const BeamMask& beam, int threads = 0) {
    const DataCube d = simulate(image, geo, tg, mute, beam, EmitterSubset{false, true}, threads);
    return backproject(d, image.grid, 1, mute, beam, true, threads);
}

// Leading amplitudes of the backprojected operator on the diagonal and on the
// artifact graph. Unit values reproduce the broadband unit-amplitude model.
struct SymbolHook {
    double diag = 1.0;
    double mixed = 1.0;
};

namespace detail {

inline void check_plane_clear_of_roi(const AcquisitionGeometry& geo, const GridSpec& grid,
                                     const Roi& roi) {
    std::vector<Vec3> probes;
    if (const auto* slab = std::get_if<SlabRoi>(&roi)) {
        const Vec3 lo{grid.origin.x1, grid.origin.x2, 0.0};
        const Vec3 hi{grid.max_corner().x1, grid.max_corner().x2, slab->H};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                    probes.push_back({a ? hi.x1 : lo.x1, b ? hi.x2 : lo.x2, c ? hi.x3 : lo.x3});
        probes.push_back(0.5 * (lo + hi));
        for (int axis = 0; axis < 3; ++axis)
            for (double side : {0.0, 1.0}) {
                Vec3 p = 0.5 * (lo + hi);
                if (axis == 0) p.x1 = side ? hi.x1 : lo.x1;
                if (axis == 1) p.x2 = side ? hi.x2 : lo.x2;
                if (axis == 2) p.x3 = side ? hi.x3 : lo.x3;
                probes.push_back(p);
            }
    } else {
        const auto& s = std::get<SphereRoi>(roi);
        probes.push_back(s.center);
        for (int axis = 0; axis < 3; ++axis)
            for (double sign : {-1.0, 1.0}) {
                Vec3 p = s.center;
                if (axis == 0) p.x1 += sign * s.R;
                if (axis == 1) p.x2 += sign * s.R;
                if (axis == 2) p.x3 += sign * s.R;
                probes.push_back(p);
            }
    }
    int pos = 0, neg = 0;
    for (const Vec3& p : probes) {
        const double side = plane_pi_side(p, geo);
        if (side > 0.0) ++pos;
        if (side < 0.0) ++neg;
        if (side == 0.0) { ++pos; ++neg; }
    }
    if (pos > 0 && neg > 0)
        throw PlaneIntersectsROI(
            "the equal-range plane crosses the region of interest; enable the beam mask or move the ROI");
}

} // namespace detail

// Iterated artifact displacement. Each pass applies
//   Q_i = q_diag * P + q_fresh * M^(2^(i-1)),
// with amplitudes solved so that the filtered operator keeps unit strength on
// the diagonal, cancels the current artifact graph, and leaves a residual on
// the doubled graph. With unit symbols this gives Q1 = P - M and
// Q_i = P + M^(2^(i-1)) for i >= 2. The returned image holds absolute values,
// since the filtered terms alternate in sign.
inline ScalarField3D displace_artifacts(const ScalarField3D& image, const AcquisitionGeometry& geo,
                                        const TimeGrid& tg, const std::vector<double>& mute,
                                        const BeamMask& beam, int iterations, const Roi& roi,
                                        SymbolHook hook = SymbolHook{}, int threads = 0) {
    if (iterations < 1) throw ConfigError("displacement filtering needs at least one iteration");
    if (!beam.active()) detail::check_plane_clear_of_roi(geo, image.grid, roi);

    ScalarField3D current = image;
    double sym_diag = hook.diag;   // symbol of the running operator on the diagonal
    double sym_fresh = hook.mixed; // symbol on the freshest artifact graph
    for (int it = 1; it <= iterations; ++it) {
        const double q_diag = 1.0 / sym_diag;
        const double q_fresh = -sym_fresh / (sym_diag * sym_diag);

        ScalarField3D next = pseudo_op(current, geo, tg, mute, beam, threads);
        for (double& v : next.values) v *= q_diag;

        ScalarField3D chained = current;
        const std::int64_t folds = std::int64_t{1} << (it - 1);
        for (std::int64_t f = 0; f < folds; ++f)
            chained = mixed_op(chained, geo, tg, mute, beam, threads);
        for (size_t v = 0; v < next.values.size(); ++v)
            next.values[v] += q_fresh * chained.values[v];

        sym_fresh = q_fresh * sym_fresh;
        sym_diag = q_diag * sym_diag;
        current = std::move(next);
    }
    for (double& v : current.values) v = std::abs(v);
    return current;
}

} // namespace xtalk
