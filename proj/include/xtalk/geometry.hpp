#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "xtalk/errors.hpp"
#include "xtalk/vec3.hpp"

namespace xtalk {

// Uniformly sampled closed interval. count == 1 collapses to lo.
struct AxisRange {
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;

    double value(int i) const {
        if (count == 1) return lo;
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
};

// Two stationary emitters plus a rectangular receiver track at height h.
// Receivers sit at gamma(r) = (r1, r2, h).
struct AcquisitionGeometry {
    Vec3 e1;
    Vec3 e2;
    double track_height = 0.0;
    AxisRange r1_range;
    AxisRange r2_range;
    double c0 = 1.0; // wave speed

    Vec3 receiver(int i1, int i2) const {
        return {r1_range.value(i1), r2_range.value(i2), track_height};
    }

    Vec3 emitter(int which) const { return which == 1 ? e1 : e2; }

    int receiver_count() const { return r1_range.count * r2_range.count; }

    void validate() const {
        if (!is_finite(e1) || !is_finite(e2) || !std::isfinite(track_height) ||
            !std::isfinite(c0) || c0 <= 0.0)
            throw ConfigError("acquisition geometry has non-finite or non-positive fields");
        if (e1 == e2) throw ConfigError("emitters e1 and e2 coincide");
        for (const AxisRange* r : {&r1_range, &r2_range}) {
            if (r->count < 1) throw ConfigError("track axis count must be >= 1");
            if (r->count > 1 && !(r->hi > r->lo))
                throw ConfigError("track axis range degenerate for count > 1");
        }
    }
};

// Image of a scatterer under the crosstalk relation: z = c*(x - gamma) + gamma.
struct ArtifactPoint {
    Vec3 z;
    double c = 0.0;       // scale factor along the receiver ray, > 0
    int i1 = -1, i2 = -1; // receiver grid indices when produced from a track
};

struct Covector {
    Vec3 base;  // base point (artifact location)
    Vec3 xi;    // covector components
    double tau; // frequency-scale parameter
};

// ---------------------------------------------------------------------------
// Elementary geometry
// ---------------------------------------------------------------------------

// Sum of distances from x to the receiver and emitter. Divide by c0 for the
// travel time.
inline double bistatic_range(Vec3 x, Vec3 receiver, Vec3 emitter) {
    return norm(x - receiver) + norm(x - emitter);
}

inline double point_segment_distance(Vec3 p, Vec3 a, Vec3 b) {
    const Vec3 ab = b - a;
    const double len_sq = norm_sq(ab);
    if (len_sq == 0.0) return norm(p - a);
    const double t = std::clamp(dot(p - a, ab) / len_sq, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

// The artifact map is undefined for scatterers on the receiver-emitter
// segments. Exact exclusion gets a small numerical band.
inline constexpr double kSegmentBandFraction = 1e-9;

inline void require_off_segments(Vec3 x, Vec3 receiver, const AcquisitionGeometry& geo) {
    for (int which : {1, 2}) {
        const Vec3 e = geo.emitter(which);
        const double band = kSegmentBandFraction * norm(e - receiver);
        if (point_segment_distance(x, receiver, e) <= band)
            throw SegmentViolation("scatterer " + to_string(x) + " lies on the segment between receiver " +
                                   to_string(receiver) + " and emitter " + std::to_string(which));
    }
}

// ---------------------------------------------------------------------------
// Crosstalk artifact map
// ---------------------------------------------------------------------------

// The artifact map matches the emitter-2 travel range of x against an
// ellipsoid with foci at the receiver and emitter 1. That ellipsoid is empty
// (and no artifact exists) unless the range exceeds the focal distance; the
// closed form for c is meaningful only under this condition, which also makes
// its numerator and denominator positive.
inline bool artifact_exists(Vec3 x, Vec3 receiver, const AcquisitionGeometry& geo) {
    return bistatic_range(x, receiver, geo.e2) > norm(receiver - geo.e1);
}

// Scale factor c for the artifact produced when data generated by emitter 2 is
// backprojected as if it came from emitter 1:
//
//   c = ((|x-g| + |x-E2|)^2 - |g-E1|^2) / (2 ((x-g).(g-E1) + |x-g| (|x-g| + |x-E2|)))
//
// The denominator is strictly positive for x off the excluded segments.
inline double artifact_scale_c(Vec3 x, Vec3 receiver, const AcquisitionGeometry& geo) {
    require_off_segments(x, receiver, geo);
    const Vec3 u = x - receiver;
    const double d = norm(u);
    const double total = d + norm(x - geo.e2); // c0 * t
    const Vec3 w = receiver - geo.e1;
    const double num = total * total - norm_sq(w);
    const double den = 2.0 * (dot(u, w) + d * total);
    return num / den;
}

// Artifact location z = c*(x - gamma) + gamma. Satisfies the equal travel time
// condition |z-g| + |z-E1| = |x-g| + |x-E2|.
inline ArtifactPoint artifact_location(Vec3 x, Vec3 receiver, const AcquisitionGeometry& geo) {
    const double c = artifact_scale_c(x, receiver, geo);
    return ArtifactPoint{c * (x - receiver) + receiver, c, -1, -1};
}

// One artifact per track node, row-major in (r1, r2).
inline std::vector<ArtifactPoint> artifact_surface(Vec3 x, const AcquisitionGeometry& geo) {
    std::vector<ArtifactPoint> surface;
    surface.reserve(static_cast<size_t>(geo.receiver_count()));
    for (int i1 = 0; i1 < geo.r1_range.count; ++i1) {
        for (int i2 = 0; i2 < geo.r2_range.count; ++i2) {
            try {
                ArtifactPoint p = artifact_location(x, geo.receiver(i1, i2), geo);
                p.i1 = i1;
                p.i2 = i2;
                surface.push_back(p);
            } catch (const SegmentViolation& e) {
                throw SegmentViolation(std::string(e.what()) + " (receiver index " +
                                       std::to_string(i1) + "," + std::to_string(i2) + ")");
            }
        }
    }
    return surface;
}

// Orbit z_1 = C(x), z_2 = C(z_1), ..., z_n under repeated application of the
// artifact map for a fixed receiver.
inline std::vector<ArtifactPoint> iterate_artifact(Vec3 x, Vec3 receiver,
                                                   const AcquisitionGeometry& geo, int n) {
    std::vector<ArtifactPoint> orbit;
    orbit.reserve(static_cast<size_t>(n));
    Vec3 cur = x;
    for (int k = 1; k <= n; ++k) {
        try {
            ArtifactPoint p = artifact_location(cur, receiver, geo);
            cur = p.z;
            orbit.push_back(p);
        } catch (const SegmentViolation& e) {
            throw SegmentViolation(std::string(e.what()) + " (orbit iterate " + std::to_string(k) + ")");
        }
    }
    return orbit;
}

// Covector part of the artifact relation:
//   zeta = xi - tau*unit(nu) + tau*unit(x - E2),  nu = c*(x - gamma) + gamma - E1 = z - E1.
inline Covector artifact_covector(Vec3 x, Vec3 xi, double tau, Vec3 receiver,
                                  const AcquisitionGeometry& geo) {
    if (norm_sq(xi) == 0.0) throw ZeroCovector("xi must be nonzero");
    const ArtifactPoint ap = artifact_location(x, receiver, geo);
    const Vec3 nu = ap.z - geo.e1;
    if (norm(nu) <= kSegmentBandFraction * norm(receiver - geo.e1))
        throw SegmentViolation("artifact point coincides with emitter 1; configuration degenerate");
    const Vec3 zeta = xi - tau * unit(nu) + tau * unit(x - geo.e2);
    return Covector{ap.z, zeta, tau};
}

// ---------------------------------------------------------------------------
// The plane pi of equal emitter ranges
// ---------------------------------------------------------------------------

// |x-E1| - |x-E2|. Positive on the side nearer E2, zero on pi.
inline double plane_pi_side(Vec3 x, const AcquisitionGeometry& geo) {
    return norm(x - geo.e1) - norm(x - geo.e2);
}

// Signed Euclidean distance from x to pi (same sign as plane_pi_side).
inline double plane_pi_signed_distance(Vec3 x, const AcquisitionGeometry& geo) {
    const Vec3 n = geo.e2 - geo.e1;
    const double offset = 0.5 * (norm_sq(geo.e2) - norm_sq(geo.e1));
    return (dot(x, n) - offset) / norm(n);
}

// ---------------------------------------------------------------------------
// Slab placement functions
// ---------------------------------------------------------------------------

// Gamma(x, r) = c * (h - x3). Artifacts from x seen at this receiver fall
// below ground iff Gamma > h and above height H iff Gamma < h - H.
inline double gamma_fn(Vec3 x, Vec3 receiver, const AcquisitionGeometry& geo) {
    return artifact_scale_c(x, receiver, geo) * (receiver.x3 - x.x3);
}

struct GammaBounds {
    double tilde = 0.0;          // lower bound for Gamma
    std::optional<double> bar;   // upper bound; empty when (x-g).(g-E1) <= 0
};

// Conservative bracket tilde <= Gamma <= bar expressed through the two-way
// travel range c0*t alone. bar is vacuous when (x-g).(g-E1) <= 0 and the
// caller must fall back to the exact Gamma.
inline GammaBounds gamma_bounds(Vec3 x, Vec3 receiver, const AcquisitionGeometry& geo) {
    require_off_segments(x, receiver, geo);
    const Vec3 u = x - receiver;
    const Vec3 w = receiver - geo.e1;
    const double total = norm(u) + norm(x - geo.e2);
    const double height = receiver.x3 - x.x3;
    GammaBounds out;
    out.tilde = height * (total * total - norm_sq(w)) / (2.0 * (total * total + dot(u, w)));
    const double along = dot(u, w);
    if (along > 0.0) out.bar = height * total * total / along;
    return out;
}

// ---------------------------------------------------------------------------
// Beam-forming critical angle
// ---------------------------------------------------------------------------

struct CriticalAngle {
    double theta_c = 0.0; // radians below horizontal
    Vec3 x_b;             // ground intersection of the critical ray with pi
    Vec3 x_h;             // x_b lifted to track height
};

namespace detail {

// Ground trace of pi intersected with the horizontal line through (r1, r2)
// perpendicular to it, via the slope formulas. Requires both horizontal
// emitter deltas nonzero.
inline Vec3 critical_ground_point(Vec3 e1, Vec3 e2, double r1, double r2) {
    const double d1 = e2.x1 - e1.x1;
    const double d2 = e2.x2 - e1.x2;
    const double b1 = (norm_sq(e1) - norm_sq(e2)) / (2.0 * (e1.x2 - e2.x2));
    const double m2 = d2 / d1;
    const double xb1 = (b1 + m2 * r1 - r2) * (d1 * d2) / (d1 * d1 + d2 * d2);
    const double xb2 = m2 * (xb1 - r1) + r2;
    return {xb1, xb2, 0.0};
}

inline Vec3 rotate_horizontal(Vec3 v, double cs, double sn) {
    return {cs * v.x1 - sn * v.x2, sn * v.x1 + cs * v.x2, v.x3};
}

} // namespace detail

// Critical depression angle for a receiver: rays steeper than theta_c cross pi
// below ground, rays at or below theta_c would cross it at or above ground.
// Emitter pairs aligned with a coordinate axis are handled by computing in a
// rotated horizontal frame.
inline CriticalAngle critical_angle_at(Vec3 receiver, const AcquisitionGeometry& geo) {
    const double d1 = geo.e2.x1 - geo.e1.x1;
    const double d2 = geo.e2.x2 - geo.e1.x2;
    const double horiz = std::hypot(d1, d2);
    if (horiz <= kSegmentBandFraction * norm(geo.e2 - geo.e1))
        throw DegenerateEmitterAxis("emitters stacked vertically: the equal-range plane has no ground trace");

    Vec3 xb;
    if (std::abs(d1) > 1e-6 * horiz && std::abs(d2) > 1e-6 * horiz) {
        xb = detail::critical_ground_point(geo.e1, geo.e2, receiver.x1, receiver.x2);
    } else {
        // Axis-aligned (or nearly so) pair: the slope formulas divide by the
        // small delta, so rotate by 45 degrees, solve, rotate back.
        const double cs = std::cos(0.25 * M_PI), sn = std::sin(0.25 * M_PI);
        const Vec3 e1r = detail::rotate_horizontal(geo.e1, cs, sn);
        const Vec3 e2r = detail::rotate_horizontal(geo.e2, cs, sn);
        const Vec3 rr = detail::rotate_horizontal(receiver, cs, sn);
        const Vec3 xbr = detail::critical_ground_point(e1r, e2r, rr.x1, rr.x2);
        xb = detail::rotate_horizontal(xbr, cs, -sn);
    }

    CriticalAngle out;
    out.x_b = xb;
    out.x_h = Vec3{xb.x1, xb.x2, receiver.x3};
    out.theta_c = std::atan2(receiver.x3, norm(out.x_h - receiver));
    return out;
}

inline CriticalAngle critical_angle(int i1, int i2, const AcquisitionGeometry& geo) {
    return critical_angle_at(geo.receiver(i1, i2), geo);
}

// Depression angle of the ray from a receiver down to x.
inline double depression_angle(Vec3 receiver, Vec3 x) {
    return std::atan2(receiver.x3 - x.x3, horizontal_distance(receiver, x));
}

} // namespace xtalk
