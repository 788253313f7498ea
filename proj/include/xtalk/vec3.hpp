#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace xtalk {

// Point or vector in scene coordinates. x3 is height.
struct Vec3 {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x1 + b.x1, a.x2 + b.x2, a.x3 + b.x3}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x1 - b.x1, a.x2 - b.x2, a.x3 - b.x3}; }
    friend Vec3 operator*(double s, Vec3 v) { return {s * v.x1, s * v.x2, s * v.x3}; }
    friend Vec3 operator*(Vec3 v, double s) { return s * v; }
    friend Vec3 operator/(Vec3 v, double s) { return {v.x1 / s, v.x2 / s, v.x3 / s}; }
    Vec3& operator+=(Vec3 o) { x1 += o.x1; x2 += o.x2; x3 += o.x3; return *this; }
    Vec3& operator-=(Vec3 o) { x1 -= o.x1; x2 -= o.x2; x3 -= o.x3; return *this; }
    friend bool operator==(Vec3 a, Vec3 b) { return a.x1 == b.x1 && a.x2 == b.x2 && a.x3 == b.x3; }
    friend bool operator!=(Vec3 a, Vec3 b) { return !(a == b); }
};

inline double dot(Vec3 a, Vec3 b) { return a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3; }

inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.x2 * b.x3 - a.x3 * b.x2,
            a.x3 * b.x1 - a.x1 * b.x3,
            a.x1 * b.x2 - a.x2 * b.x1};
}

inline double norm(Vec3 v) { return std::sqrt(dot(v, v)); }

inline double norm_sq(Vec3 v) { return dot(v, v); }

inline Vec3 unit(Vec3 v) { return v / norm(v); }

// Horizontal (x1, x2) distance between two points.
inline double horizontal_distance(Vec3 a, Vec3 b) {
    return std::hypot(a.x1 - b.x1, a.x2 - b.x2);
}

inline bool is_finite(Vec3 v) {
    return std::isfinite(v.x1) && std::isfinite(v.x2) && std::isfinite(v.x3);
}

inline std::string to_string(Vec3 v) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "(%.12g, %.12g, %.12g)", v.x1, v.x2, v.x3);
    return buf;
}

} // namespace xtalk
