#pragma once

#include <stdexcept>
#include <string>

namespace xtalk {

// Scene point too close to a receiver-emitter segment; the artifact map is
// undefined there.
class SegmentViolation : public std::runtime_error {
public:
    explicit SegmentViolation(const std::string& what) : std::runtime_error(what) {}
};

// Covector input with xi = 0; not a valid canonical-relation element.
class ZeroCovector : public std::runtime_error {
public:
    explicit ZeroCovector(const std::string& what) : std::runtime_error(what) {}
};

// Emitter pair whose horizontal positions coincide; the equal-range plane has
// no ground trace and no critical angle exists.
class DegenerateEmitterAxis : public std::runtime_error {
public:
    explicit DegenerateEmitterAxis(const std::string& what) : std::runtime_error(what) {}
};

// The equal-range plane cuts through the region of interest and no beam mask
// is active, so displacement directions are inconsistent inside the ROI.
class PlaneIntersectsROI : public std::runtime_error {
public:
    explicit PlaneIntersectsROI(const std::string& what) : std::runtime_error(what) {}
};

// Backprojection found no receiver contributing to any voxel.
class EmptyAperture : public std::runtime_error {
public:
    explicit EmptyAperture(const std::string& what) : std::runtime_error(what) {}
};

// Requested scene feature lies outside the sampling grid.
class OutOfBounds : public std::runtime_error {
public:
    explicit OutOfBounds(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// File read/write failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace xtalk
