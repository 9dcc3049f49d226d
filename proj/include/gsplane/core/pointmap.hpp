// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gsplane/core/image.hpp"

namespace gsp {

enum class PointSpace { Canonical, Metric };

/// Per-pixel grid of free 3-D points aligned with an image. Canonical maps
/// live in [0,1]^3, metric maps are in world meters.
struct PointMap {
    int width = 0;
    int height = 0;
    std::vector<Vec3> points;
    std::vector<uint8_t> validity;
    PointSpace space = PointSpace::Canonical;

    PointMap() = default;
    PointMap(int w, int h, PointSpace s)
        : width(w), height(h), points(static_cast<size_t>(w) * static_cast<size_t>(h), Vec3::Zero()),
          validity(static_cast<size_t>(w) * static_cast<size_t>(h), 0), space(s) {}

    size_t index(int x, int y) const {
        return static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x);
    }
    const Vec3& at(int x, int y) const { return points[index(x, y)]; }
    Vec3& at(int x, int y) { return points[index(x, y)]; }
    bool valid(int x, int y) const { return validity[index(x, y)] != 0; }
    void set_valid(int x, int y, bool v) { validity[index(x, y)] = v ? 1 : 0; }

    size_t valid_count() const;
};

/// Global per-axis scale plus per-pixel translation field, the map from
/// canonical to metric space: out = scale (.) point + translation(u, v).
struct AffineTransform {
    Vec3 scale = Vec3::Ones();
    int width = 0;
    int height = 0;
    std::vector<Vec3> translation;

    AffineTransform() = default;
    AffineTransform(int w, int h)
        : width(w), height(h),
          translation(static_cast<size_t>(w) * static_cast<size_t>(h), Vec3::Zero()) {}

    size_t index(int x, int y) const {
        return static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x);
    }
    const Vec3& t(int x, int y) const { return translation[index(x, y)]; }
    Vec3& t(int x, int y) { return translation[index(x, y)]; }
};

/// Elementwise scale then translate; validity carries over unchanged.
/// Throws DimensionMismatch when grids disagree, Error on non-positive scale.
PointMap apply_affine(const PointMap& map, const AffineTransform& transform);

/// Bilinear sample of the point grid; invalid when any of the four support
/// points is invalid or outside the grid.
std::optional<Vec3> bilinear_point(const PointMap& map, double x, double y);

/// Per-pixel z-depth with a validity mask; valid entries are positive finite.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> depth;
    std::vector<uint8_t> validity;

    DepthMap() = default;
    DepthMap(int w, int h)
        : width(w), height(h), depth(static_cast<size_t>(w) * static_cast<size_t>(h), 0.0),
          validity(static_cast<size_t>(w) * static_cast<size_t>(h), 0) {}

    size_t index(int x, int y) const {
        return static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x);
    }
    double at(int x, int y) const { return depth[index(x, y)]; }
    bool valid(int x, int y) const { return validity[index(x, y)] != 0; }
    void set(int x, int y, double d, bool v) {
        depth[index(x, y)] = d;
        validity[index(x, y)] = v ? 1 : 0;
    }

    /// Median over valid entries; nullopt when none are valid.
    std::optional<double> valid_median() const;
};

std::optional<double> bilinear_depth(const DepthMap& map, double x, double y);

} // namespace gsp
