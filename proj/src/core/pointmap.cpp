// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/core/pointmap.hpp"

#include <algorithm>
#include <cmath>

#include "gsplane/core/errors.hpp"

namespace gsp {

size_t PointMap::valid_count() const {
    size_t n = 0;
    for (uint8_t v : validity)
        n += v != 0;
    return n;
}

PointMap apply_affine(const PointMap& map, const AffineTransform& transform) {
    if (map.width != transform.width || map.height != transform.height)
        throw DimensionMismatch("apply_affine: map and transform grids disagree");
    if (!(transform.scale.minCoeff() > 0.0))
        throw Error("apply_affine: scale components must be positive");
    PointMap out(map.width, map.height, PointSpace::Metric);
    out.validity = map.validity;
    const size_t n = map.points.size();
    for (size_t i = 0; i < n; ++i)
        out.points[i] = transform.scale.cwiseProduct(map.points[i]) + transform.translation[i];
    return out;
}

std::optional<Vec3> bilinear_point(const PointMap& map, double x, double y) {
    const auto cell = bilinear_cell(map.width, map.height, x, y);
    if (!cell)
        return std::nullopt;
    const int x0 = cell->x0, y0 = cell->y0;
    if (!map.valid(x0, y0) || !map.valid(x0 + 1, y0) || !map.valid(x0, y0 + 1) ||
        !map.valid(x0 + 1, y0 + 1))
        return std::nullopt;
    const double ax = cell->ax, ay = cell->ay;
    return (1.0 - ay) * ((1.0 - ax) * map.at(x0, y0) + ax * map.at(x0 + 1, y0)) +
           ay * ((1.0 - ax) * map.at(x0, y0 + 1) + ax * map.at(x0 + 1, y0 + 1));
}

std::optional<double> DepthMap::valid_median() const {
    std::vector<double> vals;
    vals.reserve(depth.size());
    for (size_t i = 0; i < depth.size(); ++i)
        if (validity[i])
            vals.push_back(depth[i]);
    if (vals.empty())
        return std::nullopt;
    const size_t mid = vals.size() / 2;
    std::nth_element(vals.begin(), vals.begin() + static_cast<long>(mid), vals.end());
    return vals[mid];
}

std::optional<double> bilinear_depth(const DepthMap& map, double x, double y) {
    const auto cell = bilinear_cell(map.width, map.height, x, y);
    if (!cell)
        return std::nullopt;
    const int x0 = cell->x0, y0 = cell->y0;
    if (!map.valid(x0, y0) || !map.valid(x0 + 1, y0) || !map.valid(x0, y0 + 1) ||
        !map.valid(x0 + 1, y0 + 1))
        return std::nullopt;
    const double ax = cell->ax, ay = cell->ay;
    return (1.0 - ay) * ((1.0 - ax) * map.at(x0, y0) + ax * map.at(x0 + 1, y0)) +
           ay * ((1.0 - ax) * map.at(x0, y0 + 1) + ax * map.at(x0 + 1, y0 + 1));
}

} // namespace gsp
