// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "gsplane/core/camera.hpp"

namespace gsp {

/// Row-major intensity grid with 1 or 3 channels, values in [0, 1].
/// Writes through set() clamp; raw data() access does not.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * static_cast<size_t>(h) * static_cast<size_t>(c), 0.0) {}

    size_t index(int x, int y, int c) const {
        return (static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x)) *
                   static_cast<size_t>(channels) +
               static_cast<size_t>(c);
    }

    double at(int x, int y, int c) const { return data[index(x, y, c)]; }

    void set(int x, int y, int c, double v) {
        data[index(x, y, c)] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }

    Vec3 rgb(int x, int y) const {
        if (channels == 1) {
            const double g = at(x, y, 0);
            return Vec3(g, g, g);
        }
        return Vec3(at(x, y, 0), at(x, y, 1), at(x, y, 2));
    }

    void set_rgb(int x, int y, const Vec3& v) {
        if (channels == 1) {
            set(x, y, 0, v.x());
            return;
        }
        set(x, y, 0, v.x());
        set(x, y, 1, v.y());
        set(x, y, 2, v.z());
    }

    bool same_size(const ImageBuffer& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// Bilinear sample at continuous (x, y). Returns nullopt when any of the four
/// support pixels falls outside the grid; samples are never extrapolated.
/// The supported domain is [0, width-1] x [0, height-1].
std::optional<Vec3> bilinear_rgb(const ImageBuffer& img, double x, double y);

/// Interpolation weights shared by all bilinear samplers. x0/y0 are clamped so
/// that x == width-1 resolves to the last cell with weight 1 on its far edge.
struct BilinearCell {
    int x0, y0;
    double ax, ay; // fractional weights toward (x0+1, y0+1)
};
std::optional<BilinearCell> bilinear_cell(int width, int height, double x, double y);

} // namespace gsp
