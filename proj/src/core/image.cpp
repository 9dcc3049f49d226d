// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/core/image.hpp"

#include <cmath>

namespace gsp {

std::optional<BilinearCell> bilinear_cell(int width, int height, double x, double y) {
    if (!(x >= 0.0) || !(y >= 0.0) || !(x <= static_cast<double>(width - 1)) ||
        !(y <= static_cast<double>(height - 1)))
        return std::nullopt;
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    if (x0 > width - 2)
        x0 = width - 2;
    if (y0 > height - 2)
        y0 = height - 2;
    if (x0 < 0 || y0 < 0) // 1-wide or 1-tall grids have no full support cell
        return std::nullopt;
    return BilinearCell{x0, y0, x - static_cast<double>(x0), y - static_cast<double>(y0)};
}

std::optional<Vec3> bilinear_rgb(const ImageBuffer& img, double x, double y) {
    const auto cell = bilinear_cell(img.width, img.height, x, y);
    if (!cell)
        return std::nullopt;
    const int x0 = cell->x0, y0 = cell->y0;
    const double ax = cell->ax, ay = cell->ay;
    const Vec3 v00 = img.rgb(x0, y0);
    const Vec3 v10 = img.rgb(x0 + 1, y0);
    const Vec3 v01 = img.rgb(x0, y0 + 1);
    const Vec3 v11 = img.rgb(x0 + 1, y0 + 1);
    return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
}

} // namespace gsp
