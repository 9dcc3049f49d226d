// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "gsplane/core/image.hpp"
#include "gsplane/core/pointmap.hpp"

namespace gsp {

// Point maps travel as binary little-endian PLY (float x,y,z + uchar rgb, one
// vertex per valid pixel in row-major order) plus a sidecar 0/255 PNG mask
// that maps vertices back onto the pixel grid. Grid size and the
// canonical/metric flag are kept in PLY header comments.

void write_pointmap_ply(const std::string& ply_path, const std::string& mask_path,
                        const PointMap& map, const ImageBuffer* colors = nullptr);

PointMap read_pointmap_ply(const std::string& ply_path, const std::string& mask_path,
                           ImageBuffer* colors_out = nullptr);

/// Plain xyz list from one of our PLY files, no grid reconstruction.
std::vector<Vec3> read_ply_points(const std::string& ply_path);

} // namespace gsp
