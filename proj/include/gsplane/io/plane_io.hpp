// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "gsplane/splat/gaussian_plane.hpp"

namespace gsp {

// plane.bin: 8-byte magic "GPLN0001", u32 little-endian count, then per
// primitive pos[3] rgb[3] quat[4] (w,x,y,z) scale[3] opacity, all f32
// little-endian.

void write_plane_bin(const std::string& path, const GaussianPlane& plane);
GaussianPlane read_plane_bin(const std::string& path);

} // namespace gsp
