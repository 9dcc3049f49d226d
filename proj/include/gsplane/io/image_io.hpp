// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsplane/core/image.hpp"
#include "gsplane/core/pointmap.hpp"

namespace gsp {

/// 8-bit PNG, RGB for 3-channel buffers and grayscale for 1-channel.
/// Values are quantized with round(v * 255).
void write_png(const std::string& path, const ImageBuffer& img);
ImageBuffer read_png(const std::string& path);

/// 0/255 grayscale PNG mask.
void write_mask_png(const std::string& path, int width, int height,
                    const std::vector<uint8_t>& mask);
std::vector<uint8_t> read_mask_png(const std::string& path, int& width, int& height);

/// PFM, little-endian (negative scale), rows stored bottom-up per the format.
/// Invalid depths are written as 0.
void write_pfm(const std::string& path, const DepthMap& depth);
DepthMap read_pfm(const std::string& path);

/// 3-channel PFM used for dense vector fields (e.g. translation grids).
void write_pfm3(const std::string& path, int width, int height, const std::vector<Vec3>& field);
std::vector<Vec3> read_pfm3(const std::string& path, int& width, int& height);

} // namespace gsp
