// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "gsplane/core/image.hpp"
#include "gsplane/core/pointmap.hpp"

namespace gsp {

/// reg.json plus sidecar files named after its stem: <stem>_T_left.pfm,
/// <stem>_T_right.pfm (3-channel translation fields), <stem>_pm_left.ply /
/// _mask.png and the right-view pair (metric point maps with colors).
struct RegistrationArtifacts {
    Vec3 scale = Vec3::Ones();
    AffineTransform transform_left;
    AffineTransform transform_right;
    PointMap metric_left;
    PointMap metric_right;
    ImageBuffer colors_left;   // colors carried into the PLYs
    ImageBuffer colors_right;
    int source_left = 0;
    int source_right = 1;
};

void write_registration(const std::string& json_path, const RegistrationArtifacts& reg);
RegistrationArtifacts read_registration(const std::string& json_path);

} // namespace gsp
