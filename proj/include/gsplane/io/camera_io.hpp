// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gsplane/core/camera.hpp"

namespace gsp {

// Camera JSON object:
//   {"fx","fy","cx","cy","width","height","R":[9 row-major],"t":[3]}
// A rig file is {"cameras":[...]} ordered by view id.

std::vector<CameraModel> read_cameras_json(const std::string& path);
void write_cameras_json(const std::string& path, const std::vector<CameraModel>& cams);

} // namespace gsp
