// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/io/camera_io.hpp"

#include <fstream>

#include <json.hpp>

#include "gsplane/core/errors.hpp"

namespace gsp {

using nlohmann::json;

namespace {

json camera_to_json(const CameraModel& cam) {
    json j;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width"] = cam.width;
    j["height"] = cam.height;
    std::vector<double> r(9);
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col)
            r[static_cast<size_t>(row * 3 + col)] = cam.rotation(row, col);
    j["R"] = r;
    j["t"] = std::vector<double>{cam.translation.x(), cam.translation.y(), cam.translation.z()};
    return j;
}

CameraModel camera_from_json(const json& j) {
    CameraModel cam;
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    const auto r = j.at("R").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    if (r.size() != 9 || t.size() != 3)
        throw IoError("camera JSON: R must have 9 entries and t 3");
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 3; ++col)
            cam.rotation(row, col) = r[static_cast<size_t>(row * 3 + col)];
    cam.translation = Vec3(t[0], t[1], t[2]);
    cam.validate();
    return cam;
}

} // namespace

std::vector<CameraModel> read_cameras_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid JSON in " + path + ": " + e.what());
    }
    std::vector<CameraModel> cams;
    try {
        if (j.is_array()) {
            for (const auto& jc : j)
                cams.push_back(camera_from_json(jc));
        } else {
            for (const auto& jc : j.at("cameras"))
                cams.push_back(camera_from_json(jc));
        }
    } catch (const json::exception& e) {
        throw IoError("camera JSON schema error in " + path + ": " + e.what());
    }
    return cams;
}

void write_cameras_json(const std::string& path, const std::vector<CameraModel>& cams) {
    json j;
    j["cameras"] = json::array();
    for (const auto& cam : cams)
        j["cameras"].push_back(camera_to_json(cam));
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

} // namespace gsp
