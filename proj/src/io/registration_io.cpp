// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/io/registration_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gsplane/core/errors.hpp"
#include "gsplane/io/image_io.hpp"
#include "gsplane/io/pointmap_io.hpp"

namespace gsp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string stem_of(const std::string& json_path) {
    fs::path p(json_path);
    return (p.parent_path() / p.stem()).string();
}

} // namespace

void write_registration(const std::string& json_path, const RegistrationArtifacts& reg) {
    const std::string stem = stem_of(json_path);
    write_pfm3(stem + "_T_left.pfm", reg.transform_left.width, reg.transform_left.height,
               reg.transform_left.translation);
    write_pfm3(stem + "_T_right.pfm", reg.transform_right.width, reg.transform_right.height,
               reg.transform_right.translation);
    write_pointmap_ply(stem + "_pm_left.ply", stem + "_pm_left_mask.png", reg.metric_left,
                       reg.colors_left.data.empty() ? nullptr : &reg.colors_left);
    write_pointmap_ply(stem + "_pm_right.ply", stem + "_pm_right_mask.png", reg.metric_right,
                       reg.colors_right.data.empty() ? nullptr : &reg.colors_right);

    const std::string base = fs::path(stem).filename().string();
    json j;
    j["scale"] = {reg.scale.x(), reg.scale.y(), reg.scale.z()};
    j["source_views"] = {reg.source_left, reg.source_right};
    j["resolution"] = {{"width", reg.metric_left.width}, {"height", reg.metric_left.height}};
    j["translation"] = {{"left", base + "_T_left.pfm"}, {"right", base + "_T_right.pfm"}};
    j["pointmaps"] = {{"left", {{"ply", base + "_pm_left.ply"}, {"mask", base + "_pm_left_mask.png"}}},
                      {"right",
                       {{"ply", base + "_pm_right.ply"}, {"mask", base + "_pm_right_mask.png"}}}};
    std::ofstream out(json_path);
    if (!out)
        throw IoError("cannot open for writing: " + json_path);
    out << j.dump(2) << "\n";
}

RegistrationArtifacts read_registration(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in)
        throw IoError("cannot open: " + json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid JSON in " + json_path + ": " + e.what());
    }
    RegistrationArtifacts reg;
    try {
        const auto s = j.at("scale").get<std::vector<double>>();
        reg.scale = Vec3(s.at(0), s.at(1), s.at(2));
        const auto views = j.at("source_views").get<std::vector<int>>();
        reg.source_left = views.at(0);
        reg.source_right = views.at(1);
        const fs::path dir = fs::path(json_path).parent_path();
        auto resolve = [&](const std::string& rel) { return (dir / rel).string(); };

        int w = 0, h = 0;
        reg.transform_left.translation =
            read_pfm3(resolve(j.at("translation").at("left").get<std::string>()), w, h);
        reg.transform_left.width = w;
        reg.transform_left.height = h;
        reg.transform_left.scale = reg.scale;
        reg.transform_right.translation =
            read_pfm3(resolve(j.at("translation").at("right").get<std::string>()), w, h);
        reg.transform_right.width = w;
        reg.transform_right.height = h;
        reg.transform_right.scale = reg.scale;

        reg.metric_left =
            read_pointmap_ply(resolve(j.at("pointmaps").at("left").at("ply").get<std::string>()),
                              resolve(j.at("pointmaps").at("left").at("mask").get<std::string>()),
                              &reg.colors_left);
        reg.metric_right =
            read_pointmap_ply(resolve(j.at("pointmaps").at("right").at("ply").get<std::string>()),
                              resolve(j.at("pointmaps").at("right").at("mask").get<std::string>()),
                              &reg.colors_right);
    } catch (const json::exception& e) {
        throw IoError("reg.json schema error in " + json_path + ": " + e.what());
    }
    return reg;
}

} // namespace gsp
