// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/io/pointmap_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gsplane/core/errors.hpp"
#include "gsplane/io/image_io.hpp"

namespace gsp {

namespace {

void put_f32(std::string& out, float v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

uint8_t quantize255(double v) {
    double q = std::round(v * 255.0);
    if (q < 0.0)
        q = 0.0;
    if (q > 255.0)
        q = 255.0;
    return static_cast<uint8_t>(q);
}

} // namespace

void write_pointmap_ply(const std::string& ply_path, const std::string& mask_path,
                        const PointMap& map, const ImageBuffer* colors) {
    if (colors && (colors->width != map.width || colors->height != map.height))
        throw DimensionMismatch("point map and color image sizes differ");
    const size_t n_valid = map.valid_count();
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n"
           << "comment width " << map.width << "\n"
           << "comment height " << map.height << "\n"
           << "comment space " << (map.space == PointSpace::Metric ? "metric" : "canonical")
           << "\n"
           << "element vertex " << n_valid << "\n"
           << "property float x\nproperty float y\nproperty float z\n"
           << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
           << "end_header\n";
    std::string body;
    body.reserve(n_valid * 15);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            if (!map.valid(x, y))
                continue;
            const Vec3& p = map.at(x, y);
            put_f32(body, static_cast<float>(p.x()));
            put_f32(body, static_cast<float>(p.y()));
            put_f32(body, static_cast<float>(p.z()));
            Vec3 c = colors ? colors->rgb(x, y) : Vec3::Ones();
            body.push_back(static_cast<char>(quantize255(c.x())));
            body.push_back(static_cast<char>(quantize255(c.y())));
            body.push_back(static_cast<char>(quantize255(c.z())));
        }
    std::ofstream out(ply_path, std::ios::binary);
    if (!out)
        throw IoError("cannot open for writing: " + ply_path);
    out << header.str() << body;
    out.close();
    write_mask_png(mask_path, map.width, map.height, map.validity);
}

std::vector<Vec3> read_ply_points(const std::string& ply_path) {
    std::ifstream in(ply_path, std::ios::binary);
    if (!in)
        throw IoError("cannot open: " + ply_path);
    std::string line;
    size_t n_vertex = 0;
    bool saw_format = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line == "end_header")
            break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian")
                throw IoError("unsupported PLY format in " + ply_path);
            saw_format = true;
        } else if (tok == "element") {
            std::string kind;
            ls >> kind >> n_vertex;
        }
    }
    if (!saw_format)
        throw IoError("not a PLY file: " + ply_path);
    std::vector<Vec3> points;
    points.reserve(n_vertex);
    std::vector<char> rec(15);
    for (size_t i = 0; i < n_vertex; ++i) {
        if (!in.read(rec.data(), 15))
            throw IoError("truncated PLY body in " + ply_path);
        float fx, fy, fz;
        std::memcpy(&fx, rec.data(), 4);
        std::memcpy(&fy, rec.data() + 4, 4);
        std::memcpy(&fz, rec.data() + 8, 4);
        points.emplace_back(fx, fy, fz);
    }
    return points;
}

PointMap read_pointmap_ply(const std::string& ply_path, const std::string& mask_path,
                           ImageBuffer* colors_out) {
    std::ifstream in(ply_path, std::ios::binary);
    if (!in)
        throw IoError("cannot open: " + ply_path);
    std::string line;
    int width = 0, height = 0;
    size_t n_vertex = 0;
    PointSpace space = PointSpace::Metric;
    bool saw_format = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line == "end_header")
            break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian")
                throw IoError("unsupported PLY format in " + ply_path);
            saw_format = true;
        } else if (tok == "comment") {
            std::string key;
            ls >> key;
            if (key == "width")
                ls >> width;
            else if (key == "height")
                ls >> height;
            else if (key == "space") {
                std::string s;
                ls >> s;
                space = s == "metric" ? PointSpace::Metric : PointSpace::Canonical;
            }
        } else if (tok == "element") {
            std::string kind;
            ls >> kind >> n_vertex;
            if (kind != "vertex")
                throw IoError("unexpected PLY element in " + ply_path);
        }
    }
    if (!saw_format)
        throw IoError("not a PLY file: " + ply_path);

    int mw = 0, mh = 0;
    const auto mask = read_mask_png(mask_path, mw, mh);
    if (width == 0 && height == 0) {
        width = mw;
        height = mh;
    }
    if (mw != width || mh != height)
        throw DimensionMismatch("mask size disagrees with PLY header in " + ply_path);

    PointMap map(width, height, space);
    map.validity = mask;
    if (map.valid_count() != n_vertex)
        throw IoError("vertex count does not match mask in " + ply_path);
    if (colors_out)
        *colors_out = ImageBuffer(width, height, 3);

    std::vector<char> rec(15);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            if (!map.valid(x, y))
                continue;
            if (!in.read(rec.data(), 15))
                throw IoError("truncated PLY body in " + ply_path);
            float fx, fy, fz;
            std::memcpy(&fx, rec.data(), 4);
            std::memcpy(&fy, rec.data() + 4, 4);
            std::memcpy(&fz, rec.data() + 8, 4);
            map.at(x, y) = Vec3(fx, fy, fz);
            if (colors_out) {
                colors_out->set_rgb(x, y,
                                    Vec3(static_cast<uint8_t>(rec[12]) / 255.0,
                                         static_cast<uint8_t>(rec[13]) / 255.0,
                                         static_cast<uint8_t>(rec[14]) / 255.0));
            }
        }
    return map;
}

} // namespace gsp
