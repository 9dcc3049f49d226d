// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/io/plane_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "gsplane/core/errors.hpp"

namespace gsp {

namespace {
constexpr char kMagic[8] = {'G', 'P', 'L', 'N', '0', '0', '0', '1'};

void put_f32(std::string& out, double v) {
    const float f = static_cast<float>(v);
    char b[4];
    std::memcpy(b, &f, 4);
    out.append(b, 4);
}

double get_f32(const char* p) {
    float f;
    std::memcpy(&f, p, 4);
    return static_cast<double>(f);
}
} // namespace

void write_plane_bin(const std::string& path, const GaussianPlane& plane) {
    std::string out;
    out.reserve(12 + plane.count() * 56);
    out.append(kMagic, 8);
    const uint32_t n = static_cast<uint32_t>(plane.count());
    char nb[4] = {static_cast<char>(n & 0xff), static_cast<char>((n >> 8) & 0xff),
                  static_cast<char>((n >> 16) & 0xff), static_cast<char>((n >> 24) & 0xff)};
    out.append(nb, 4);
    for (const Gaussian& g : plane.primitives) {
        put_f32(out, g.position.x());
        put_f32(out, g.position.y());
        put_f32(out, g.position.z());
        put_f32(out, g.color.x());
        put_f32(out, g.color.y());
        put_f32(out, g.color.z());
        put_f32(out, g.rotation.w());
        put_f32(out, g.rotation.x());
        put_f32(out, g.rotation.y());
        put_f32(out, g.rotation.z());
        put_f32(out, g.scale.x());
        put_f32(out, g.scale.y());
        put_f32(out, g.scale.z());
        put_f32(out, g.opacity);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    f.write(out.data(), static_cast<long>(out.size()));
}

GaussianPlane read_plane_bin(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open: " + path);
    std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 8) != 0)
        throw IoError("not a plane.bin file: " + path);
    const uint8_t* nb = reinterpret_cast<const uint8_t*>(buf.data() + 8);
    const uint32_t n = static_cast<uint32_t>(nb[0]) | (static_cast<uint32_t>(nb[1]) << 8) |
                       (static_cast<uint32_t>(nb[2]) << 16) | (static_cast<uint32_t>(nb[3]) << 24);
    if (buf.size() < 12 + static_cast<size_t>(n) * 56)
        throw IoError("truncated plane.bin: " + path);
    GaussianPlane plane;
    plane.primitives.resize(n);
    const char* p = buf.data() + 12;
    for (uint32_t i = 0; i < n; ++i, p += 56) {
        Gaussian& g = plane.primitives[i];
        g.position = Vec3(get_f32(p), get_f32(p + 4), get_f32(p + 8));
        g.color = Vec3(get_f32(p + 12), get_f32(p + 16), get_f32(p + 20));
        g.rotation = Quat(get_f32(p + 24), get_f32(p + 28), get_f32(p + 32), get_f32(p + 36));
        // float storage wiggles the norm; snap back to unit.
        g.rotation.normalize();
        g.scale = Vec3(get_f32(p + 40), get_f32(p + 44), get_f32(p + 48));
        g.opacity = get_f32(p + 52);
    }
    return plane;
}

} // namespace gsp
