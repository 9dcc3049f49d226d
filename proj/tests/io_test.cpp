// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "gsplane/core/errors.hpp"
#include "gsplane/io/camera_io.hpp"
#include "gsplane/io/image_io.hpp"
#include "gsplane/io/plane_io.hpp"
#include "gsplane/io/pointmap_io.hpp"
#include "helpers.hpp"

using namespace gsp;
namespace fs = std::filesystem;

namespace {
struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("gsplane_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};
} // namespace

TEST_CASE("png: quantized round trip, deterministic bytes") {
    TempDir dir;
    auto gen = test::rng(5);
    const ImageBuffer img = test::random_image(gen, 37, 21, 3);
    write_png(dir.file("a.png"), img);
    write_png(dir.file("b.png"), img);
    const ImageBuffer back = read_png(dir.file("a.png"));
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    double max_err = 0.0;
    for (size_t i = 0; i < img.data.size(); ++i)
        max_err = std::max(max_err, std::abs(back.data[i] - img.data[i]));
    CHECK(max_err <= 0.5 / 255.0 + 1e-12);

    std::ifstream fa(dir.file("a.png"), std::ios::binary);
    std::ifstream fb(dir.file("b.png"), std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ba == bb);
}

TEST_CASE("pfm: depth survives a round trip with validity") {
    TempDir dir;
    DepthMap d(9, 5);
    auto gen = test::rng(6);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 9; ++x)
            d.set(x, y, test::uniform(gen, 0.5, 8.0), (x * y) % 3 != 0);
    write_pfm(dir.file("d.pfm"), d);
    const DepthMap back = read_pfm(dir.file("d.pfm"));
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 9; ++x) {
            CHECK(back.valid(x, y) == d.valid(x, y));
            if (d.valid(x, y))
                CHECK(back.at(x, y) ==
                      doctest::Approx(d.at(x, y)).epsilon(1e-6)); // float storage
        }
}

TEST_CASE("pointmap ply: grid, validity, space flag and colors round trip") {
    TempDir dir;
    auto gen = test::rng(8);
    PointMap map(11, 7, PointSpace::Canonical);
    ImageBuffer colors(11, 7, 3);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 11; ++x) {
            map.at(x, y) = Vec3(test::uniform(gen, 0, 1), test::uniform(gen, 0, 1),
                                test::uniform(gen, 0, 1));
            map.set_valid(x, y, (x + 2 * y) % 4 != 0);
            colors.set_rgb(x, y, Vec3(test::uniform(gen, 0, 1), test::uniform(gen, 0, 1),
                                      test::uniform(gen, 0, 1)));
        }
    write_pointmap_ply(dir.file("m.ply"), dir.file("m_mask.png"), map, &colors);
    ImageBuffer colors_back;
    const PointMap back = read_pointmap_ply(dir.file("m.ply"), dir.file("m_mask.png"),
                                            &colors_back);
    CHECK(back.space == PointSpace::Canonical);
    REQUIRE(back.width == 11);
    REQUIRE(back.height == 7);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 11; ++x) {
            CHECK(back.valid(x, y) == map.valid(x, y));
            if (map.valid(x, y)) {
                CHECK((back.at(x, y) - map.at(x, y)).norm() < 1e-6);
                CHECK((colors_back.rgb(x, y) - colors.rgb(x, y)).cwiseAbs().maxCoeff() <
                      0.5 / 255.0 + 1e-9);
            }
        }
    const auto pts = read_ply_points(dir.file("m.ply"));
    CHECK(pts.size() == map.valid_count());
}

TEST_CASE("camera json: validation on load") {
    TempDir dir;
    auto gen = test::rng(10);
    std::vector<CameraModel> cams = {test::random_camera(gen), test::random_camera(gen)};
    write_cameras_json(dir.file("cams.json"), cams);
    const auto back = read_cameras_json(dir.file("cams.json"));
    REQUIRE(back.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK((back[i].rotation - cams[i].rotation).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((back[i].translation - cams[i].translation).norm() < 1e-15);
        CHECK(back[i].fx == cams[i].fx);
    }
    CHECK_THROWS_AS(read_cameras_json(dir.file("missing.json")), IoError);

    std::ofstream bad(dir.file("bad.json"));
    bad << "{\"cameras\":[{\"fx\":100,\"fy\":100,\"cx\":10,\"cy\":10,\"width\":20,\"height\":20,"
        << "\"R\":[2,0,0,0,1,0,0,0,1],\"t\":[0,0,0]}]}";
    bad.close();
    CHECK_THROWS(read_cameras_json(dir.file("bad.json")));
}

TEST_CASE("plane.bin: packed primitives round trip") {
    TempDir dir;
    auto gen = test::rng(12);
    GaussianPlane plane;
    for (int i = 0; i < 17; ++i) {
        Gaussian g;
        g.position = Vec3(test::uniform(gen, -2, 2), test::uniform(gen, -2, 2),
                          test::uniform(gen, 1, 4));
        g.color = Vec3(test::uniform(gen, 0, 1), test::uniform(gen, 0, 1),
                       test::uniform(gen, 0, 1));
        g.rotation = Quat(Eigen::AngleAxisd(test::uniform(gen, 0, 3), test::random_unit(gen)));
        g.scale = Vec3::Constant(test::uniform(gen, 0.01, 0.1));
        g.opacity = test::uniform(gen, 0.1, 1.0);
        plane.primitives.push_back(g);
    }
    write_plane_bin(dir.file("p.bin"), plane);
    const GaussianPlane back = read_plane_bin(dir.file("p.bin"));
    REQUIRE(back.count() == plane.count());
    CHECK_NOTHROW(back.validate());
    for (size_t i = 0; i < plane.count(); ++i) {
        CHECK((back.primitives[i].position - plane.primitives[i].position).norm() < 1e-5);
        CHECK(back.primitives[i].opacity ==
              doctest::Approx(plane.primitives[i].opacity).epsilon(1e-6));
    }
    CHECK_THROWS_AS(read_plane_bin(dir.file("nope.bin")), IoError);
}
