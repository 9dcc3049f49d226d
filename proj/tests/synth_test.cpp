// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "gsplane/core/errors.hpp"
#include "gsplane/synth/scene.hpp"
#include "helpers.hpp"

using namespace gsp;

TEST_CASE("raycast: unit sphere depth on the principal ray") {
    SceneSpec scene;
    scene.seed = 3;
    PrimitiveSpec sphere;
    sphere.kind = PrimitiveSpec::Kind::Sphere;
    sphere.center = Vec3(0.0, 0.0, 3.0);
    sphere.radius = 1.0;
    scene.primitives = {sphere};
    // camera at origin looking +z: identity extrinsics
    CameraModel cam = test::identity_camera(100.0, 100.0, 31.5, 31.5, 64, 64);
    const RenderedView view = raycast_render(scene, cam);
    // principal point lies between pixels; probe the 4 nearest rays instead
    const double d = view.depth.at(31, 31);
    CHECK(view.depth.valid(31, 31));
    CHECK(d == doctest::Approx(2.0).epsilon(1e-4)); // ray through (31,31) is near-axial
    // exact on-axis check with centered principal point
    CameraModel cam2 = test::identity_camera(100.0, 100.0, 32.0, 32.0, 65, 65);
    const RenderedView view2 = raycast_render(scene, cam2);
    CHECK(view2.depth.valid(32, 32));
    CHECK(view2.depth.at(32, 32) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("raycast: ground plane points satisfy the plane equation") {
    SceneSpec scene;
    scene.seed = 4;
    PrimitiveSpec ground;
    ground.kind = PrimitiveSpec::Kind::Ground;
    ground.center = Vec3(0.0, 0.0, 0.0);
    scene.primitives = {ground};
    const auto cams = test::small_rig();
    const RenderedView view = raycast_render(scene, cams[0]);
    size_t n_valid = 0;
    for (int y = 0; y < view.points.height; ++y)
        for (int x = 0; x < view.points.width; ++x) {
            if (!view.points.valid(x, y))
                continue;
            ++n_valid;
            CHECK(std::abs(view.points.at(x, y).z()) <= 1e-9);
        }
    CHECK(n_valid > 100);
}

TEST_CASE("raycast: point map equals unproject(pixel, depth) everywhere") {
    const SceneSpec scene = default_scene(11);
    const auto cams = test::small_rig();
    for (const auto& cam : cams) {
        const RenderedView view = raycast_render(scene, cam);
        double max_err = 0.0;
        for (int y = 0; y < view.points.height; ++y)
            for (int x = 0; x < view.points.width; ++x) {
                if (!view.points.valid(x, y))
                    continue;
                const Vec3 p = unproject(Vec2(x, y), view.depth.at(x, y), cam);
                max_err = std::max(max_err, (p - view.points.at(x, y)).norm());
            }
        CHECK(max_err <= 1e-9);
    }
}

TEST_CASE("raycast: identical seeds give bit-identical views") {
    const SceneSpec a = default_scene(77);
    const SceneSpec b = default_scene(77);
    const auto cams = test::small_rig();
    const RenderedView va = raycast_render(a, cams[1]);
    const RenderedView vb = raycast_render(b, cams[1]);
    CHECK(va.image.data == vb.image.data);
    CHECK(va.depth.depth == vb.depth.depth);
    REQUIRE(va.points.points.size() == vb.points.points.size());
    for (size_t i = 0; i < va.points.points.size(); ++i)
        CHECK(va.points.points[i] == vb.points.points[i]);

    const SceneSpec c = default_scene(78);
    const RenderedView vc = raycast_render(c, cams[1]);
    CHECK(va.image.data != vc.image.data);
}

TEST_CASE("photo-consistency: cross-view warp through GT depth matches") {
    // Lambertian shading is view independent, so co-visible surface points
    // must look the same from both source cameras. Bilinear resampling of the
    // other view is the only error source, so the scene is kept C1-smooth
    // (sphere + ground, gentle texture) and depth edges are gated out.
    SceneSpec scene = default_scene(5);
    scene.primitives.erase(scene.primitives.begin() + 1); // drop the box (hard shading edges)
    for (auto& prim : scene.primitives)
        prim.texture.cell = 0.8;
    const auto cams = test::small_rig(256, 144);
    const RenderedView a = raycast_render(scene, cams.front());
    const RenderedView b = raycast_render(scene, cams.back());

    double worst = 0.0;
    size_t checked = 0;
    for (int y = 1; y < a.points.height - 1; ++y)
        for (int x = 1; x < a.points.width - 1; ++x) {
            if (!a.points.valid(x, y))
                continue;
            const Vec3 p = a.points.at(x, y);
            const Projection proj = project(p, cams.back());
            if (!(proj.depth > 0.0))
                continue;
            const auto cell = bilinear_cell(b.depth.width, b.depth.height, proj.pixel.x(),
                                            proj.pixel.y());
            if (!cell)
                continue;
            // same smooth surface patch: all four support depths close to ours
            double lo = 1e300, hi = -1e300;
            bool ok = true;
            for (int dy = 0; dy < 2 && ok; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    if (!b.depth.valid(cell->x0 + dx, cell->y0 + dy)) {
                        ok = false;
                        break;
                    }
                    const double d = b.depth.at(cell->x0 + dx, cell->y0 + dy);
                    lo = std::min(lo, d);
                    hi = std::max(hi, d);
                }
            if (!ok || hi - lo > 1e-3 * proj.depth ||
                std::abs(0.5 * (hi + lo) - proj.depth) > 1e-3 * proj.depth)
                continue; // occluded, grazing, or at a depth edge
            const auto sample = bilinear_rgb(b.image, proj.pixel.x(), proj.pixel.y());
            if (!sample)
                continue;
            worst = std::max(worst, ((*sample) - a.image.rgb(x, y)).cwiseAbs().maxCoeff());
            ++checked;
        }
    CHECK(checked > 1000);
    CHECK(worst <= 1e-3);
}

TEST_CASE("corrupt_pointmap: exact invertibility without noise") {
    const SceneSpec scene = default_scene(9);
    const auto cams = test::small_rig();
    const RenderedView view = raycast_render(scene, cams[0]);

    SUBCASE("identity corruption reduces to min-max normalization") {
        CorruptionSpec spec;
        spec.seed = 1;
        const CorruptedPointMap out = corrupt_pointmap(view.points, spec);
        CHECK(out.map.space == PointSpace::Canonical);
        double lo = 1e9, hi = -1e9, max_err = 0.0;
        for (int y = 0; y < out.map.height; ++y)
            for (int x = 0; x < out.map.width; ++x) {
                if (!out.map.valid(x, y))
                    continue;
                lo = std::min(lo, out.map.at(x, y).minCoeff());
                hi = std::max(hi, out.map.at(x, y).maxCoeff());
                const Vec3 undone =
                    out.gt_transform.scale.cwiseProduct(out.map.at(x, y)) +
                    out.gt_transform.t(x, y);
                max_err = std::max(max_err, (undone - view.points.at(x, y)).norm());
            }
        CHECK(lo >= -1e-12);
        CHECK(hi <= 1.0 + 1e-12);
        CHECK(max_err <= 1e-12);
    }

    SUBCASE("anisotropic scale and offset round trip") {
        CorruptionSpec spec;
        spec.true_scale = Vec3(2.0, 0.7, 1.3);
        spec.true_offset = Vec3(0.08, -0.05, 0.02);
        spec.smooth_warp_amplitude = 0.04;
        spec.smooth_warp_wavelength = 60.0;
        spec.seed = 12;
        const CorruptedPointMap out = corrupt_pointmap(view.points, spec);
        double max_err = 0.0;
        for (int y = 0; y < out.map.height; ++y)
            for (int x = 0; x < out.map.width; ++x) {
                if (!out.map.valid(x, y))
                    continue;
                const Vec3 undone =
                    out.gt_transform.scale.cwiseProduct(out.map.at(x, y)) +
                    out.gt_transform.t(x, y);
                max_err = std::max(max_err, (undone - view.points.at(x, y)).norm());
            }
        CHECK(max_err <= 1e-12);
        CHECK(out.gt_transform.scale.minCoeff() > 0.0);
    }

    SUBCASE("pair corruption shares one normalization") {
        const RenderedView right = raycast_render(scene, cams[2]);
        CorruptionSpec spec;
        spec.true_scale = Vec3(1.4, 1.4, 1.4);
        spec.smooth_warp_amplitude = 0.03;
        spec.seed = 5;
        const auto [cl, cr] = corrupt_pointmap_pair(view.points, right.points, spec);
        CHECK((cl.gt_transform.scale - cr.gt_transform.scale).norm() == 0.0);
        double max_err = 0.0;
        for (int y = 0; y < cr.map.height; ++y)
            for (int x = 0; x < cr.map.width; ++x) {
                if (!cr.map.valid(x, y))
                    continue;
                const Vec3 undone = cr.gt_transform.scale.cwiseProduct(cr.map.at(x, y)) +
                                    cr.gt_transform.t(x, y);
                max_err = std::max(max_err, (undone - right.points.at(x, y)).norm());
            }
        CHECK(max_err <= 1e-12);
        // distinct per-view warp fields
        CHECK(cl.gt_transform.t(10, 10) != cr.gt_transform.t(10, 10));
    }

    SUBCASE("determinism") {
        CorruptionSpec spec;
        spec.noise_sigma = 0.01;
        spec.seed = 31;
        const CorruptedPointMap a = corrupt_pointmap(view.points, spec);
        const CorruptedPointMap b = corrupt_pointmap(view.points, spec);
        REQUIRE(a.map.points.size() == b.map.points.size());
        for (size_t i = 0; i < a.map.points.size(); ++i)
            CHECK(a.map.points[i] == b.map.points[i]);
    }
}

TEST_CASE("gen_rig: aiming, spacing, baseline consistency") {
    RigOptions opt;
    opt.span_deg = 60.0;
    opt.width = 96;
    opt.height = 54;
    const Vec3 look_at(0.2, -0.1, 0.9);
    const auto cams = gen_rig(6, 3.0, look_at, opt);
    REQUIRE(cams.size() == 6);
    for (const auto& cam : cams) {
        CHECK((cam.center() - look_at).norm() == doctest::Approx(3.0).epsilon(1e-12));
        // optical axis passes through look_at
        const Vec3 axis = cam.rotation.row(2);
        const Vec3 to_target = look_at - cam.center();
        const double off_axis = (to_target - to_target.dot(axis) * axis).norm();
        CHECK(off_axis <= 1e-9);
    }
    // adjacent spacing: span 60 deg over 6 cameras -> 12 deg apart
    for (size_t i = 0; i + 1 < cams.size(); ++i) {
        const Vec3 a = cams[i].center() - look_at;
        const Vec3 b = cams[i + 1].center() - look_at;
        Vec3 ah(a.x(), a.y(), 0.0), bh(b.x(), b.y(), 0.0); // spacing is azimuthal
        const double ang = std::acos(std::clamp(ah.normalized().dot(bh.normalized()), -1.0, 1.0));
        CHECK(ang == doctest::Approx(12.0 * 3.14159265358979323846 / 180.0).epsilon(1e-9));
    }
    // source pair baseline agrees with camera_baseline
    const double direct = (cams.front().center() - cams.back().center()).norm();
    CHECK(camera_baseline(cams.front(), cams.back()) == doctest::Approx(direct).epsilon(1e-12));
    CHECK_THROWS_AS(gen_rig(2, 3.0, look_at, opt), BadConfig);
}

TEST_CASE("scene json round trip") {
    const SceneSpec scene = default_scene(123);
    const std::string text = scene_to_json(scene);
    // write to a temp file and re-read
    const std::string path = "/tmp/gsplane_scene_test.json";
    {
        std::ofstream out(path);
        out << text;
    }
    const SceneSpec back = scene_from_json_file(path);
    CHECK(back.seed == scene.seed);
    REQUIRE(back.primitives.size() == scene.primitives.size());
    CHECK(back.primitives[0].radius == doctest::Approx(scene.primitives[0].radius));
    CHECK((back.light.direction - scene.light.direction).norm() < 1e-12);
    std::remove(path.c_str());
}
