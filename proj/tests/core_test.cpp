// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "gsplane/core/camera.hpp"
#include "gsplane/core/errors.hpp"
#include "gsplane/core/pointmap.hpp"
#include "helpers.hpp"

using namespace gsp;

TEST_CASE("project: principal ray and x-offset") {
    const CameraModel cam = test::identity_camera(100.0, 100.0, 64.0, 36.0, 128, 72);
    const Projection p0 = project(Vec3(0.0, 0.0, 1.0), cam);
    CHECK(p0.pixel.x() == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(p0.pixel.y() == doctest::Approx(36.0).epsilon(1e-12));
    CHECK(p0.depth == doctest::Approx(1.0));

    const Projection p1 = project(Vec3(0.5, 0.0, 1.0), cam);
    CHECK(p1.pixel.x() == doctest::Approx(114.0).epsilon(1e-12));
    CHECK(p1.pixel.y() == doctest::Approx(36.0).epsilon(1e-12));
}

TEST_CASE("unproject: principal point and focal offset") {
    const CameraModel cam = test::identity_camera(100.0, 100.0, 64.0, 36.0, 128, 72);
    const Vec3 p0 = unproject(Vec2(64.0, 36.0), 2.0, cam);
    CHECK((p0 - Vec3(0.0, 0.0, 2.0)).norm() < 1e-12);
    const Vec3 p1 = unproject(Vec2(164.0, 36.0), 1.0, cam);
    CHECK((p1 - Vec3(1.0, 0.0, 1.0)).norm() < 1e-12);
    CHECK_THROWS_AS(unproject(Vec2(0.0, 0.0), 0.0, cam), Error);
    CHECK_THROWS_AS(unproject(Vec2(0.0, 0.0), -1.0, cam), Error);
}

TEST_CASE("project/unproject round trip over random poses") {
    auto gen = test::rng(42);
    double max_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const CameraModel cam = test::random_camera(gen);
        const double depth = test::uniform(gen, 0.1, 100.0);
        const Vec2 px(test::uniform(gen, 0.0, cam.width - 1.0),
                      test::uniform(gen, 0.0, cam.height - 1.0));
        const Vec3 world = unproject(px, depth, cam);
        const Projection proj = project(world, cam);
        max_err = std::max(max_err, (proj.pixel - px).norm());
        max_err = std::max(max_err, std::abs(proj.depth - depth));
        const Vec3 again = unproject(proj.pixel, proj.depth, cam);
        max_err = std::max(max_err, (again - world).norm());
    }
    CHECK(max_err <= 1e-9);
}

TEST_CASE("camera_baseline") {
    auto gen = test::rng(7);
    CameraModel a = test::identity_camera(100, 100, 50, 50, 100, 100);
    CHECK(camera_baseline(a, a) == 0.0);

    CameraModel b = a;
    b.translation = -Vec3(3.0, 4.0, 0.0); // center = (3,4,0) with identity rotation
    CHECK(camera_baseline(a, b) == doctest::Approx(5.0).epsilon(1e-12));

    for (int i = 0; i < 100; ++i) {
        const CameraModel c = test::random_camera(gen);
        const CameraModel d = test::random_camera(gen);
        // brute-force center: solve R c + t = 0
        const Vec3 cc = c.rotation.fullPivLu().solve(-c.translation);
        const Vec3 cd = d.rotation.fullPivLu().solve(-d.translation);
        CHECK(camera_baseline(c, d) == doctest::Approx((cc - cd).norm()).epsilon(1e-9));
    }
}

TEST_CASE("bilinear_query: exact at integers, midpoint, constants, invalid outside") {
    ImageBuffer img(4, 3, 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x)
            img.set(x, y, 0, 0.1 * (y * 4 + x));
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) {
            const auto v = bilinear_rgb(img, x, y);
            REQUIRE(v.has_value());
            CHECK((*v)(0) == doctest::Approx(img.at(x, y, 0)).epsilon(1e-15));
        }

    ImageBuffer quad(2, 2, 1);
    quad.set(0, 0, 0, 0.0);
    quad.set(1, 0, 0, 0.0);
    quad.set(0, 1, 0, 1.0);
    quad.set(1, 1, 0, 1.0);
    const auto mid = bilinear_rgb(quad, 0.5, 0.5);
    REQUIRE(mid.has_value());
    CHECK((*mid)(0) == doctest::Approx(0.5).epsilon(1e-15));

    ImageBuffer flat(5, 5, 3);
    for (auto& v : flat.data)
        v = 0.37;
    auto gen = test::rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto v = bilinear_rgb(flat, test::uniform(gen, 0.0, 4.0),
                                    test::uniform(gen, 0.0, 4.0));
        REQUIRE(v.has_value());
        CHECK((*v)(1) == doctest::Approx(0.37).epsilon(1e-15));
    }

    CHECK_FALSE(bilinear_rgb(img, -0.01, 1.0).has_value());
    CHECK_FALSE(bilinear_rgb(img, 3.01, 1.0).has_value());
    CHECK_FALSE(bilinear_rgb(img, 1.0, 2.5).has_value());
    CHECK(bilinear_rgb(img, 3.0, 2.0).has_value()); // far corner is supported
}

TEST_CASE("bilinear_query is monotone on a monotone ramp") {
    ImageBuffer ramp(8, 2, 1);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 8; ++x)
            ramp.set(x, y, 0, x / 7.0);
    double prev = -1.0;
    for (double x = 0.0; x <= 7.0; x += 0.05) {
        const auto v = bilinear_rgb(ramp, x, 0.5);
        REQUIRE(v.has_value());
        CHECK((*v)(0) >= prev - 1e-15);
        prev = (*v)(0);
    }
}

TEST_CASE("apply_affine: identity, arithmetic, linearity, errors") {
    PointMap map(3, 2, PointSpace::Canonical);
    auto gen = test::rng(11);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) {
            map.at(x, y) = Vec3(test::uniform(gen, 0, 1), test::uniform(gen, 0, 1),
                                test::uniform(gen, 0, 1));
            map.set_valid(x, y, (x + y) % 2 == 0);
        }

    AffineTransform id(3, 2);
    const PointMap same = apply_affine(map, id);
    CHECK(same.space == PointSpace::Metric);
    for (size_t i = 0; i < map.points.size(); ++i) {
        CHECK((same.points[i] - map.points[i]).norm() == 0.0);
        CHECK(same.validity[i] == map.validity[i]);
    }

    PointMap one(1, 1, PointSpace::Canonical);
    one.at(0, 0) = Vec3(1.0, 1.0, 1.0);
    one.set_valid(0, 0, true);
    AffineTransform t(1, 1);
    t.scale = Vec3(2.0, 2.0, 2.0);
    t.t(0, 0) = Vec3(0.5, 0.0, 0.0);
    const PointMap out = apply_affine(one, t);
    CHECK((out.at(0, 0) - Vec3(2.5, 2.0, 2.0)).norm() < 1e-15);

    // linearity: apply(a X1 + b X2) = a apply(X1) + b apply(X2) - (a+b-1) T
    AffineTransform rt(3, 2);
    rt.scale = Vec3(1.7, 0.4, 2.3);
    for (auto& tr : rt.translation)
        tr = Vec3(test::uniform(gen, -1, 1), test::uniform(gen, -1, 1),
                  test::uniform(gen, -1, 1));
    PointMap m2 = map;
    for (auto& p : m2.points)
        p = Vec3(test::uniform(gen, 0, 1), test::uniform(gen, 0, 1), test::uniform(gen, 0, 1));
    const double a = 0.3, b = 1.4;
    PointMap combo = map;
    for (size_t i = 0; i < combo.points.size(); ++i)
        combo.points[i] = a * map.points[i] + b * m2.points[i];
    const PointMap lhs = apply_affine(combo, rt);
    const PointMap r1 = apply_affine(map, rt);
    const PointMap r2 = apply_affine(m2, rt);
    for (size_t i = 0; i < lhs.points.size(); ++i) {
        const Vec3 rhs = a * r1.points[i] + b * r2.points[i] - (a + b - 1.0) * rt.translation[i];
        CHECK((lhs.points[i] - rhs).norm() < 1e-12);
    }

    AffineTransform wrong(2, 2);
    CHECK_THROWS_AS(apply_affine(map, wrong), DimensionMismatch);
    AffineTransform bad(3, 2);
    bad.scale = Vec3(1.0, 0.0, 1.0);
    CHECK_THROWS_AS(apply_affine(map, bad), Error);
}

TEST_CASE("camera validation catches broken inputs") {
    CameraModel cam = test::identity_camera(100, 100, 50, 50, 100, 100);
    CHECK_NOTHROW(cam.validate());
    CameraModel bad = cam;
    bad.rotation(0, 0) = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cam;
    bad.fx = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cam;
    bad.cx = 150.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("rescaled camera keeps rays through matching pixels") {
    auto gen = test::rng(9);
    const CameraModel cam = test::random_camera(gen, 160, 120);
    const CameraModel half = rescaled(cam, 80, 60);
    // pixel centers map as u' = (u + 0.5) s - 0.5
    for (int i = 0; i < 20; ++i) {
        const double u = test::uniform(gen, 0.0, 159.0);
        const double v = test::uniform(gen, 0.0, 119.0);
        const Vec3 p = unproject(Vec2(u, v), 2.0, cam);
        const Projection proj = project(p, half);
        CHECK(proj.pixel.x() == doctest::Approx((u + 0.5) * 0.5 - 0.5).epsilon(1e-10));
        CHECK(proj.pixel.y() == doctest::Approx((v + 0.5) * 0.5 - 0.5).epsilon(1e-10));
    }
}
