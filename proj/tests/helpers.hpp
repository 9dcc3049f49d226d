// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include <Eigen/Geometry>

#include "gsplane/core/camera.hpp"
#include "gsplane/core/image.hpp"
#include "gsplane/synth/scene.hpp"

namespace gsp::test {

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline Vec3 random_unit(std::mt19937_64& gen) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(gen), n(gen), n(gen));
    while (v.norm() < 1e-6)
        v = Vec3(n(gen), n(gen), n(gen));
    return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& gen) {
    const Vec3 axis = random_unit(gen);
    const double angle = uniform(gen, 0.0, 3.14159265358979323846);
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

inline CameraModel random_camera(std::mt19937_64& gen, int width = 160, int height = 120) {
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.fx = uniform(gen, 80.0, 400.0);
    cam.fy = uniform(gen, 80.0, 400.0);
    cam.cx = uniform(gen, 0.3, 0.7) * width;
    cam.cy = uniform(gen, 0.3, 0.7) * height;
    cam.rotation = random_rotation(gen);
    cam.translation = Vec3(uniform(gen, -2.0, 2.0), uniform(gen, -2.0, 2.0),
                           uniform(gen, -2.0, 2.0));
    return cam;
}

inline CameraModel identity_camera(double fx, double fy, double cx, double cy, int w, int h) {
    CameraModel cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = w;
    cam.height = h;
    return cam;
}

inline ImageBuffer random_image(std::mt19937_64& gen, int w, int h, int channels = 3) {
    ImageBuffer img(w, h, channels);
    for (auto& v : img.data)
        v = uniform(gen, 0.0, 1.0);
    return img;
}

// Small two-source rig around a default scene; sources at indices 0 and 2.
inline std::vector<CameraModel> small_rig(int width = 96, int height = 54,
                                          double span_deg = 35.0) {
    RigOptions opt;
    opt.width = width;
    opt.height = height;
    opt.span_deg = span_deg;
    opt.elevation = 0.5;
    return gen_rig(3, 3.0, Vec3(0.0, 0.0, 0.8), opt);
}

} // namespace gsp::test
