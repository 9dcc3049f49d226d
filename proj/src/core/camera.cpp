// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/core/camera.hpp"

#include <cmath>

namespace gsp {

void CameraModel::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw Error("camera: focal lengths must be positive");
    if (width <= 0 || height <= 0)
        throw Error("camera: resolution must be positive");
    if (cx < 0.0 || cx >= static_cast<double>(width) || cy < 0.0 ||
        cy >= static_cast<double>(height))
        throw Error("camera: principal point outside the image");
    const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
    if (err.cwiseAbs().maxCoeff() > 1e-9)
        throw Error("camera: rotation is not orthonormal");
    if (rotation.determinant() < 0.0)
        throw Error("camera: rotation has negative determinant");
    if (!translation.allFinite())
        throw Error("camera: non-finite translation");
}

Projection project(const Vec3& world_point, const CameraModel& cam) {
    const Vec3 p = cam.to_camera(world_point);
    Projection out;
    out.depth = p.z();
    if (p.z() == 0.0) {
        out.pixel = Vec2(std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity());
        return out;
    }
    out.pixel = Vec2(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
    return out;
}

Vec3 unproject(const Vec2& pixel, double depth, const CameraModel& cam) {
    if (!(depth > 0.0))
        throw Error("unproject: depth must be positive");
    const Vec3 p_cam((pixel.x() - cam.cx) / cam.fx * depth,
                     (pixel.y() - cam.cy) / cam.fy * depth, depth);
    return cam.rotation.transpose() * (p_cam - cam.translation);
}

double camera_baseline(const CameraModel& a, const CameraModel& b) {
    return (a.center() - b.center()).norm();
}

CameraModel rescaled(const CameraModel& cam, int width, int height) {
    if (width == cam.width && height == cam.height)
        return cam;
    const double sx = static_cast<double>(width) / static_cast<double>(cam.width);
    const double sy = static_cast<double>(height) / static_cast<double>(cam.height);
    CameraModel out = cam;
    out.fx = cam.fx * sx;
    out.fy = cam.fy * sy;
    out.cx = (cam.cx + 0.5) * sx - 0.5;
    out.cy = (cam.cy + 0.5) * sy - 0.5;
    out.width = width;
    out.height = height;
    return out;
}

} // namespace gsp
