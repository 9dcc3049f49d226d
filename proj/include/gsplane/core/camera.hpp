// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gsplane/core/errors.hpp"

namespace gsp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera: metric world -> camera transform plus intrinsics.
///
/// Conventions used everywhere in this project:
///  - right-handed frames, camera looks down +z,
///  - depth is the camera-space z coordinate (not ray length),
///  - continuous pixel coordinates put the center of pixel (u, v) at the
///    integer position (u, v).
struct CameraModel {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    Mat3 rotation = Mat3::Identity();   // world -> camera
    Vec3 translation = Vec3::Zero();    // world -> camera, meters

    /// Camera center in world coordinates, -R^T t.
    Vec3 center() const { return -rotation.transpose() * translation; }

    Vec3 to_camera(const Vec3& world_point) const {
        return rotation * world_point + translation;
    }

    /// Unit viewing-ray direction (world frame) through pixel (u, v).
    Vec3 ray_direction(double u, double v) const {
        Vec3 dir_cam((u - cx) / fx, (v - cy) / fy, 1.0);
        return (rotation.transpose() * dir_cam).normalized();
    }

    bool in_image(const Vec2& px) const {
        return px.x() >= 0.0 && px.x() < static_cast<double>(width) && px.y() >= 0.0 &&
               px.y() < static_cast<double>(height);
    }

    /// Throws if intrinsics are out of range or the rotation is not a proper
    /// orthonormal matrix (tolerance 1e-9).
    void validate() const;
};

struct Projection {
    Vec2 pixel;
    double depth; // camera-space z; <= 0 means behind the camera
};

/// Perspective projection. Out-of-frustum points are not an error: callers
/// check depth and pixel bounds.
Projection project(const Vec3& world_point, const CameraModel& cam);

/// Inverse of project for a given z-depth. Throws on depth <= 0.
Vec3 unproject(const Vec2& pixel, double depth, const CameraModel& cam);

/// Euclidean distance between the two camera centers, meters.
double camera_baseline(const CameraModel& a, const CameraModel& b);

/// Same pose and field of view on a different raster size. Principal point
/// follows the pixel-center convention: c' = (c + 0.5) * s - 0.5.
CameraModel rescaled(const CameraModel& cam, int width, int height);

} // namespace gsp
