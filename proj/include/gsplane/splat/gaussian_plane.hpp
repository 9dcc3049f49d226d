// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Geometry>

#include "gsplane/core/camera.hpp"
#include "gsplane/core/image.hpp"
#include "gsplane/core/pointmap.hpp"

namespace gsp {

using Quat = Eigen::Quaterniond;

/// One 3-D Gaussian primitive. Rotation and scale define the world-space
/// covariance R diag(scale^2) R^T.
struct Gaussian {
    Vec3 position = Vec3::Zero();   // meters
    Vec3 color = Vec3::Zero();      // rgb in [0,1]
    Quat rotation = Quat::Identity();
    Vec3 scale = Vec3::Ones();      // per-axis stddev, meters
    double opacity = 1.0;           // in (0,1]
};

/// Per-pixel sheet of Gaussian primitives anchored on a view's depth map.
struct GaussianPlane {
    std::vector<Gaussian> primitives;

    size_t count() const { return primitives.size(); }
    /// Throws on broken invariants (non-unit quaternion, non-positive scale,
    /// opacity outside (0,1]).
    void validate() const;
};

struct RenderOutput {
    ImageBuffer color;          // 3-channel
    DepthMap depth;             // alpha-weighted expected depth
    std::vector<double> alpha;  // accumulated opacity in [0,1], row-major
};

struct SplatStats {
    size_t submitted = 0;
    size_t rasterized = 0; // primitives that survived culling
};

struct SplatConfig {
    double pixel_footprint = 1.0;      // kappa in scale = kappa * depth / focal
    double opacity_floor = 0.5;        // opacity = floor + range * confidence
    double opacity_range = 0.45;
    double color_alpha = 0.8;          // residual blend weight, residual source is zero here
};

/// Builds the target-view Gaussian plane from refined depth and color.
/// One primitive per valid depth pixel: identity rotation, isotropic
/// footprint-sized scale, opacity driven by the confidence map.
GaussianPlane build_gaussian_plane(const DepthMap& depth, const ImageBuffer& color,
                                   const std::vector<double>& confidence, const CameraModel& cam,
                                   const SplatConfig& cfg = {});

/// Tile-based forward rasterizer with front-to-back alpha compositing in
/// strictly increasing depth order. Deterministic: the internal sort is a
/// total order on primitive values, so storage order never matters.
RenderOutput splat(const std::vector<const GaussianPlane*>& planes, const CameraModel& cam,
                   int out_width, int out_height, SplatStats* stats = nullptr);

RenderOutput splat(const GaussianPlane& plane, const CameraModel& cam, int out_width,
                   int out_height, SplatStats* stats = nullptr);

/// Naive per-pixel reference rasterizer; same math as splat() without tiling.
RenderOutput splat_reference(const std::vector<const GaussianPlane*>& planes,
                             const CameraModel& cam, int out_width, int out_height,
                             SplatStats* stats = nullptr);

} // namespace gsp
