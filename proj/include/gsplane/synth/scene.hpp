// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gsplane/core/camera.hpp"
#include "gsplane/core/image.hpp"
#include "gsplane/core/pointmap.hpp"

namespace gsp {

struct TextureSpec {
    enum class Type { Checker, Noise };
    Type type = Type::Noise;
    double cell = 0.25;            // meters per texture cell
    Vec3 color_a = Vec3(0.85, 0.55, 0.25);
    Vec3 color_b = Vec3(0.15, 0.25, 0.6);
};

struct PrimitiveSpec {
    enum class Kind { Sphere, Box, Ground };
    Kind kind = Kind::Sphere;
    Vec3 center = Vec3::Zero();     // sphere/box center; ground uses center.z as height
    double radius = 0.5;            // sphere
    Vec3 half_extents = Vec3(0.3, 0.3, 0.3); // box
    double yaw_deg = 0.0;           // box rotation about world z
    TextureSpec texture;
};

struct LightSpec {
    Vec3 direction = Vec3(-0.4, -0.3, -1.0); // direction the light travels
    double ambient = 0.35;
};

/// Deterministic procedural scene: Lambertian solids under one directional
/// light, shading depends only on the surface point, never on the viewer.
struct SceneSpec {
    uint64_t seed = 1;
    std::vector<PrimitiveSpec> primitives;
    LightSpec light;

    void validate() const;
};

/// Standard test scene (textured sphere + box over a noise-textured ground),
/// with seed-dependent layout and texture variation.
SceneSpec default_scene(uint64_t seed);

SceneSpec scene_from_json_file(const std::string& path);
std::string scene_to_json(const SceneSpec& spec);

struct RenderedView {
    ImageBuffer image;   // 3-channel
    DepthMap depth;      // camera-space z
    PointMap points;     // metric world coordinates, invalid on background
};

/// Nearest-hit ray casting through every pixel center.
RenderedView raycast_render(const SceneSpec& scene, const CameraModel& cam);

/// Canonical-space corruption standing in for a foundation point-map model:
///   raw = (gt - offset - warp(u,v) - noise(u,v)) / true_scale
/// followed by per-axis min-max normalization into [0,1]^3.
struct CorruptionSpec {
    Vec3 true_scale = Vec3::Ones();
    Vec3 true_offset = Vec3::Zero();
    double smooth_warp_amplitude = 0.0;  // meters
    double smooth_warp_wavelength = 256; // pixels
    double noise_sigma = 0.0;            // meters
    uint64_t seed = 0;

    void validate() const;
};

struct CorruptedPointMap {
    PointMap map;                 // canonical, in [0,1]^3
    AffineTransform gt_transform; // exactly undoes the corruption (noise included)
};

CorruptedPointMap corrupt_pointmap(const PointMap& gt, const CorruptionSpec& spec);

/// Two-view variant sharing one min-max normalization so a single global
/// scale maps both canonical maps back to metric space. Each view gets its
/// own warp/noise field (phase keyed by view index).
std::pair<CorruptedPointMap, CorruptedPointMap>
corrupt_pointmap_pair(const PointMap& gt_left, const PointMap& gt_right,
                      const CorruptionSpec& spec);

struct RigOptions {
    double span_deg = 60.0;  // arc spanned by the cameras
    double elevation = 0.5;  // camera height above look_at, meters
    int width = 256;
    int height = 144;
    double focal = 0.0;      // pixels; 0 means 1.2 * width
};

/// Cameras on a circular arc of the given radius, all aimed at look_at.
/// The first and last cameras are the source pair; interior ones are
/// evaluation targets.
std::vector<CameraModel> gen_rig(int n_cams, double radius, const Vec3& look_at,
                                 const RigOptions& opt = {});

} // namespace gsp
