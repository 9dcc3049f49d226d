// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gsplane/core/camera.hpp"
#include "gsplane/core/image.hpp"
#include "gsplane/core/pointmap.hpp"

namespace gsp {

struct RefineConfig {
    int n_candidates = 8;
    double search_halfwidth = 0.05;   // fraction of the initial depth
    int fine_width = 1024;
    int fine_height = 576;
    double softmax_temperature = 0.1;
    int patch_radius = 1;
    double invalid_cost = 1.0;        // cost assigned where either warp is invalid
    double alpha_threshold = 0.5;     // accumulated alpha below this marks init depth invalid
    double pixel_footprint = 1.0;     // kappa for the auxiliary planes used by depth init

    void validate() const;
};

/// Per-pixel depth candidates, matching costs and softmax weights.
/// candidates are strictly ascending per pixel; weights sum to 1.
struct CostVolume {
    int width = 0;
    int height = 0;
    int n_candidates = 0;
    std::vector<double> candidates; // (y * width + x) * n + k
    std::vector<double> cost;
    std::vector<double> weights;
    std::vector<uint8_t> validity;  // per pixel: seeded by the initial depth, extended
                                    // where some candidate matched below the penalty

    size_t index(int x, int y, int k) const {
        return (static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x)) *
                   static_cast<size_t>(n_candidates) +
               static_cast<size_t>(k);
    }
};

/// Splats auxiliary source-view Gaussian planes into the target camera and
/// reads the alpha-composited expected depth. Pixels with accumulated alpha
/// below alpha_threshold are invalid. Throws EmptyGeometry when nothing lands
/// in the target frustum.
DepthMap init_target_depth(const PointMap& metric_left, const PointMap& metric_right,
                           const ImageBuffer& img_left, const ImageBuffer& img_right,
                           const CameraModel& cam_left, const CameraModel& cam_right,
                           const CameraModel& cam_target, int out_width, int out_height,
                           const RefineConfig& cfg = {});

/// N uniformly spaced depths in [d(1-hw), d(1+hw)] per pixel. Invalid pixels
/// fall back to the valid-depth median of the map (or `fallback` when the map
/// has no valid pixel at all).
std::vector<double> sample_depth_candidates(const DepthMap& init, const RefineConfig& cfg,
                                            std::optional<double> fallback = std::nullopt);

struct WarpedStack {
    int width = 0;
    int height = 0;
    int n_candidates = 0;
    std::vector<Vec3> samples;
    std::vector<uint8_t> validity;

    size_t index(int x, int y, int k) const {
        return (static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x)) *
                   static_cast<size_t>(n_candidates) +
               static_cast<size_t>(k);
    }
};

/// Per (pixel, candidate): unproject along the target ray, project into the
/// source camera, bilinear-sample the source image. Invalid where the point
/// falls behind the source camera or outside its frame.
WarpedStack warp_source_to_target(const ImageBuffer& src_img, const CameraModel& src_cam,
                                  const std::vector<double>& candidates,
                                  const CameraModel& target_cam, int width, int height,
                                  int n_candidates);

/// Photometric matching cost: per-pixel mean-channel squared difference of
/// the two warped stacks, box-filtered over (2r+1)^2 windows; invalid samples
/// cost `invalid_cost`. Weights are softmax(-cost / tau) per pixel.
CostVolume build_cost_volume(const WarpedStack& warp_left, const WarpedStack& warp_right,
                             const std::vector<double>& candidates,
                             const std::vector<uint8_t>& seed_validity, const RefineConfig& cfg);

/// Expected depth under the softmax weights; lies within [d_1, d_N].
DepthMap regress_depth(const CostVolume& volume);

struct InitColor {
    ImageBuffer color;              // 3-channel
    std::vector<uint8_t> validity;  // per pixel
};

/// Convex combination of the two warped colors at the refined depth. Weights
/// combine photometric agreement with view-ray proximity, so rendering into a
/// source camera reproduces that source exactly; single-source pixels pass
/// that source through, fully unobserved pixels are invalid.
InitColor init_color(const WarpedStack& warp_left_refined, const WarpedStack& warp_right_refined,
                     const DepthMap& refined, const CameraModel& cam_left,
                     const CameraModel& cam_right, const CameraModel& cam_target,
                     const RefineConfig& cfg);

struct RefineResult {
    DepthMap initial;
    CostVolume volume;
    DepthMap refined;
    InitColor color;
    std::vector<double> confidence; // exp(-min cost / tau), per pixel in [0,1]
};

/// Full stage-2 pass for one target view at the fine resolution.
RefineResult refine_target(const PointMap& metric_left, const PointMap& metric_right,
                           const ImageBuffer& img_left_coarse, const ImageBuffer& img_right_coarse,
                           const ImageBuffer& img_left_fine, const ImageBuffer& img_right_fine,
                           const CameraModel& cam_left, const CameraModel& cam_right,
                           const CameraModel& cam_target, const RefineConfig& cfg = {});

} // namespace gsp
