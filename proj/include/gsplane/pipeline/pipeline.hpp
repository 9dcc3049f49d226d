// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gsplane/metrics/metrics.hpp"
#include "gsplane/splat/gaussian_plane.hpp"
#include "gsplane/stage1/registration.hpp"
#include "gsplane/stage2/refine.hpp"
#include "gsplane/synth/scene.hpp"

namespace gsp {

struct RigConfig {
    int n_cams = 6;
    double radius = 3.0;
    Vec3 look_at = Vec3(0.0, 0.0, 0.8);
    double span_deg = 60.0;
    double elevation = 0.5;
    double focal = 0.0; // pixels at the render resolution; 0 = 1.2 * width
};

struct RenderConfig {
    int width = 1280;
    int height = 720;
    SplatConfig splat;
};

struct EvalConfig {
    double color_weight = 1.0;
};

/// One JSON file with sections {scene, rig, stage1, stage2, render, eval};
/// every field has the default recorded in the corresponding config type.
struct PipelineConfig {
    SceneSpec scene;
    CorruptionSpec corruption;
    RigConfig rig;
    RegistrationConfig stage1;
    RefineConfig stage2;
    RenderConfig render;
    EvalConfig eval;

    void validate() const;
};

PipelineConfig pipeline_config_from_json_file(const std::string& path);
PipelineConfig pipeline_config_from_json_text(const std::string& text);

struct StageTimings {
    std::vector<std::pair<std::string, double>> rows; // name, milliseconds
    double total_ms = 0.0;
};

struct TargetReport {
    int view = 0;
    double psnr_stage1 = 0.0, ssim_stage1 = 0.0;
    double psnr_init_color = 0.0, ssim_init_color = 0.0;
    double psnr_splat = 0.0, ssim_splat = 0.0;
    double stage1_objective_value = 0.0;
    double stage2_loss_value = 0.0;
    double depth_mae_initial = 0.0, depth_mae_refined = 0.0;
};

struct PipelineResult {
    std::vector<int> source_views;
    std::vector<int> target_views;
    Vec3 scale;
    Vec3 scale_gt;
    double scale_error_rel = 0.0;     // max per-axis |S/S_gt - 1|
    double median_point_error = 0.0;  // meters, overlap region
    double chamfer_affine_init = 0.0; // 6-D L_CD after scale+shift only
    double chamfer_registered = 0.0;  // 6-D L_CD after full registration
    ChamferResult chamfer_vs_gt{0.0, 0.0}; // 3-D, registered points vs GT points
    std::vector<TargetReport> targets;
    StageTimings timings;
    std::string report_json; // serialized report (deterministic, no timing)
};

/// Runs scene generation, corruption, both stages, rendering and evaluation.
/// Writes artifacts (reg.json, PFM/PLY/PNG per target, report.json) into
/// out_dir unless it is empty. Module errors are rethrown with the failing
/// stage name prefixed.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::string& out_dir);

/// Formats the timing table: seven stage rows plus the total.
std::string format_timings(const StageTimings& t);

} // namespace gsp
