// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/pipeline/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gsplane/core/errors.hpp"
#include "gsplane/io/camera_io.hpp"
#include "gsplane/io/image_io.hpp"
#include "gsplane/io/plane_io.hpp"
#include "gsplane/io/pointmap_io.hpp"
#include "gsplane/io/registration_io.hpp"
#include "gsplane/metrics/metrics.hpp"

namespace gsp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Vec3 vec3_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3)
        throw BadConfig("expected a 3-element array");
    return Vec3(v[0], v[1], v[2]);
}

CorruptionSpec corruption_from_json(const json& j) {
    CorruptionSpec spec;
    if (j.contains("true_scale"))
        spec.true_scale = vec3_from_json(j.at("true_scale"));
    if (j.contains("true_offset"))
        spec.true_offset = vec3_from_json(j.at("true_offset"));
    spec.smooth_warp_amplitude = j.value("smooth_warp_amplitude", spec.smooth_warp_amplitude);
    spec.smooth_warp_wavelength = j.value("smooth_warp_wavelength", spec.smooth_warp_wavelength);
    spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
}

class SectionClock {
public:
    explicit SectionClock(StageTimings& out) : out_(out) {
        out_.rows = {{"point init", 0.0},    {"affine transform", 0.0}, {"depth init", 0.0},
                     {"depth refine", 0.0},  {"color init", 0.0},       {"gaussian plane", 0.0},
                     {"splatting", 0.0}};
    }

    template <typename Fn>
    void measure(const char* row, Fn&& fn) {
        if (!started_) {
            start_ = std::chrono::steady_clock::now();
            started_ = true;
        }
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        for (auto& r : out_.rows)
            if (r.first == row) {
                r.second += std::chrono::duration<double, std::milli>(t1 - t0).count();
                break;
            }
        out_.total_ms =
            std::chrono::duration<double, std::milli>(t1 - start_).count();
    }

private:
    StageTimings& out_;
    std::chrono::steady_clock::time_point start_;
    bool started_ = false;
};

// Stage failures carry the failing stage name; config problems keep their
// BadConfig type so the CLI can map them to the right exit code.
template <typename Fn>
void run_stage(const char* stage, Fn&& fn) {
    try {
        fn();
    } catch (const BadConfig&) {
        throw;
    } catch (const Error& e) {
        throw Error(std::string(stage) + ": " + e.what());
    }
}

ImageBuffer composite_on_black(const ImageBuffer& color, const std::vector<uint8_t>& validity) {
    ImageBuffer out = color;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const size_t i = static_cast<size_t>(y) * static_cast<size_t>(out.width) +
                             static_cast<size_t>(x);
            if (!validity[i])
                out.set_rgb(x, y, Vec3::Zero());
        }
    return out;
}

double depth_mae(const DepthMap& est, const DepthMap& gt, const DepthMap& also_valid) {
    double sum = 0.0;
    size_t n = 0;
    for (int y = 0; y < est.height; ++y)
        for (int x = 0; x < est.width; ++x) {
            if (!est.valid(x, y) || !gt.valid(x, y) || !also_valid.valid(x, y))
                continue;
            sum += std::abs(est.at(x, y) - gt.at(x, y));
            ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::vector<Vec3> valid_points(const PointMap& map) {
    std::vector<Vec3> pts;
    pts.reserve(map.valid_count());
    for (size_t i = 0; i < map.points.size(); ++i)
        if (map.validity[i])
            pts.push_back(map.points[i]);
    return pts;
}

// Median ||registered - gt|| over pixels mutually visible in both views
// (visibility judged on the ground-truth maps).
double median_overlap_error(const PointMap& reg_l, const PointMap& reg_r, const PointMap& gt_l,
                            const PointMap& gt_r, const CameraModel& cam_l,
                            const CameraModel& cam_r) {
    std::vector<double> errors;
    auto collect = [&](const PointMap& reg, const PointMap& gt, const PointMap& gt_other,
                       const CameraModel& cam_other) {
        for (int y = 0; y < gt.height; ++y)
            for (int x = 0; x < gt.width; ++x) {
                if (!gt.valid(x, y) || !reg.valid(x, y))
                    continue;
                const Projection proj = project(gt.at(x, y), cam_other);
                if (!(proj.depth > 0.0))
                    continue;
                const auto other = bilinear_point(gt_other, proj.pixel.x(), proj.pixel.y());
                if (!other)
                    continue;
                if (std::abs(cam_other.to_camera(*other).z() - proj.depth) > 0.05)
                    continue;
                errors.push_back((reg.at(x, y) - gt.at(x, y)).norm());
            }
    };
    collect(reg_l, gt_l, gt_r, cam_r);
    collect(reg_r, gt_r, gt_l, cam_l);
    if (errors.empty())
        return 0.0;
    const size_t mid = errors.size() / 2;
    std::nth_element(errors.begin(), errors.begin() + static_cast<long>(mid), errors.end());
    return errors[mid];
}

} // namespace

void PipelineConfig::validate() const {
    scene.validate();
    corruption.validate();
    stage1.validate();
    stage2.validate();
    if (rig.n_cams < 3)
        throw BadConfig("rig: need at least 3 cameras");
    if (render.width <= 0 || render.height <= 0)
        throw BadConfig("render: resolution must be positive");
    if (!(eval.color_weight >= 0.0))
        throw BadConfig("eval: color_weight must be non-negative");
}

PipelineConfig pipeline_config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw BadConfig(std::string("invalid config JSON: ") + e.what());
    }
    PipelineConfig cfg;
    try {
        if (j.contains("scene")) {
            const json& js = j.at("scene");
            if (js.contains("primitives")) {
                SceneSpec s;
                s.seed = js.value("seed", static_cast<uint64_t>(1));
                if (js.contains("light")) {
                    const auto& jl = js.at("light");
                    if (jl.contains("direction"))
                        s.light.direction = vec3_from_json(jl.at("direction"));
                    s.light.ambient = jl.value("ambient", s.light.ambient);
                }
                for (const auto& jp : js.at("primitives")) {
                    PrimitiveSpec p;
                    const std::string kind = jp.at("type").get<std::string>();
                    if (kind == "sphere") {
                        p.kind = PrimitiveSpec::Kind::Sphere;
                        p.center = vec3_from_json(jp.at("center"));
                        p.radius = jp.at("radius").get<double>();
                    } else if (kind == "box") {
                        p.kind = PrimitiveSpec::Kind::Box;
                        p.center = vec3_from_json(jp.at("center"));
                        p.half_extents = vec3_from_json(jp.at("half_extents"));
                        p.yaw_deg = jp.value("yaw_deg", 0.0);
                    } else if (kind == "ground") {
                        p.kind = PrimitiveSpec::Kind::Ground;
                        p.center = Vec3(0.0, 0.0, jp.value("height", 0.0));
                    } else {
                        throw BadConfig("unknown primitive type: " + kind);
                    }
                    if (jp.contains("texture")) {
                        const auto& jt = jp.at("texture");
                        p.texture.type = jt.value("type", std::string("noise")) == "checker"
                                             ? TextureSpec::Type::Checker
                                             : TextureSpec::Type::Noise;
                        p.texture.cell = jt.value("cell", p.texture.cell);
                        if (jt.contains("color_a"))
                            p.texture.color_a = vec3_from_json(jt.at("color_a"));
                        if (jt.contains("color_b"))
                            p.texture.color_b = vec3_from_json(jt.at("color_b"));
                    }
                    s.primitives.push_back(p);
                }
                cfg.scene = s;
            } else {
                cfg.scene = default_scene(js.value("seed", static_cast<uint64_t>(1)));
            }
            if (js.contains("corruption"))
                cfg.corruption = corruption_from_json(js.at("corruption"));
        } else {
            cfg.scene = default_scene(1);
        }
        if (j.contains("rig")) {
            const json& jr = j.at("rig");
            cfg.rig.n_cams = jr.value("n_cams", cfg.rig.n_cams);
            cfg.rig.radius = jr.value("radius", cfg.rig.radius);
            if (jr.contains("look_at"))
                cfg.rig.look_at = vec3_from_json(jr.at("look_at"));
            cfg.rig.span_deg = jr.value("span_deg", cfg.rig.span_deg);
            cfg.rig.elevation = jr.value("elevation", cfg.rig.elevation);
            cfg.rig.focal = jr.value("focal", cfg.rig.focal);
        }
        if (j.contains("stage1")) {
            const json& s = j.at("stage1");
            cfg.stage1.coarse_width = s.value("width", cfg.stage1.coarse_width);
            cfg.stage1.coarse_height = s.value("height", cfg.stage1.coarse_height);
            cfg.stage1.iterations = s.value("iterations", cfg.stage1.iterations);
            cfg.stage1.step_size = s.value("step_size", cfg.stage1.step_size);
            cfg.stage1.smoothness_weight = s.value("smoothness_weight", cfg.stage1.smoothness_weight);
            cfg.stage1.gamma = s.value("gamma", cfg.stage1.gamma);
            cfg.stage1.huber_delta = s.value("huber_delta", cfg.stage1.huber_delta);
            cfg.stage1.ray_weight = s.value("ray_weight", cfg.stage1.ray_weight);
            cfg.stage1.occlusion_threshold =
                s.value("occlusion_threshold", cfg.stage1.occlusion_threshold);
            cfg.stage1.color_weight = s.value("color_weight", cfg.stage1.color_weight);
            cfg.stage1.scale_rounds = s.value("scale_rounds", cfg.stage1.scale_rounds);
            cfg.stage1.scale_stride = s.value("scale_stride", cfg.stage1.scale_stride);
        }
        if (j.contains("stage2")) {
            const json& s = j.at("stage2");
            cfg.stage2.fine_width = s.value("width", cfg.stage2.fine_width);
            cfg.stage2.fine_height = s.value("height", cfg.stage2.fine_height);
            cfg.stage2.n_candidates = s.value("n_candidates", cfg.stage2.n_candidates);
            cfg.stage2.search_halfwidth = s.value("search_halfwidth", cfg.stage2.search_halfwidth);
            cfg.stage2.softmax_temperature =
                s.value("softmax_temperature", cfg.stage2.softmax_temperature);
            cfg.stage2.patch_radius = s.value("patch_radius", cfg.stage2.patch_radius);
            cfg.stage2.invalid_cost = s.value("invalid_cost", cfg.stage2.invalid_cost);
            cfg.stage2.alpha_threshold = s.value("alpha_threshold", cfg.stage2.alpha_threshold);
            cfg.stage2.pixel_footprint = s.value("pixel_footprint", cfg.stage2.pixel_footprint);
        }
        if (j.contains("render")) {
            const json& r = j.at("render");
            cfg.render.width = r.value("width", cfg.render.width);
            cfg.render.height = r.value("height", cfg.render.height);
            cfg.render.splat.pixel_footprint =
                r.value("pixel_footprint", cfg.render.splat.pixel_footprint);
            cfg.render.splat.opacity_floor = r.value("opacity_floor", cfg.render.splat.opacity_floor);
            cfg.render.splat.opacity_range = r.value("opacity_range", cfg.render.splat.opacity_range);
            cfg.render.splat.color_alpha = r.value("color_alpha", cfg.render.splat.color_alpha);
        }
        if (j.contains("eval"))
            cfg.eval.color_weight = j.at("eval").value("color_weight", cfg.eval.color_weight);
    } catch (const json::exception& e) {
        throw BadConfig(std::string("config schema error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

PipelineConfig pipeline_config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw BadConfig("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return pipeline_config_from_json_text(ss.str());
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    PipelineResult res;
    SectionClock clock(res.timings);

    RigOptions rig_opt;
    rig_opt.span_deg = cfg.rig.span_deg;
    rig_opt.elevation = cfg.rig.elevation;
    rig_opt.width = cfg.render.width;
    rig_opt.height = cfg.render.height;
    rig_opt.focal = cfg.rig.focal;
    const auto cams = gen_rig(cfg.rig.n_cams, cfg.rig.radius, cfg.rig.look_at, rig_opt);
    const int n = static_cast<int>(cams.size());
    const int left = 0, right = n - 1;
    res.source_views = {left, right};
    for (int k = 1; k < n - 1; ++k)
        res.target_views.push_back(k);

    const CameraModel cam_l_coarse = rescaled(cams[left], cfg.stage1.coarse_width,
                                              cfg.stage1.coarse_height);
    const CameraModel cam_r_coarse = rescaled(cams[right], cfg.stage1.coarse_width,
                                              cfg.stage1.coarse_height);

    // ---- point init: ground truth rendering + canonical corruption --------
    RenderedView gt_l_coarse, gt_r_coarse;
    ImageBuffer img_l_fine, img_r_fine;
    std::vector<ImageBuffer> gt_out(static_cast<size_t>(n));  // render res, all views
    std::vector<RenderedView> gt_fine_targets(static_cast<size_t>(n)); // fine res, targets
    CorruptedPointMap canon_l, canon_r;
    run_stage("gen-scene", [&]() {
        clock.measure("point init", [&]() {
            gt_l_coarse = raycast_render(cfg.scene, cam_l_coarse);
            gt_r_coarse = raycast_render(cfg.scene, cam_r_coarse);
            img_l_fine = raycast_render(cfg.scene, rescaled(cams[left], cfg.stage2.fine_width,
                                                            cfg.stage2.fine_height))
                             .image;
            img_r_fine = raycast_render(cfg.scene, rescaled(cams[right], cfg.stage2.fine_width,
                                                            cfg.stage2.fine_height))
                             .image;
            for (int k = 0; k < n; ++k)
                gt_out[static_cast<size_t>(k)] = raycast_render(cfg.scene, cams[k]).image;
            for (int k : res.target_views)
                gt_fine_targets[static_cast<size_t>(k)] = raycast_render(
                    cfg.scene,
                    rescaled(cams[k], cfg.stage2.fine_width, cfg.stage2.fine_height));
            auto pair = corrupt_pointmap_pair(gt_l_coarse.points, gt_r_coarse.points,
                                              cfg.corruption);
            canon_l = std::move(pair.first);
            canon_r = std::move(pair.second);
        });
    });

    // ---- stage 1: affine registration --------------------------------------
    RegistrationResult reg;
    run_stage("stage1", [&]() {
        clock.measure("affine transform", [&]() {
            reg = register_views(canon_l.map, canon_r.map, gt_l_coarse.image, gt_r_coarse.image,
                                 cam_l_coarse, cam_r_coarse, cfg.stage1);
        });
    });

    // ---- stage 2 per target -------------------------------------------------
    const size_t n_targets = res.target_views.size();
    std::vector<DepthMap> init_depths(n_targets), refined_depths(n_targets);
    std::vector<CostVolume> volumes(n_targets);
    std::vector<InitColor> colors(n_targets);
    std::vector<std::vector<double>> confidences(n_targets);
    std::vector<GaussianPlane> target_planes(n_targets);
    std::vector<RenderOutput> finals(n_targets);
    GaussianPlane aux_l, aux_r;

    run_stage("stage2", [&]() {
        clock.measure("depth init", [&]() {
            aux_l = auxiliary_gaussian_plane(reg.metric_left, gt_l_coarse.image, cam_l_coarse,
                                             cfg.stage2.pixel_footprint);
            aux_r = auxiliary_gaussian_plane(reg.metric_right, gt_r_coarse.image, cam_r_coarse,
                                             cfg.stage2.pixel_footprint);
            for (size_t t = 0; t < n_targets; ++t) {
                SplatStats stats;
                const RenderOutput render =
                    splat({&aux_l, &aux_r}, cams[static_cast<size_t>(res.target_views[t])],
                          cfg.stage2.fine_width, cfg.stage2.fine_height, &stats);
                if (stats.rasterized == 0)
                    throw EmptyGeometry("no Gaussian lands in the target frustum");
                DepthMap init(cfg.stage2.fine_width, cfg.stage2.fine_height);
                for (int y = 0; y < init.height; ++y)
                    for (int x = 0; x < init.width; ++x) {
                        const size_t i = init.index(x, y);
                        const bool ok = render.depth.valid(x, y) &&
                                        render.alpha[i] >= cfg.stage2.alpha_threshold &&
                                        render.depth.at(x, y) > 0.0;
                        init.set(x, y, render.depth.at(x, y), ok);
                    }
                init_depths[t] = std::move(init);
            }
        });
        clock.measure("depth refine", [&]() {
            for (size_t t = 0; t < n_targets; ++t) {
                const CameraModel& tcam = cams[static_cast<size_t>(res.target_views[t])];
                const auto candidates = sample_depth_candidates(init_depths[t], cfg.stage2);
                const auto warp_l = warp_source_to_target(
                    img_l_fine, cams[left], candidates, tcam, cfg.stage2.fine_width,
                    cfg.stage2.fine_height, cfg.stage2.n_candidates);
                const auto warp_r = warp_source_to_target(
                    img_r_fine, cams[right], candidates, tcam, cfg.stage2.fine_width,
                    cfg.stage2.fine_height, cfg.stage2.n_candidates);
                volumes[t] = build_cost_volume(warp_l, warp_r, candidates,
                                               init_depths[t].validity, cfg.stage2);
                refined_depths[t] = regress_depth(volumes[t]);
            }
        });
        clock.measure("color init", [&]() {
            for (size_t t = 0; t < n_targets; ++t) {
                const CameraModel& tcam = cams[static_cast<size_t>(res.target_views[t])];
                const auto warp_l1 = warp_source_to_target(
                    img_l_fine, cams[left], refined_depths[t].depth, tcam,
                    cfg.stage2.fine_width, cfg.stage2.fine_height, 1);
                const auto warp_r1 = warp_source_to_target(
                    img_r_fine, cams[right], refined_depths[t].depth, tcam,
                    cfg.stage2.fine_width, cfg.stage2.fine_height, 1);
                colors[t] = init_color(warp_l1, warp_r1, refined_depths[t], cams[left],
                                       cams[right], tcam, cfg.stage2);
                auto& conf = confidences[t];
                conf.assign(refined_depths[t].depth.size(), 0.0);
                for (int y = 0; y < volumes[t].height; ++y)
                    for (int x = 0; x < volumes[t].width; ++x) {
                        double mc = volumes[t].cost[volumes[t].index(x, y, 0)];
                        for (int k = 1; k < volumes[t].n_candidates; ++k)
                            mc = std::min(mc, volumes[t].cost[volumes[t].index(x, y, k)]);
                        conf[refined_depths[t].index(x, y)] =
                            std::exp(-mc / cfg.stage2.softmax_temperature);
                    }
            }
        });
    });

    run_stage("render", [&]() {
        clock.measure("gaussian plane", [&]() {
            for (size_t t = 0; t < n_targets; ++t) {
                // Only pixels with a usable color become primitives.
                DepthMap anchored = refined_depths[t];
                for (size_t i = 0; i < anchored.validity.size(); ++i)
                    anchored.validity[i] =
                        anchored.validity[i] && colors[t].validity[i] ? 1 : 0;
                target_planes[t] = build_gaussian_plane(
                    anchored, colors[t].color, confidences[t],
                    rescaled(cams[static_cast<size_t>(res.target_views[t])],
                             cfg.stage2.fine_width, cfg.stage2.fine_height),
                    cfg.render.splat);
            }
        });
        clock.measure("splatting", [&]() {
            for (size_t t = 0; t < n_targets; ++t)
                finals[t] = splat(target_planes[t],
                                  cams[static_cast<size_t>(res.target_views[t])],
                                  cfg.render.width, cfg.render.height);
        });
    });

    // ---- evaluation (outside the timed pipeline) ---------------------------
    json report;
    run_stage("eval", [&]() {
        res.scale = reg.init.scale;
        res.scale_gt = canon_l.gt_transform.scale;
        res.scale_error_rel =
            (res.scale.cwiseQuotient(res.scale_gt) - Vec3::Ones()).cwiseAbs().maxCoeff();
        res.median_point_error =
            median_overlap_error(reg.metric_left, reg.metric_right, gt_l_coarse.points,
                                 gt_r_coarse.points, cam_l_coarse, cam_r_coarse);

        AffineTransform init_only_l(canon_l.map.width, canon_l.map.height);
        init_only_l.scale = reg.init.scale;
        for (auto& t : init_only_l.translation)
            t = reg.init.shift;
        AffineTransform init_only_r = init_only_l;
        const PointMap affine_l = apply_affine(canon_l.map, init_only_l);
        const PointMap affine_r = apply_affine(canon_r.map, init_only_r);
        const auto set_init_l =
            colored_point_set(affine_l, gt_l_coarse.image, cfg.eval.color_weight, left);
        const auto set_init_r =
            colored_point_set(affine_r, gt_r_coarse.image, cfg.eval.color_weight, right);
        const auto set_reg_l =
            colored_point_set(reg.metric_left, gt_l_coarse.image, cfg.eval.color_weight, left);
        const auto set_reg_r =
            colored_point_set(reg.metric_right, gt_r_coarse.image, cfg.eval.color_weight, right);
        res.chamfer_affine_init = chamfer_6d(set_init_l, set_init_r).total;
        res.chamfer_registered = chamfer_6d(set_reg_l, set_reg_r).total;

        auto pred_points = valid_points(reg.metric_left);
        {
            const auto more = valid_points(reg.metric_right);
            pred_points.insert(pred_points.end(), more.begin(), more.end());
        }
        auto gt_points = valid_points(gt_l_coarse.points);
        {
            const auto more = valid_points(gt_r_coarse.points);
            gt_points.insert(gt_points.end(), more.begin(), more.end());
        }
        res.chamfer_vs_gt = chamfer_eval(pred_points, gt_points);

        for (size_t t = 0; t < n_targets; ++t) {
            const int view = res.target_views[t];
            const ImageBuffer& gt_high = gt_out[static_cast<size_t>(view)];
            const RenderedView& gt_fine = gt_fine_targets[static_cast<size_t>(view)];

            const RenderOutput stage1_render =
                splat({&aux_l, &aux_r}, cams[static_cast<size_t>(view)], cfg.render.width,
                      cfg.render.height);
            const ImageBuffer init_color_img =
                composite_on_black(colors[t].color, colors[t].validity);

            TargetReport tr;
            tr.view = view;
            tr.psnr_stage1 = psnr(stage1_render.color, gt_high);
            tr.ssim_stage1 = ssim(stage1_render.color, gt_high);
            tr.psnr_init_color = psnr(init_color_img, gt_fine.image);
            tr.ssim_init_color = ssim(init_color_img, gt_fine.image);
            tr.psnr_splat = psnr(finals[t].color, gt_high);
            tr.ssim_splat = ssim(finals[t].color, gt_high);
            tr.stage1_objective_value =
                stage1_objective(stage1_render.color, gt_high, set_reg_l, set_reg_r,
                                 cfg.stage1.gamma);
            tr.stage2_loss_value =
                stage2_loss(init_color_img, gt_fine.image, finals[t].color, gt_high);
            tr.depth_mae_initial = depth_mae(init_depths[t], gt_fine.depth, refined_depths[t]);
            tr.depth_mae_refined = depth_mae(refined_depths[t], gt_fine.depth, init_depths[t]);
            res.targets.push_back(tr);
        }

        report["source_views"] = res.source_views;
        report["target_views"] = res.target_views;
        report["seed"] = cfg.scene.seed;
        json jreg;
        jreg["scale"] = {res.scale.x(), res.scale.y(), res.scale.z()};
        jreg["scale_gt"] = {res.scale_gt.x(), res.scale_gt.y(), res.scale_gt.z()};
        jreg["scale_error_rel"] = res.scale_error_rel;
        jreg["median_point_error"] = res.median_point_error;
        jreg["chamfer_affine_init"] = res.chamfer_affine_init;
        jreg["chamfer_registered"] = res.chamfer_registered;
        jreg["chamfer_pred_to_gt"] = res.chamfer_vs_gt.pred_to_gt;
        jreg["chamfer_gt_to_pred"] = res.chamfer_vs_gt.gt_to_pred;
        jreg["overlap"] = reg.init.overlap;
        jreg["scale_rounds"] = reg.init.rounds;
        jreg["objective_initial"] = reg.refinement.initial_objective;
        jreg["objective_final"] = reg.refinement.final_objective;
        jreg["accepted_steps"] = reg.refinement.accepted_steps;
        report["registration"] = jreg;
        report["targets"] = json::array();
        json means;
        double m_ps1 = 0, m_ss1 = 0, m_pic = 0, m_sic = 0, m_psp = 0, m_ssp = 0;
        for (const TargetReport& tr : res.targets) {
            report["targets"].push_back({{"view", tr.view},
                                         {"psnr_stage1", tr.psnr_stage1},
                                         {"ssim_stage1", tr.ssim_stage1},
                                         {"psnr_init_color", tr.psnr_init_color},
                                         {"ssim_init_color", tr.ssim_init_color},
                                         {"psnr_splat", tr.psnr_splat},
                                         {"ssim_splat", tr.ssim_splat},
                                         {"stage1_objective", tr.stage1_objective_value},
                                         {"stage2_loss", tr.stage2_loss_value},
                                         {"depth_mae_initial", tr.depth_mae_initial},
                                         {"depth_mae_refined", tr.depth_mae_refined}});
            m_ps1 += tr.psnr_stage1;
            m_ss1 += tr.ssim_stage1;
            m_pic += tr.psnr_init_color;
            m_sic += tr.ssim_init_color;
            m_psp += tr.psnr_splat;
            m_ssp += tr.ssim_splat;
        }
        const double nt = static_cast<double>(res.targets.size());
        means["psnr_stage1"] = m_ps1 / nt;
        means["ssim_stage1"] = m_ss1 / nt;
        means["psnr_init_color"] = m_pic / nt;
        means["ssim_init_color"] = m_sic / nt;
        means["psnr_splat"] = m_psp / nt;
        means["ssim_splat"] = m_ssp / nt;
        report["means"] = means;
        res.report_json = report.dump(2) + "\n";
    });

    if (!out_dir.empty()) {
        run_stage("write", [&]() {
            fs::create_directories(out_dir);
            const fs::path dir(out_dir);
            write_cameras_json((dir / "cams.json").string(), cams);
            {
                std::ofstream scene_out(dir / "scene.json");
                scene_out << scene_to_json(cfg.scene) << "\n";
            }
            write_png((dir / "src_left_coarse.png").string(), gt_l_coarse.image);
            write_png((dir / "src_right_coarse.png").string(), gt_r_coarse.image);
            write_png((dir / "src_left_fine.png").string(), img_l_fine);
            write_png((dir / "src_right_fine.png").string(), img_r_fine);
            write_pointmap_ply((dir / "pmc_left.ply").string(),
                               (dir / "pmc_left_mask.png").string(), canon_l.map,
                               &gt_l_coarse.image);
            write_pointmap_ply((dir / "pmc_right.ply").string(),
                               (dir / "pmc_right_mask.png").string(), canon_r.map,
                               &gt_r_coarse.image);

            RegistrationArtifacts arts;
            arts.scale = reg.init.scale;
            arts.transform_left = reg.transform_left;
            arts.transform_right = reg.transform_right;
            arts.metric_left = reg.metric_left;
            arts.metric_right = reg.metric_right;
            arts.colors_left = gt_l_coarse.image;
            arts.colors_right = gt_r_coarse.image;
            arts.source_left = left;
            arts.source_right = right;
            write_registration((dir / "reg.json").string(), arts);

            char name[64];
            for (size_t t = 0; t < n_targets; ++t) {
                const int view = res.target_views[t];
                std::snprintf(name, sizeof(name), "gt_%02d.png", view);
                write_png((dir / name).string(), gt_out[static_cast<size_t>(view)]);
                std::snprintf(name, sizeof(name), "refined_%02d.pfm", view);
                write_pfm((dir / name).string(), refined_depths[t]);
                std::snprintf(name, sizeof(name), "init_color_%02d.png", view);
                write_png((dir / name).string(),
                          composite_on_black(colors[t].color, colors[t].validity));
                std::snprintf(name, sizeof(name), "plane_%02d.bin", view);
                write_plane_bin((dir / name).string(), target_planes[t]);
                std::snprintf(name, sizeof(name), "render_%02d.png", view);
                write_png((dir / name).string(), finals[t].color);
                const RenderOutput stage1_render =
                    splat({&aux_l, &aux_r}, cams[static_cast<size_t>(view)], cfg.render.width,
                          cfg.render.height);
                std::snprintf(name, sizeof(name), "stage1_%02d.png", view);
                write_png((dir / name).string(), stage1_render.color);
            }
            std::ofstream report_out(dir / "report.json");
            if (!report_out)
                throw IoError("cannot write report.json");
            report_out << res.report_json;
        });
    }
    return res;
}

std::string format_timings(const StageTimings& t) {
    std::ostringstream out;
    char line[96];
    for (const auto& row : t.rows) {
        std::snprintf(line, sizeof(line), "%-18s %10.2f ms\n", row.first.c_str(), row.second);
        out << line;
    }
    std::snprintf(line, sizeof(line), "%-18s %10.2f ms\n", "total", t.total_ms);
    out << line;
    return out.str();
}

} // namespace gsp
