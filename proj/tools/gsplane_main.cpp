// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsplane/core/errors.hpp"
#include "gsplane/core/parallel.hpp"
#include "gsplane/io/camera_io.hpp"
#include "gsplane/io/image_io.hpp"
#include "gsplane/io/plane_io.hpp"
#include "gsplane/io/pointmap_io.hpp"
#include "gsplane/io/registration_io.hpp"
#include "gsplane/metrics/metrics.hpp"
#include "gsplane/pipeline/pipeline.hpp"
#include "gsplane/splat/gaussian_plane.hpp"
#include "gsplane/stage1/registration.hpp"
#include "gsplane/stage2/refine.hpp"
#include "gsplane/synth/scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitStageFailure = 3;

std::string mask_path_for(const std::string& ply_path) {
    fs::path p(ply_path);
    return (p.parent_path() / (p.stem().string() + "_mask.png")).string();
}

int run_gen_scene(const std::string& spec_path, int rig, const std::string& out_dir,
                  int width, int height, double radius, double span_deg, double elevation) {
    gsp::SceneSpec scene = spec_path.empty() ? gsp::default_scene(1)
                                             : gsp::scene_from_json_file(spec_path);
    gsp::RigOptions opt;
    opt.width = width;
    opt.height = height;
    opt.span_deg = span_deg;
    opt.elevation = elevation;
    const auto cams = gsp::gen_rig(rig, radius, gsp::Vec3(0.0, 0.0, 0.8), opt);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    gsp::write_cameras_json((dir / "cams.json").string(), cams);
    {
        std::ofstream scene_out(dir / "scene.json");
        scene_out << gsp::scene_to_json(scene) << "\n";
    }

    // Ground-truth views plus pair-corrupted canonical maps for the sources.
    std::vector<gsp::RenderedView> views;
    views.reserve(cams.size());
    char name[64];
    for (size_t k = 0; k < cams.size(); ++k) {
        views.push_back(gsp::raycast_render(scene, cams[k]));
        const int id = static_cast<int>(k);
        std::snprintf(name, sizeof(name), "img_%02d.png", id);
        gsp::write_png((dir / name).string(), views[k].image);
        std::snprintf(name, sizeof(name), "depth_%02d.pfm", id);
        gsp::write_pfm((dir / name).string(), views[k].depth);
        std::snprintf(name, sizeof(name), "pm_%02d.ply", id);
        const std::string ply = (dir / name).string();
        gsp::write_pointmap_ply(ply, mask_path_for(ply), views[k].points, &views[k].image);
    }
    gsp::CorruptionSpec corruption;
    corruption.seed = scene.seed;
    auto pair = gsp::corrupt_pointmap_pair(views.front().points, views.back().points, corruption);
    const std::string pl = (dir / "pmc_left.ply").string();
    const std::string pr = (dir / "pmc_right.ply").string();
    gsp::write_pointmap_ply(pl, mask_path_for(pl), pair.first.map, &views.front().image);
    gsp::write_pointmap_ply(pr, mask_path_for(pr), pair.second.map, &views.back().image);
    std::cout << "wrote " << cams.size() << " views to " << out_dir << "\n";
    return kExitOk;
}

int run_stage1(const std::string& left_img, const std::string& right_img,
               const std::string& pm_left, const std::string& pm_right,
               const std::string& cams_path, const std::string& out_json, int left_cam,
               int right_cam, const gsp::RegistrationConfig& cfg) {
    const auto cams = gsp::read_cameras_json(cams_path);
    if (right_cam < 0)
        right_cam = static_cast<int>(cams.size()) - 1;
    if (left_cam < 0 || left_cam >= static_cast<int>(cams.size()) || right_cam < 0 ||
        right_cam >= static_cast<int>(cams.size()) || left_cam == right_cam)
        throw gsp::BadConfig("stage1: camera indices out of range");

    const gsp::ImageBuffer img_l = gsp::read_png(left_img);
    const gsp::ImageBuffer img_r = gsp::read_png(right_img);
    const gsp::PointMap map_l = gsp::read_pointmap_ply(pm_left, mask_path_for(pm_left));
    const gsp::PointMap map_r = gsp::read_pointmap_ply(pm_right, mask_path_for(pm_right));
    const gsp::CameraModel cam_l =
        gsp::rescaled(cams[static_cast<size_t>(left_cam)], img_l.width, img_l.height);
    const gsp::CameraModel cam_r =
        gsp::rescaled(cams[static_cast<size_t>(right_cam)], img_r.width, img_r.height);

    const auto reg = gsp::register_views(map_l, map_r, img_l, img_r, cam_l, cam_r, cfg);

    gsp::RegistrationArtifacts arts;
    arts.scale = reg.init.scale;
    arts.transform_left = reg.transform_left;
    arts.transform_right = reg.transform_right;
    arts.metric_left = reg.metric_left;
    arts.metric_right = reg.metric_right;
    arts.colors_left = img_l;
    arts.colors_right = img_r;
    arts.source_left = left_cam;
    arts.source_right = right_cam;
    gsp::write_registration(out_json, arts);
    std::cout << "scale " << reg.init.scale.transpose() << ", overlap " << reg.init.overlap
              << ", objective " << reg.refinement.initial_objective << " -> "
              << reg.refinement.final_objective << "\n";
    return kExitOk;
}

int run_stage2(const std::string& reg_path, const std::string& left_fine,
               const std::string& right_fine, const std::string& cams_path, int target,
               const std::string& out_pfm, const std::string& color_out,
               const std::string& plane_out, gsp::RefineConfig cfg) {
    const auto cams = gsp::read_cameras_json(cams_path);
    if (target < 0 || target >= static_cast<int>(cams.size()))
        throw gsp::BadConfig("stage2: target view out of range");
    const auto reg = gsp::read_registration(reg_path);
    const gsp::ImageBuffer img_l = gsp::read_png(left_fine);
    const gsp::ImageBuffer img_r = gsp::read_png(right_fine);
    cfg.fine_width = img_l.width;
    cfg.fine_height = img_l.height;

    const auto& cam_l = cams[static_cast<size_t>(reg.source_left)];
    const auto& cam_r = cams[static_cast<size_t>(reg.source_right)];
    const auto& cam_t = cams[static_cast<size_t>(target)];
    const gsp::CameraModel cam_l_coarse =
        gsp::rescaled(cam_l, reg.metric_left.width, reg.metric_left.height);
    const gsp::CameraModel cam_r_coarse =
        gsp::rescaled(cam_r, reg.metric_right.width, reg.metric_right.height);

    const auto result = gsp::refine_target(reg.metric_left, reg.metric_right, reg.colors_left,
                                           reg.colors_right, img_l, img_r, cam_l_coarse,
                                           cam_r_coarse, cam_t, cfg);
    gsp::write_pfm(out_pfm, result.refined);
    if (!color_out.empty()) {
        gsp::ImageBuffer img = result.color.color;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                if (!result.color.validity[static_cast<size_t>(y) *
                                               static_cast<size_t>(img.width) +
                                           static_cast<size_t>(x)])
                    img.set_rgb(x, y, gsp::Vec3::Zero());
        gsp::write_png(color_out, img);
    }
    if (!plane_out.empty()) {
        gsp::DepthMap anchored = result.refined;
        for (size_t i = 0; i < anchored.validity.size(); ++i)
            anchored.validity[i] = anchored.validity[i] && result.color.validity[i] ? 1 : 0;
        const auto plane = gsp::build_gaussian_plane(
            anchored, result.color.color, result.confidence,
            gsp::rescaled(cam_t, cfg.fine_width, cfg.fine_height));
        gsp::write_plane_bin(plane_out, plane);
    }
    std::cout << "refined depth written to " << out_pfm << "\n";
    return kExitOk;
}

int run_render(const std::string& plane_path, const std::string& cams_path, int view,
               const std::string& out_png, const std::string& depth_out, int width, int height) {
    const auto cams = gsp::read_cameras_json(cams_path);
    if (view < 0 || view >= static_cast<int>(cams.size()))
        throw gsp::BadConfig("render: view out of range");
    const auto plane = gsp::read_plane_bin(plane_path);
    const auto& cam = cams[static_cast<size_t>(view)];
    const int w = width > 0 ? width : cam.width;
    const int h = height > 0 ? height : cam.height;
    const auto render = gsp::splat(plane, cam, w, h);
    gsp::write_png(out_png, render.color);
    if (!depth_out.empty())
        gsp::write_pfm(depth_out, render.depth);
    return kExitOk;
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& out_json) {
    if (!fs::is_directory(pred_dir))
        throw gsp::BadConfig("eval: not a directory: " + pred_dir);
    if (!fs::is_directory(gt_dir))
        throw gsp::BadConfig("eval: not a directory: " + gt_dir);

    json frames = json::object();
    double sum_psnr = 0.0, sum_ssim = 0.0, sum_p2g = 0.0, sum_g2p = 0.0;
    int n_img = 0, n_cloud = 0;
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(pred_dir))
        entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());
    for (const auto& path : entries) {
        const std::string name = path.filename().string();
        const fs::path gt_path = fs::path(gt_dir) / name;
        if (!fs::exists(gt_path))
            continue;
        if (path.extension() == ".png" && name.find("mask") == std::string::npos) {
            const auto pred = gsp::read_png(path.string());
            const auto gt = gsp::read_png(gt_path.string());
            const double p = gsp::psnr(pred, gt);
            const double s = gsp::ssim(pred, gt);
            frames[name] = {{"psnr", p}, {"ssim", s}};
            sum_psnr += p;
            sum_ssim += s;
            ++n_img;
        } else if (path.extension() == ".ply") {
            const auto pred = gsp::read_ply_points(path.string());
            const auto gt = gsp::read_ply_points(gt_path.string());
            const auto cd = gsp::chamfer_eval(pred, gt);
            frames[name] = {{"chamfer_p2g", cd.pred_to_gt}, {"chamfer_g2p", cd.gt_to_pred}};
            sum_p2g += cd.pred_to_gt;
            sum_g2p += cd.gt_to_pred;
            ++n_cloud;
        }
    }
    json report;
    report["frames"] = frames;
    json means;
    if (n_img > 0) {
        means["psnr"] = sum_psnr / n_img;
        means["ssim"] = sum_ssim / n_img;
    }
    if (n_cloud > 0) {
        means["chamfer_p2g"] = sum_p2g / n_cloud;
        means["chamfer_g2p"] = sum_g2p / n_cloud;
    }
    report["means"] = means;
    std::ofstream out(out_json);
    if (!out)
        throw gsp::IoError("cannot write " + out_json);
    out << report.dump(2) << "\n";
    std::cout << report["means"].dump() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-view point-map registration and Gaussian-plane rendering"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = hardware)");

    // gen-scene
    auto* gen = app.add_subcommand("gen-scene", "render a synthetic rig with ground truth");
    std::string gen_spec, gen_out = "scene_out";
    int gen_rig_n = 6, gen_w = 256, gen_h = 144;
    double gen_radius = 3.0, gen_span = 60.0, gen_elev = 0.5;
    gen->add_option("--spec", gen_spec, "scene JSON (default: built-in scene)");
    gen->add_option("--rig", gen_rig_n, "camera count");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--width", gen_w, "image width");
    gen->add_option("--height", gen_h, "image height");
    gen->add_option("--radius", gen_radius, "rig radius, meters");
    gen->add_option("--span", gen_span, "rig arc span, degrees");
    gen->add_option("--elevation", gen_elev, "camera height above look-at, meters");

    // stage1
    auto* s1 = app.add_subcommand("stage1", "register canonical point maps into metric space");
    std::string s1_left, s1_right, s1_pml, s1_pmr, s1_cams, s1_out = "reg.json";
    int s1_lcam = 0, s1_rcam = -1;
    gsp::RegistrationConfig s1_cfg;
    s1->add_option("--left", s1_left, "left image PNG")->required();
    s1->add_option("--right", s1_right, "right image PNG")->required();
    s1->add_option("--pm-left", s1_pml, "left canonical point map PLY")->required();
    s1->add_option("--pm-right", s1_pmr, "right canonical point map PLY")->required();
    s1->add_option("--cams", s1_cams, "camera rig JSON")->required();
    s1->add_option("--out", s1_out, "output reg.json path");
    s1->add_option("--left-cam", s1_lcam, "left camera index");
    s1->add_option("--right-cam", s1_rcam, "right camera index (default: last)");
    s1->add_option("--iterations", s1_cfg.iterations, "translation iterations");
    s1->add_option("--step-size", s1_cfg.step_size, "gradient step size");
    s1->add_option("--smoothness", s1_cfg.smoothness_weight, "smoothness weight");

    // stage2
    auto* s2 = app.add_subcommand("stage2", "refine target depth and initialize color");
    std::string s2_reg, s2_lf, s2_rf, s2_cams, s2_out = "refined.pfm";
    std::string s2_color = "init_color.png", s2_plane = "plane.bin";
    int s2_target = 1;
    gsp::RefineConfig s2_cfg;
    s2->add_option("--reg", s2_reg, "reg.json from stage1")->required();
    s2->add_option("--left-fine", s2_lf, "left fine-resolution PNG")->required();
    s2->add_option("--right-fine", s2_rf, "right fine-resolution PNG")->required();
    s2->add_option("--cams", s2_cams, "camera rig JSON")->required();
    s2->add_option("--target", s2_target, "target view index")->required();
    s2->add_option("--out", s2_out, "refined depth PFM path");
    s2->add_option("--color-out", s2_color, "initial color PNG path (empty to skip)");
    s2->add_option("--plane-out", s2_plane, "Gaussian plane path (empty to skip)");
    s2->add_option("--candidates", s2_cfg.n_candidates, "depth candidates per pixel");
    s2->add_option("--halfwidth", s2_cfg.search_halfwidth, "search halfwidth fraction");

    // render
    auto* rd = app.add_subcommand("render", "splat a stored Gaussian plane");
    std::string rd_plane, rd_cams, rd_out = "render.png", rd_depth;
    int rd_view = 0, rd_w = 0, rd_h = 0;
    rd->add_option("--plane", rd_plane, "plane.bin")->required();
    rd->add_option("--cam", rd_cams, "camera rig JSON")->required();
    rd->add_option("--view", rd_view, "camera index")->required();
    rd->add_option("--out", rd_out, "output PNG");
    rd->add_option("--depth", rd_depth, "optional output depth PFM");
    rd->add_option("--width", rd_w, "output width (default: camera width)");
    rd->add_option("--height", rd_h, "output height (default: camera height)");

    // eval
    auto* ev = app.add_subcommand("eval", "PSNR/SSIM/chamfer between two directories");
    std::string ev_pred, ev_gt, ev_out = "report.json";
    ev->add_option("--pred", ev_pred, "prediction directory")->required();
    ev->add_option("--gt", ev_gt, "ground-truth directory")->required();
    ev->add_option("--out", ev_out, "output report JSON");

    // pipeline / profile
    auto* pl = app.add_subcommand("pipeline", "run every stage end to end");
    std::string pl_config, pl_out = "pipeline_out";
    pl->add_option("--config", pl_config, "pipeline config JSON")->required();
    pl->add_option("--out", pl_out, "artifact directory");

    auto* pf = app.add_subcommand("profile", "run the pipeline and report per-stage wall time");
    std::string pf_config, pf_out;
    pf->add_option("--config", pf_config, "pipeline config JSON")->required();
    pf->add_option("--out", pf_out, "optional timing JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadConfig;
    }

    gsp::set_thread_count(threads);
    try {
        if (gen->parsed())
            return run_gen_scene(gen_spec, gen_rig_n, gen_out, gen_w, gen_h, gen_radius, gen_span,
                                 gen_elev);
        if (s1->parsed())
            return run_stage1(s1_left, s1_right, s1_pml, s1_pmr, s1_cams, s1_out, s1_lcam,
                              s1_rcam, s1_cfg);
        if (s2->parsed())
            return run_stage2(s2_reg, s2_lf, s2_rf, s2_cams, s2_target, s2_out, s2_color,
                              s2_plane, s2_cfg);
        if (rd->parsed())
            return run_render(rd_plane, rd_cams, rd_view, rd_out, rd_depth, rd_w, rd_h);
        if (ev->parsed())
            return run_eval(ev_pred, ev_gt, ev_out);
        if (pl->parsed()) {
            const auto cfg = gsp::pipeline_config_from_json_file(pl_config);
            const auto result = gsp::run_pipeline(cfg, pl_out);
            std::cout << result.report_json;
            return kExitOk;
        }
        if (pf->parsed()) {
            const auto cfg = gsp::pipeline_config_from_json_file(pf_config);
            const auto result = gsp::run_pipeline(cfg, "");
            std::cout << gsp::format_timings(result.timings);
            if (!pf_out.empty()) {
                json jt;
                for (const auto& row : result.timings.rows)
                    jt["rows"][row.first] = row.second;
                jt["total_ms"] = result.timings.total_ms;
                std::ofstream out(pf_out);
                out << jt.dump(2) << "\n";
            }
            return kExitOk;
        }
    } catch (const gsp::BadConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const gsp::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const gsp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFailure;
    }
    return kExitOk;
}
