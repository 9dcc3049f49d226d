// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/stage2/refine.hpp"

#include <algorithm>
#include <cmath>

#include "gsplane/core/errors.hpp"
#include "gsplane/core/parallel.hpp"
#include "gsplane/splat/gaussian_plane.hpp"
#include "gsplane/stage1/registration.hpp"

namespace gsp {

void RefineConfig::validate() const {
    if (n_candidates < 2)
        throw BadConfig("refine: need at least 2 depth candidates");
    if (!(search_halfwidth > 0.0) || search_halfwidth >= 1.0)
        throw BadConfig("refine: search halfwidth must lie in (0, 1)");
    if (!(softmax_temperature > 0.0))
        throw BadConfig("refine: softmax temperature must be positive");
    if (patch_radius < 0)
        throw BadConfig("refine: patch radius must be non-negative");
    if (fine_width <= 0 || fine_height <= 0)
        throw BadConfig("refine: fine resolution must be positive");
}

DepthMap init_target_depth(const PointMap& metric_left, const PointMap& metric_right,
                           const ImageBuffer& img_left, const ImageBuffer& img_right,
                           const CameraModel& cam_left, const CameraModel& cam_right,
                           const CameraModel& cam_target, int out_width, int out_height,
                           const RefineConfig& cfg) {
    cfg.validate();
    if (metric_left.space != PointSpace::Metric || metric_right.space != PointSpace::Metric)
        throw Error("init_target_depth: point maps must be metric");
    const GaussianPlane plane_l =
        auxiliary_gaussian_plane(metric_left, img_left, cam_left, cfg.pixel_footprint);
    const GaussianPlane plane_r =
        auxiliary_gaussian_plane(metric_right, img_right, cam_right, cfg.pixel_footprint);
    SplatStats stats;
    const RenderOutput render =
        splat({&plane_l, &plane_r}, cam_target, out_width, out_height, &stats);
    if (stats.rasterized == 0)
        throw EmptyGeometry("init_target_depth: no Gaussian lands in the target frustum");

    DepthMap out(out_width, out_height);
    for (int y = 0; y < out_height; ++y)
        for (int x = 0; x < out_width; ++x) {
            const size_t i = out.index(x, y);
            const bool ok = render.depth.valid(x, y) && render.alpha[i] >= cfg.alpha_threshold &&
                            render.depth.at(x, y) > 0.0;
            out.set(x, y, render.depth.at(x, y), ok);
        }
    return out;
}

std::vector<double> sample_depth_candidates(const DepthMap& init, const RefineConfig& cfg,
                                            std::optional<double> fallback) {
    cfg.validate();
    std::optional<double> median = init.valid_median();
    if (!median)
        median = fallback;
    if (!median)
        throw EmptyGeometry("sample_depth_candidates: no valid depth and no fallback");

    const int n = cfg.n_candidates;
    std::vector<double> out(static_cast<size_t>(init.width) * static_cast<size_t>(init.height) *
                            static_cast<size_t>(n));
    for (int y = 0; y < init.height; ++y)
        for (int x = 0; x < init.width; ++x) {
            const double d = init.valid(x, y) ? init.at(x, y) : *median;
            const double lo = d * (1.0 - cfg.search_halfwidth);
            const double hi = d * (1.0 + cfg.search_halfwidth);
            const double step = (hi - lo) / static_cast<double>(n - 1);
            const size_t base = (static_cast<size_t>(y) * static_cast<size_t>(init.width) +
                                 static_cast<size_t>(x)) *
                                static_cast<size_t>(n);
            for (int k = 0; k < n; ++k)
                out[base + static_cast<size_t>(k)] = lo + step * static_cast<double>(k);
        }
    return out;
}

WarpedStack warp_source_to_target(const ImageBuffer& src_img, const CameraModel& src_cam,
                                  const std::vector<double>& candidates,
                                  const CameraModel& target_cam, int width, int height,
                                  int n_candidates) {
    if (candidates.size() != static_cast<size_t>(width) * static_cast<size_t>(height) *
                                 static_cast<size_t>(n_candidates))
        throw DimensionMismatch("warp_source_to_target: candidate grid size mismatch");
    const CameraModel tcam = rescaled(target_cam, width, height);
    const CameraModel scam = rescaled(src_cam, src_img.width, src_img.height);

    WarpedStack out;
    out.width = width;
    out.height = height;
    out.n_candidates = n_candidates;
    out.samples.assign(candidates.size(), Vec3::Zero());
    out.validity.assign(candidates.size(), 0);

    parallel_for(0, height, [&](int y) {
        for (int x = 0; x < width; ++x)
            for (int k = 0; k < n_candidates; ++k) {
                const size_t i = out.index(x, y, k);
                const double d = candidates[i];
                if (!(d > 0.0))
                    continue;
                const Vec3 p = unproject(Vec2(x, y), d, tcam);
                const Projection proj = project(p, scam);
                if (!(proj.depth > 0.0))
                    continue;
                const auto sample = bilinear_rgb(src_img, proj.pixel.x(), proj.pixel.y());
                if (!sample)
                    continue;
                out.samples[i] = *sample;
                out.validity[i] = 1;
            }
    });
    return out;
}

CostVolume build_cost_volume(const WarpedStack& warp_left, const WarpedStack& warp_right,
                             const std::vector<double>& candidates,
                             const std::vector<uint8_t>& seed_validity, const RefineConfig& cfg) {
    cfg.validate();
    if (warp_left.width != warp_right.width || warp_left.height != warp_right.height ||
        warp_left.n_candidates != warp_right.n_candidates)
        throw DimensionMismatch("build_cost_volume: warped stacks disagree");
    if (candidates.size() != warp_left.samples.size())
        throw DimensionMismatch("build_cost_volume: candidate grid size mismatch");
    const int w = warp_left.width, h = warp_left.height, n = warp_left.n_candidates;
    if (seed_validity.size() != static_cast<size_t>(w) * static_cast<size_t>(h))
        throw DimensionMismatch("build_cost_volume: seed validity size mismatch");

    CostVolume vol;
    vol.width = w;
    vol.height = h;
    vol.n_candidates = n;
    vol.candidates = candidates;
    vol.cost.assign(candidates.size(), cfg.invalid_cost);
    vol.weights.assign(candidates.size(), 0.0);
    vol.validity.assign(seed_validity.begin(), seed_validity.end());

    // Raw per-pixel squared difference, mean over channels.
    std::vector<double> raw(candidates.size(), -1.0); // -1 marks invalid
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < n; ++k) {
                const size_t i = vol.index(x, y, k);
                if (!warp_left.validity[i] || !warp_right.validity[i])
                    continue;
                raw[i] = (warp_left.samples[i] - warp_right.samples[i]).squaredNorm() / 3.0;
            }
    });

    const int r = cfg.patch_radius;
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const size_t pix = static_cast<size_t>(y) * static_cast<size_t>(w) +
                               static_cast<size_t>(x);
            for (int k = 0; k < n; ++k) {
                const size_t i = vol.index(x, y, k);
                if (raw[i] < 0.0)
                    continue; // stays at the penalty
                double sum = 0.0;
                int count = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int ny = y + dy;
                    if (ny < 0 || ny >= h)
                        continue;
                    for (int dx = -r; dx <= r; ++dx) {
                        const int nx = x + dx;
                        if (nx < 0 || nx >= w)
                            continue;
                        const double v = raw[vol.index(nx, ny, k)];
                        if (v < 0.0)
                            continue;
                        sum += v;
                        ++count;
                    }
                }
                vol.cost[i] = count > 0 ? sum / static_cast<double>(count) : cfg.invalid_cost;
            }
            // softmax over candidates, stabilized at the minimum cost
            double min_cost = vol.cost[vol.index(x, y, 0)];
            for (int k = 1; k < n; ++k)
                min_cost = std::min(min_cost, vol.cost[vol.index(x, y, k)]);
            double norm = 0.0;
            for (int k = 0; k < n; ++k) {
                const size_t i = vol.index(x, y, k);
                vol.weights[i] = std::exp(-(vol.cost[i] - min_cost) / cfg.softmax_temperature);
                norm += vol.weights[i];
            }
            for (int k = 0; k < n; ++k)
                vol.weights[vol.index(x, y, k)] /= norm;
            if (!vol.validity[pix] && min_cost < cfg.invalid_cost)
                vol.validity[pix] = 1; // matched below the penalty: recovered pixel
        }
    });
    return vol;
}

DepthMap regress_depth(const CostVolume& volume) {
    DepthMap out(volume.width, volume.height);
    const int n = volume.n_candidates;
    for (int y = 0; y < volume.height; ++y)
        for (int x = 0; x < volume.width; ++x) {
            double d = 0.0;
            for (int k = 0; k < n; ++k) {
                const size_t i = volume.index(x, y, k);
                d += volume.weights[i] * volume.candidates[i];
            }
            const double lo = volume.candidates[volume.index(x, y, 0)];
            const double hi = volume.candidates[volume.index(x, y, n - 1)];
            d = std::clamp(d, lo, hi);
            out.set(x, y, d, volume.validity[out.index(x, y)] != 0);
        }
    return out;
}

InitColor init_color(const WarpedStack& warp_left_refined, const WarpedStack& warp_right_refined,
                     const DepthMap& refined, const CameraModel& cam_left,
                     const CameraModel& cam_right, const CameraModel& cam_target,
                     const RefineConfig& cfg) {
    if (warp_left_refined.n_candidates != 1 || warp_right_refined.n_candidates != 1)
        throw DimensionMismatch("init_color: expected single-candidate warps");
    const int w = refined.width, h = refined.height;
    if (warp_left_refined.width != w || warp_left_refined.height != h ||
        warp_right_refined.width != w || warp_right_refined.height != h)
        throw DimensionMismatch("init_color: sizes disagree");

    const CameraModel tcam = rescaled(cam_target, w, h);
    const Vec3 c_target = tcam.center();
    const Vec3 c_left = cam_left.center();
    const Vec3 c_right = cam_right.center();

    InitColor out;
    out.color = ImageBuffer(w, h, 3);
    out.validity.assign(static_cast<size_t>(w) * static_cast<size_t>(h), 0);

    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const size_t pix = static_cast<size_t>(y) * static_cast<size_t>(w) +
                               static_cast<size_t>(x);
            const bool vl = warp_left_refined.validity[pix] != 0;
            const bool vr = warp_right_refined.validity[pix] != 0;
            if (!vl && !vr)
                continue;
            const Vec3 cl = warp_left_refined.samples[pix];
            const Vec3 cr = warp_right_refined.samples[pix];
            Vec3 color;
            if (vl != vr) {
                color = vl ? cl : cr;
            } else {
                const Vec3 p = unproject(Vec2(x, y), refined.at(x, y), tcam);
                const Vec3 view_dir = (p - c_target).normalized();
                auto angle2 = [&](const Vec3& c_src) {
                    const double cosang =
                        std::clamp(view_dir.dot((p - c_src).normalized()), -1.0, 1.0);
                    const double ang = std::acos(cosang);
                    return ang * ang;
                };
                const double cost = (cl - cr).squaredNorm() / 3.0;
                const double photometric = std::exp(-cost / cfg.softmax_temperature);
                // Ray-proximity factor: a target that coincides with a source
                // reproduces that source exactly.
                const double wl = photometric / (angle2(c_left) + 1e-16);
                const double wr = photometric / (angle2(c_right) + 1e-16);
                color = (wl * cl + wr * cr) / (wl + wr);
            }
            out.color.set_rgb(x, y, color);
            out.validity[pix] = 1;
        }
    });
    return out;
}

RefineResult refine_target(const PointMap& metric_left, const PointMap& metric_right,
                           const ImageBuffer& img_left_coarse, const ImageBuffer& img_right_coarse,
                           const ImageBuffer& img_left_fine, const ImageBuffer& img_right_fine,
                           const CameraModel& cam_left, const CameraModel& cam_right,
                           const CameraModel& cam_target, const RefineConfig& cfg) {
    cfg.validate();
    RefineResult res;
    res.initial = init_target_depth(metric_left, metric_right, img_left_coarse, img_right_coarse,
                                    cam_left, cam_right, cam_target, cfg.fine_width,
                                    cfg.fine_height, cfg);
    const auto candidates = sample_depth_candidates(res.initial, cfg);
    const auto warp_l = warp_source_to_target(img_left_fine, cam_left, candidates, cam_target,
                                              cfg.fine_width, cfg.fine_height, cfg.n_candidates);
    const auto warp_r = warp_source_to_target(img_right_fine, cam_right, candidates, cam_target,
                                              cfg.fine_width, cfg.fine_height, cfg.n_candidates);
    res.volume = build_cost_volume(warp_l, warp_r, candidates, res.initial.validity, cfg);
    res.refined = regress_depth(res.volume);

    std::vector<double> refined_depths(res.refined.depth);
    const auto warp_l1 = warp_source_to_target(img_left_fine, cam_left, refined_depths,
                                               cam_target, cfg.fine_width, cfg.fine_height, 1);
    const auto warp_r1 = warp_source_to_target(img_right_fine, cam_right, refined_depths,
                                               cam_target, cfg.fine_width, cfg.fine_height, 1);
    res.color = init_color(warp_l1, warp_r1, res.refined, cam_left, cam_right, cam_target, cfg);

    res.confidence.assign(res.refined.depth.size(), 0.0);
    for (int y = 0; y < res.volume.height; ++y)
        for (int x = 0; x < res.volume.width; ++x) {
            double min_cost = res.volume.cost[res.volume.index(x, y, 0)];
            for (int k = 1; k < res.volume.n_candidates; ++k)
                min_cost = std::min(min_cost, res.volume.cost[res.volume.index(x, y, k)]);
            res.confidence[res.refined.index(x, y)] =
                std::exp(-min_cost / cfg.softmax_temperature);
        }
    return res;
}

} // namespace gsp
