// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/splat/gaussian_plane.hpp"

#include <algorithm>
#include <cmath>

#include "gsplane/core/errors.hpp"
#include "gsplane/core/parallel.hpp"

namespace gsp {

namespace {

constexpr double kMinDepth = 1e-6;
constexpr double kCovDilation = 0.3;       // px^2 added to the 2D covariance diagonal
constexpr double kStopTransmittance = 1e-4;
constexpr int kTileSize = 16;

struct Projected {
    double depth = 0.0;
    double mx = 0.0, my = 0.0;  // projected mean, pixels
    double ia = 0.0, ib = 0.0, ic = 0.0;  // inverse 2D covariance
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1; // inclusive pixel bbox
    Vec3 color = Vec3::Zero();
    double opacity = 0.0;
    const Gaussian* src = nullptr;
};

// Total order on primitive values (not storage position): depth first, then
// every attribute lexicographically. Equal-valued duplicates are
// interchangeable, so permuting storage never changes the composite.
bool before(const Projected& lhs, const Projected& rhs) {
    if (lhs.depth != rhs.depth)
        return lhs.depth < rhs.depth;
    const Gaussian& a = *lhs.src;
    const Gaussian& b = *rhs.src;
    for (int i = 0; i < 3; ++i)
        if (a.position[i] != b.position[i])
            return a.position[i] < b.position[i];
    for (int i = 0; i < 3; ++i)
        if (a.color[i] != b.color[i])
            return a.color[i] < b.color[i];
    if (a.opacity != b.opacity)
        return a.opacity < b.opacity;
    for (int i = 0; i < 3; ++i)
        if (a.scale[i] != b.scale[i])
            return a.scale[i] < b.scale[i];
    for (int i = 0; i < 4; ++i)
        if (a.rotation.coeffs()[i] != b.rotation.coeffs()[i])
            return a.rotation.coeffs()[i] < b.rotation.coeffs()[i];
    return false;
}

std::vector<Projected> project_primitives(const std::vector<const GaussianPlane*>& planes,
                                          const CameraModel& cam, int out_w, int out_h,
                                          SplatStats* stats) {
    // Intrinsics follow the output raster so the field of view is preserved.
    const CameraModel rcam = rescaled(cam, out_w, out_h);
    const double fx = rcam.fx, fy = rcam.fy;
    const double cx0 = rcam.cx, cy0 = rcam.cy;

    std::vector<Projected> out;
    size_t total = 0;
    for (const auto* plane : planes)
        total += plane->count();
    out.reserve(total);
    if (stats) {
        stats->submitted = total;
        stats->rasterized = 0;
    }

    for (const auto* plane : planes) {
        for (const Gaussian& g : plane->primitives) {
            const Vec3 p = cam.to_camera(g.position);
            if (!(p.z() > kMinDepth))
                continue;
            const double inv_z = 1.0 / p.z();
            const double mx = fx * p.x() * inv_z + cx0;
            const double my = fy * p.y() * inv_z + cy0;

            const Mat3 rot = g.rotation.toRotationMatrix();
            const Mat3 cov_world =
                rot * g.scale.cwiseProduct(g.scale).asDiagonal() * rot.transpose();
            const Mat3 cov_cam = cam.rotation * cov_world * cam.rotation.transpose();

            Eigen::Matrix<double, 2, 3> jac;
            jac << fx * inv_z, 0.0, -fx * p.x() * inv_z * inv_z, //
                0.0, fy * inv_z, -fy * p.y() * inv_z * inv_z;
            Eigen::Matrix2d cov2 = jac * cov_cam * jac.transpose();
            cov2(0, 0) += kCovDilation;
            cov2(1, 1) += kCovDilation;

            const double a = cov2(0, 0), b = cov2(0, 1), c = cov2(1, 1);
            const double det = a * c - b * b;
            if (!std::isfinite(det) || det <= 0.0 || !std::isfinite(mx) || !std::isfinite(my))
                throw SingularCovariance("splat: degenerate 2D covariance");

            const double mid = 0.5 * (a + c);
            const double lam_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
            const double radius = 3.0 * std::sqrt(lam_max);

            Projected pr;
            pr.x0 = std::max(0, static_cast<int>(std::floor(mx - radius)));
            pr.x1 = std::min(out_w - 1, static_cast<int>(std::ceil(mx + radius)));
            pr.y0 = std::max(0, static_cast<int>(std::floor(my - radius)));
            pr.y1 = std::min(out_h - 1, static_cast<int>(std::ceil(my + radius)));
            if (pr.x0 > pr.x1 || pr.y0 > pr.y1)
                continue;
            pr.depth = p.z();
            pr.mx = mx;
            pr.my = my;
            const double inv_det = 1.0 / det;
            pr.ia = c * inv_det;
            pr.ib = -b * inv_det;
            pr.ic = a * inv_det;
            pr.color = g.color;
            pr.opacity = g.opacity;
            pr.src = &g;
            out.push_back(pr);
        }
    }
    std::sort(out.begin(), out.end(), before);
    if (stats)
        stats->rasterized = out.size();
    return out;
}

struct PixelAccum {
    Vec3 color = Vec3::Zero();
    double depth_sum = 0.0;
    double weight_sum = 0.0;
    double transmittance = 1.0;
};

// Front-to-back compositing of one primitive at pixel (x, y).
// Returns false once the pixel is saturated.
inline bool composite(PixelAccum& acc, const Projected& pr, int x, int y) {
    const double dx = static_cast<double>(x) - pr.mx;
    const double dy = static_cast<double>(y) - pr.my;
    const double q = pr.ia * dx * dx + 2.0 * pr.ib * dx * dy + pr.ic * dy * dy;
    const double alpha = pr.opacity * std::exp(-0.5 * q);
    const double w = alpha * acc.transmittance;
    acc.color += w * pr.color;
    acc.depth_sum += w * pr.depth;
    acc.weight_sum += w;
    acc.transmittance *= 1.0 - alpha;
    return acc.transmittance >= kStopTransmittance;
}

RenderOutput finalize(int out_w, int out_h, const std::vector<PixelAccum>& accum) {
    RenderOutput out;
    out.color = ImageBuffer(out_w, out_h, 3);
    out.depth = DepthMap(out_w, out_h);
    out.alpha.assign(static_cast<size_t>(out_w) * static_cast<size_t>(out_h), 0.0);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const size_t i = static_cast<size_t>(y) * static_cast<size_t>(out_w) +
                             static_cast<size_t>(x);
            const PixelAccum& a = accum[i];
            out.color.set_rgb(x, y, a.color);
            out.alpha[i] = std::clamp(1.0 - a.transmittance, 0.0, 1.0);
            if (a.weight_sum > 0.0)
                out.depth.set(x, y, a.depth_sum / a.weight_sum, true);
        }
    return out;
}

} // namespace

void GaussianPlane::validate() const {
    for (const Gaussian& g : primitives) {
        if (!g.position.allFinite())
            throw Error("gaussian plane: non-finite position");
        if (std::abs(g.rotation.norm() - 1.0) > 1e-9)
            throw Error("gaussian plane: rotation quaternion is not unit-norm");
        if (!(g.scale.minCoeff() > 0.0) || !g.scale.allFinite())
            throw Error("gaussian plane: scale must be positive");
        if (!(g.opacity > 0.0) || g.opacity > 1.0)
            throw Error("gaussian plane: opacity must lie in (0,1]");
    }
}

GaussianPlane build_gaussian_plane(const DepthMap& depth, const ImageBuffer& color,
                                   const std::vector<double>& confidence, const CameraModel& cam,
                                   const SplatConfig& cfg) {
    if (depth.width != color.width || depth.height != color.height)
        throw DimensionMismatch("build_gaussian_plane: depth and color sizes differ");
    if (confidence.size() != depth.depth.size())
        throw DimensionMismatch("build_gaussian_plane: confidence grid size mismatch");
    const double focal = 0.5 * (cam.fx + cam.fy) *
                         (static_cast<double>(depth.width) / static_cast<double>(cam.width));
    GaussianPlane plane;
    plane.primitives.reserve(depth.depth.size());
    for (int y = 0; y < depth.height; ++y)
        for (int x = 0; x < depth.width; ++x) {
            if (!depth.valid(x, y))
                continue;
            const double d = depth.at(x, y);
            // Depth grid may differ from the camera resolution; sample the ray
            // through the matching continuous pixel of the native camera.
            const double u = (static_cast<double>(x) + 0.5) *
                                 (static_cast<double>(cam.width) / depth.width) - 0.5;
            const double v = (static_cast<double>(y) + 0.5) *
                                 (static_cast<double>(cam.height) / depth.height) - 0.5;
            Gaussian g;
            g.position = unproject(Vec2(u, v), d, cam);
            g.color = color.rgb(x, y);
            g.rotation = Quat::Identity();
            g.scale = Vec3::Constant(cfg.pixel_footprint * d / focal);
            const double conf = std::clamp(confidence[depth.index(x, y)], 0.0, 1.0);
            g.opacity = cfg.opacity_floor + cfg.opacity_range * conf;
            plane.primitives.push_back(g);
        }
    return plane;
}

RenderOutput splat(const std::vector<const GaussianPlane*>& planes, const CameraModel& cam,
                   int out_width, int out_height, SplatStats* stats) {
    for (const auto* p : planes)
        p->validate();
    const auto prims = project_primitives(planes, cam, out_width, out_height, stats);

    const int tiles_x = (out_width + kTileSize - 1) / kTileSize;
    const int tiles_y = (out_height + kTileSize - 1) / kTileSize;
    std::vector<std::vector<int>> tile_lists(static_cast<size_t>(tiles_x) *
                                             static_cast<size_t>(tiles_y));
    for (size_t i = 0; i < prims.size(); ++i) {
        const Projected& pr = prims[i];
        const int tx0 = pr.x0 / kTileSize, tx1 = pr.x1 / kTileSize;
        const int ty0 = pr.y0 / kTileSize, ty1 = pr.y1 / kTileSize;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                tile_lists[static_cast<size_t>(ty) * static_cast<size_t>(tiles_x) +
                           static_cast<size_t>(tx)]
                    .push_back(static_cast<int>(i));
    }

    std::vector<PixelAccum> accum(static_cast<size_t>(out_width) *
                                  static_cast<size_t>(out_height));
    parallel_for(0, tiles_x * tiles_y, [&](int tile) {
        const int tx = tile % tiles_x;
        const int ty = tile / tiles_x;
        const auto& list = tile_lists[static_cast<size_t>(tile)];
        const int px0 = tx * kTileSize, px1 = std::min(out_width, px0 + kTileSize);
        const int py0 = ty * kTileSize, py1 = std::min(out_height, py0 + kTileSize);
        for (int y = py0; y < py1; ++y)
            for (int x = px0; x < px1; ++x) {
                PixelAccum& acc = accum[static_cast<size_t>(y) * static_cast<size_t>(out_width) +
                                        static_cast<size_t>(x)];
                for (int idx : list) {
                    const Projected& pr = prims[static_cast<size_t>(idx)];
                    if (x < pr.x0 || x > pr.x1 || y < pr.y0 || y > pr.y1)
                        continue;
                    if (!composite(acc, pr, x, y))
                        break;
                }
            }
    });
    return finalize(out_width, out_height, accum);
}

RenderOutput splat(const GaussianPlane& plane, const CameraModel& cam, int out_width,
                   int out_height, SplatStats* stats) {
    return splat(std::vector<const GaussianPlane*>{&plane}, cam, out_width, out_height, stats);
}

RenderOutput splat_reference(const std::vector<const GaussianPlane*>& planes,
                             const CameraModel& cam, int out_width, int out_height,
                             SplatStats* stats) {
    for (const auto* p : planes)
        p->validate();
    const auto prims = project_primitives(planes, cam, out_width, out_height, stats);
    std::vector<PixelAccum> accum(static_cast<size_t>(out_width) *
                                  static_cast<size_t>(out_height));
    parallel_for(0, out_height, [&](int y) {
        for (int x = 0; x < out_width; ++x) {
            PixelAccum& acc = accum[static_cast<size_t>(y) * static_cast<size_t>(out_width) +
                                    static_cast<size_t>(x)];
            for (const Projected& pr : prims) {
                if (x < pr.x0 || x > pr.x1 || y < pr.y0 || y > pr.y1)
                    continue;
                if (!composite(acc, pr, x, y))
                    break;
            }
        }
    });
    return finalize(out_width, out_height, accum);
}

} // namespace gsp
