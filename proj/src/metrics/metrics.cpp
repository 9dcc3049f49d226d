// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/metrics/metrics.hpp"

#include <cmath>

#include "gsplane/core/errors.hpp"
#include "gsplane/core/kdtree.hpp"

namespace gsp {

namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_kernel() {
    std::vector<double> k(kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = static_cast<double>(i - kRadius);
        k[static_cast<size_t>(i)] = std::exp(-0.5 * d * d / (kSigma * kSigma));
        sum += k[static_cast<size_t>(i)];
    }
    for (double& v : k)
        v /= sum;
    return k;
}

// Separable valid-mode filtering: output is (w - 2r) x (h - 2r).
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h,
                                 const std::vector<double>& k) {
    const int ow = w - 2 * kRadius;
    const int oh = h - 2 * kRadius;
    std::vector<double> tmp(static_cast<size_t>(ow) * static_cast<size_t>(h), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWindow; ++i)
                s += k[static_cast<size_t>(i)] *
                     img[static_cast<size_t>(y) * static_cast<size_t>(w) +
                         static_cast<size_t>(x + i)];
            tmp[static_cast<size_t>(y) * static_cast<size_t>(ow) + static_cast<size_t>(x)] = s;
        }
    std::vector<double> out(static_cast<size_t>(ow) * static_cast<size_t>(oh), 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWindow; ++i)
                s += k[static_cast<size_t>(i)] *
                     tmp[static_cast<size_t>(y + i) * static_cast<size_t>(ow) +
                         static_cast<size_t>(x)];
            out[static_cast<size_t>(y) * static_cast<size_t>(ow) + static_cast<size_t>(x)] = s;
        }
    return out;
}

} // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_size(b))
        throw DimensionMismatch("psnr: image sizes differ");
    if (a.data.empty())
        throw DimensionMismatch("psnr: empty images");
    double se = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data.size());
    if (mse < 1e-10)
        return 99.0;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_size(b))
        throw DimensionMismatch("ssim: image sizes differ");
    if (a.width < kWindow || a.height < kWindow)
        throw TooSmall("ssim: images smaller than the 11x11 window");
    const auto kernel = gaussian_kernel();
    const int w = a.width, h = a.height;
    const size_t n = static_cast<size_t>(w) * static_cast<size_t>(h);

    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (int py = 0; py < h; ++py)
            for (int px = 0; px < w; ++px) {
                const size_t i = static_cast<size_t>(py) * static_cast<size_t>(w) +
                                 static_cast<size_t>(px);
                const double va = a.at(px, py, c);
                const double vb = b.at(px, py, c);
                x[i] = va;
                y[i] = vb;
                xx[i] = va * va;
                yy[i] = vb * vb;
                xy[i] = va * vb;
            }
        const auto mx = filter_valid(x, w, h, kernel);
        const auto my = filter_valid(y, w, h, kernel);
        const auto mxx = filter_valid(xx, w, h, kernel);
        const auto myy = filter_valid(yy, w, h, kernel);
        const auto mxy = filter_valid(xy, w, h, kernel);
        double s = 0.0;
        for (size_t i = 0; i < mx.size(); ++i) {
            const double mu_x = mx[i], mu_y = my[i];
            const double var_x = mxx[i] - mu_x * mu_x;
            const double var_y = myy[i] - mu_y * mu_y;
            const double cov = mxy[i] - mu_x * mu_y;
            s += ((2.0 * mu_x * mu_y + kC1) * (2.0 * cov + kC2)) /
                 ((mu_x * mu_x + mu_y * mu_y + kC1) * (var_x + var_y + kC2));
        }
        total += s / static_cast<double>(mx.size());
    }
    return total / static_cast<double>(a.channels);
}

double render_loss(const ImageBuffer& pred, const ImageBuffer& gt, double beta1, double beta2) {
    if (!pred.same_size(gt))
        throw DimensionMismatch("render_loss: image sizes differ");
    double l1 = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i)
        l1 += std::abs(pred.data[i] - gt.data[i]);
    l1 /= static_cast<double>(pred.data.size());
    return beta1 * l1 + beta2 * (1.0 - ssim(pred, gt));
}

double stage2_loss(const ImageBuffer& pred_fine, const ImageBuffer& gt_fine,
                   const ImageBuffer& pred_high, const ImageBuffer& gt_high, double lambda1,
                   double lambda2) {
    return lambda1 * render_loss(pred_fine, gt_fine) + lambda2 * render_loss(pred_high, gt_high);
}

std::vector<double> nearest_distances(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    if (from.empty() || to.empty())
        throw EmptySet("chamfer: empty point set");
    KdTree<3> tree(to);
    std::vector<double> out(from.size());
    for (size_t i = 0; i < from.size(); ++i)
        out[i] = std::sqrt(tree.nearest(from[i]).squared_distance);
    return out;
}

ChamferResult chamfer_eval(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt) {
    const auto d_pg = nearest_distances(pred, gt);
    const auto d_gp = nearest_distances(gt, pred);
    double s_pg = 0.0, s_gp = 0.0;
    for (double d : d_pg)
        s_pg += d;
    for (double d : d_gp)
        s_gp += d;
    return {s_pg / static_cast<double>(d_pg.size()), s_gp / static_cast<double>(d_gp.size())};
}

} // namespace gsp
