// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "gsplane/core/image.hpp"

namespace gsp {

/// 10 log10(1 / MSE) over all pixels and channels, values assumed in [0,1].
/// Returns the 99 dB cap when MSE < 1e-10.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
/// dynamic range 1. Computed per channel over valid window positions, then
/// averaged. Throws TooSmall when min(width, height) < 11.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// beta1 * mean|pred-gt| + beta2 * (1 - ssim(pred, gt)).
double render_loss(const ImageBuffer& pred, const ImageBuffer& gt, double beta1 = 0.8,
                   double beta2 = 0.2);

/// lambda1 * render_loss(fine pair) + lambda2 * render_loss(high-res pair).
double stage2_loss(const ImageBuffer& pred_fine, const ImageBuffer& gt_fine,
                   const ImageBuffer& pred_high, const ImageBuffer& gt_high, double lambda1 = 0.5,
                   double lambda2 = 0.5);

struct ChamferResult {
    double pred_to_gt;
    double gt_to_pred;
};

/// Directed mean nearest-neighbor distances between 3-D point sets, meters.
ChamferResult chamfer_eval(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt);

/// Per-query nearest distances from each point of `from` to the set `to`;
/// building block for both chamfer directions.
std::vector<double> nearest_distances(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

} // namespace gsp
