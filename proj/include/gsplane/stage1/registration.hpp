// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gsplane/core/camera.hpp"
#include "gsplane/core/image.hpp"
#include "gsplane/core/pointmap.hpp"
#include "gsplane/splat/gaussian_plane.hpp"

namespace gsp {

struct RegistrationConfig {
    int iterations = 30;              // translation refinement steps
    double step_size = 0.05;          // meters per unit gradient before backtracking
    double smoothness_weight = 0.1;   // 4-neighbor Laplacian regularizer
    double gamma = 0.5;               // chamfer weight in the stage-1 objective
    int coarse_width = 512;
    int coarse_height = 288;

    double huber_delta = 0.05;        // intensity units (smooth Huber)
    double ray_weight = 4.0;          // own-ray consistency weight
    double occlusion_threshold = 0.05; // meters of cross-view depth disagreement
    double color_weight = 1.0;        // meters per unit color in 6-D chamfer sets
    int scale_rounds = 10;            // correspondence/least-squares outer rounds
    int scale_stride = 2;             // pixel subsampling for the scale fit

    void validate() const;
};

/// 6-D points: xyz in meters plus rgb scaled by color_weight.
struct ColoredPointSet {
    std::vector<Eigen::Matrix<double, 6, 1>> points;
    int source_view = -1;
};

ColoredPointSet colored_point_set(const PointMap& map, const ImageBuffer& img,
                                  double color_weight = 1.0, int source_view = -1);

struct Chamfer6 {
    double l2r;
    double r2l;
    double total; // l2r + r2l
};

/// Mean nearest-neighbor distance over 6-D elements, both directions.
/// Exact: the k-d tree reproduces brute-force distances bit for bit.
Chamfer6 chamfer_6d(const ColoredPointSet& left, const ColoredPointSet& right);

/// Global per-axis scale and global shift fitted to both canonical maps.
/// Anchored on the calibrated rays of each pixel (the camera baseline is what
/// makes absolute scale observable), then refined over cross-view
/// correspondences found by projecting the current metric points into the
/// other view and bilinear-sampling its map.
struct AffineInit {
    Vec3 scale;
    Vec3 shift;
    size_t overlap; // cross-view correspondences found at the fitted transform
    int rounds;
};

AffineInit estimate_affine_init(const PointMap& map_left, const PointMap& map_right,
                                const CameraModel& cam_left, const CameraModel& cam_right,
                                const RegistrationConfig& cfg = {});

/// Spec'd entry point: the scale part of estimate_affine_init.
Vec3 estimate_scale(const PointMap& map_left, const PointMap& map_right,
                    const CameraModel& cam_left, const CameraModel& cam_right,
                    const RegistrationConfig& cfg = {});

/// Dense translation objective over both views' fields:
///   E = sum_i sum_p [ mask * huber(I_i(p) - Query(I_j, Proj(X_i(p)+T_i(p))))
///                     + ray_weight * dist^2(X_i(p)+T_i(p), ray_i(p)) ]
///       + smoothness_weight * |grad T|^2
/// Occlusion masks (cross-view depth disagreement) are frozen between calls
/// to update_masks so the objective is a well-defined function of T during
/// line search and gradient checks.
class TranslationObjective {
public:
    using Field = std::vector<Vec3>; // row-major W*H

    TranslationObjective(const PointMap& map_left, const PointMap& map_right,
                         const ImageBuffer& img_left, const ImageBuffer& img_right,
                         const CameraModel& cam_left, const CameraModel& cam_right,
                         const RegistrationConfig& cfg);

    void update_masks(const Field& t_left, const Field& t_right);
    double evaluate(const Field& t_left, const Field& t_right) const;
    /// Returns E and fills both gradient fields.
    double gradient(const Field& t_left, const Field& t_right, Field& grad_left,
                    Field& grad_right) const;

    int width() const { return width_; }
    int height() const { return height_; }
    bool pixel_valid(int view, int x, int y) const;

private:
    struct View {
        const PointMap* map;
        const ImageBuffer* image;
        const CameraModel* cam;
        std::vector<Vec3> ray_dir;     // per pixel, unit, world frame
        std::vector<uint8_t> mask;     // validity x frozen occlusion
    };

    double view_term(int i, const Field& t_self, const Field& t_other, Field* grad) const;
    double smoothness_term(const Field& t, Field* grad) const;

    RegistrationConfig cfg_;
    int width_, height_;
    View views_[2];
};

struct TranslationResult {
    std::vector<Vec3> t_left;
    std::vector<Vec3> t_right;
    double initial_objective;
    double final_objective;
    int accepted_steps;
};

/// Gradient descent with backtracking (halve up to 8 times, accept only on
/// decrease); the objective is non-increasing across accepted steps.
TranslationResult iterative_translation(const PointMap& scaled_left,
                                        const PointMap& scaled_right, const ImageBuffer& img_left,
                                        const ImageBuffer& img_right, const CameraModel& cam_left,
                                        const CameraModel& cam_right,
                                        const RegistrationConfig& cfg);

/// Source-view Gaussian plane: one primitive per valid pixel, color from the
/// image, identity rotation, isotropic pixel-footprint scale, opacity 0.95.
GaussianPlane auxiliary_gaussian_plane(const PointMap& metric_map, const ImageBuffer& img,
                                       const CameraModel& cam, double pixel_footprint = 1.0);

/// render_loss(render, gt) + gamma * chamfer_6d(left, right).total
double stage1_objective(const ImageBuffer& render, const ImageBuffer& gt,
                        const ColoredPointSet& left, const ColoredPointSet& right, double gamma);

struct RegistrationResult {
    AffineTransform transform_left;   // metric = scale (.) canonical + translation
    AffineTransform transform_right;
    PointMap metric_left;
    PointMap metric_right;
    AffineInit init;
    TranslationResult refinement;
};

/// Full stage-1 registration: scale, then translation, then apply.
RegistrationResult register_views(const PointMap& map_left, const PointMap& map_right,
                                  const ImageBuffer& img_left, const ImageBuffer& img_right,
                                  const CameraModel& cam_left, const CameraModel& cam_right,
                                  const RegistrationConfig& cfg = {});

} // namespace gsp
