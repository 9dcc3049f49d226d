// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/stage1/registration.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "gsplane/core/errors.hpp"
#include "gsplane/core/kdtree.hpp"
#include "gsplane/core/parallel.hpp"
#include "gsplane/metrics/metrics.hpp"

namespace gsp {

namespace {

constexpr double kCorrespondenceWeight = 0.25;
constexpr double kFixedPointTol = 1e-6;

Mat3 skew(const Vec3& d) {
    Mat3 m;
    m << 0.0, -d.z(), d.y(), d.z(), 0.0, -d.x(), -d.y(), d.x(), 0.0;
    return m;
}

struct PseudoHuber {
    double delta;
    double value(double x) const {
        const double r = x / delta;
        return delta * delta * (std::sqrt(1.0 + r * r) - 1.0);
    }
    double derivative(double x) const {
        const double r = x / delta;
        return x / std::sqrt(1.0 + r * r);
    }
};

// Bilinear sample with the interpolant's exact derivative.
bool sample_with_gradient(const ImageBuffer& img, double u, double v, Vec3& value, Vec3& du,
                          Vec3& dv) {
    const auto cell = bilinear_cell(img.width, img.height, u, v);
    if (!cell)
        return false;
    const int x0 = cell->x0, y0 = cell->y0;
    const double ax = cell->ax, ay = cell->ay;
    const Vec3 v00 = img.rgb(x0, y0);
    const Vec3 v10 = img.rgb(x0 + 1, y0);
    const Vec3 v01 = img.rgb(x0, y0 + 1);
    const Vec3 v11 = img.rgb(x0 + 1, y0 + 1);
    value = (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
    du = (1.0 - ay) * (v10 - v00) + ay * (v11 - v01);
    dv = (1.0 - ax) * (v01 - v00) + ax * (v11 - v10);
    return true;
}

} // namespace

void RegistrationConfig::validate() const {
    if (iterations < 1)
        throw BadConfig("registration: iterations must be >= 1");
    if (!(step_size > 0.0))
        throw BadConfig("registration: step_size must be positive");
    if (smoothness_weight < 0.0 || gamma < 0.0 || ray_weight < 0.0)
        throw BadConfig("registration: weights must be non-negative");
    if (!(huber_delta > 0.0) || !(occlusion_threshold > 0.0))
        throw BadConfig("registration: thresholds must be positive");
    if (scale_stride < 1 || scale_rounds < 1)
        throw BadConfig("registration: scale fit parameters out of range");
}

ColoredPointSet colored_point_set(const PointMap& map, const ImageBuffer& img,
                                  double color_weight, int source_view) {
    if (map.width != img.width || map.height != img.height)
        throw DimensionMismatch("colored_point_set: map and image sizes differ");
    ColoredPointSet set;
    set.source_view = source_view;
    set.points.reserve(map.valid_count());
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            if (!map.valid(x, y))
                continue;
            Eigen::Matrix<double, 6, 1> p;
            p.head<3>() = map.at(x, y);
            p.tail<3>() = color_weight * img.rgb(x, y);
            set.points.push_back(p);
        }
    return set;
}

Chamfer6 chamfer_6d(const ColoredPointSet& left, const ColoredPointSet& right) {
    if (left.points.empty() || right.points.empty())
        throw EmptySet("chamfer_6d: empty point set");
    const KdTree<6> tree_r(right.points);
    const KdTree<6> tree_l(left.points);
    double l2r = 0.0, r2l = 0.0;
    for (const auto& p : left.points)
        l2r += std::sqrt(tree_r.nearest(p).squared_distance);
    for (const auto& p : right.points)
        r2l += std::sqrt(tree_l.nearest(p).squared_distance);
    l2r /= static_cast<double>(left.points.size());
    r2l /= static_cast<double>(right.points.size());
    return {l2r, r2l, l2r + r2l};
}

namespace {

struct AffineSystem {
    Eigen::Matrix<double, 6, 6> normal = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();

    void add(const Eigen::Matrix<double, 3, 6>& a, const Vec3& b, double w) {
        normal += w * a.transpose() * a;
        rhs += w * a.transpose() * b;
    }
};

void add_ray_rows(AffineSystem& sys, const PointMap& map, const CameraModel& cam, int stride) {
    const Vec3 c = cam.center();
    for (int y = 0; y < map.height; y += stride)
        for (int x = 0; x < map.width; x += stride) {
            if (!map.valid(x, y))
                continue;
            const Vec3 a = map.at(x, y);
            const Mat3 s = skew(cam.ray_direction(x, y));
            Eigen::Matrix<double, 3, 6> rows;
            rows.block<3, 3>(0, 0) = s * a.asDiagonal();
            rows.block<3, 3>(0, 3) = s;
            sys.add(rows, s * c, 1.0);
        }
}

// Pairs current-estimate metric points of `from` with bilinear samples of the
// other canonical map at their projection; rows tie both maps to one affine.
size_t add_correspondence_rows(AffineSystem* sys, const PointMap& from, const PointMap& to,
                               const CameraModel& cam_to, const Vec3& scale, const Vec3& shift,
                               int stride) {
    size_t matched = 0;
    for (int y = 0; y < from.height; y += stride)
        for (int x = 0; x < from.width; x += stride) {
            if (!from.valid(x, y))
                continue;
            const Vec3 a = from.at(x, y);
            const Vec3 world = scale.cwiseProduct(a) + shift;
            const Projection proj = project(world, cam_to);
            if (!(proj.depth > 0.0))
                continue;
            const auto b = bilinear_point(to, proj.pixel.x(), proj.pixel.y());
            if (!b)
                continue;
            ++matched;
            if (sys) {
                Eigen::Matrix<double, 3, 6> rows;
                rows.block<3, 3>(0, 0) = a.asDiagonal();
                rows.block<3, 3>(0, 3) = Mat3::Identity();
                sys->add(rows, scale.cwiseProduct(*b) + shift, kCorrespondenceWeight);
            }
        }
    return matched;
}

Eigen::Matrix<double, 6, 1> solve_affine(const AffineSystem& sys) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(sys.normal);
    const auto& ev = eig.eigenvalues();
    if (!(ev.maxCoeff() > 0.0) || ev.minCoeff() < 1e-12 * ev.maxCoeff())
        throw DegenerateGeometry("estimate_scale: rank-deficient least-squares system");
    return sys.normal.ldlt().solve(sys.rhs);
}

} // namespace

AffineInit estimate_affine_init(const PointMap& map_left, const PointMap& map_right,
                                const CameraModel& cam_left, const CameraModel& cam_right,
                                const RegistrationConfig& cfg) {
    cfg.validate();
    if (map_left.valid_count() == 0 || map_right.valid_count() == 0)
        throw InsufficientOverlap("estimate_scale: empty point map");

    AffineSystem ray_sys;
    add_ray_rows(ray_sys, map_left, cam_left, cfg.scale_stride);
    add_ray_rows(ray_sys, map_right, cam_right, cfg.scale_stride);

    Eigen::Matrix<double, 6, 1> xi = solve_affine(ray_sys);
    Vec3 scale = xi.head<3>();
    Vec3 shift = xi.tail<3>();
    if (!(scale.minCoeff() > 0.0))
        throw DegenerateGeometry("estimate_scale: non-positive scale from ray fit");

    // Mutual-visibility requirement, checked at full resolution.
    const size_t n_l2r =
        add_correspondence_rows(nullptr, map_left, map_right, cam_right, scale, shift, 1);
    const size_t n_r2l =
        add_correspondence_rows(nullptr, map_right, map_left, cam_left, scale, shift, 1);
    if (std::min(n_l2r, n_r2l) < 100)
        throw InsufficientOverlap("estimate_scale: fewer than 100 mutually visible pixels");

    int rounds = 0;
    for (; rounds < cfg.scale_rounds; ++rounds) {
        AffineSystem sys = ray_sys;
        add_correspondence_rows(&sys, map_left, map_right, cam_right, scale, shift,
                                cfg.scale_stride);
        add_correspondence_rows(&sys, map_right, map_left, cam_left, scale, shift,
                                cfg.scale_stride);
        xi = solve_affine(sys);
        const Vec3 new_scale = xi.head<3>();
        const Vec3 new_shift = xi.tail<3>();
        const double change =
            std::max((new_scale - scale).cwiseQuotient(scale.cwiseAbs()).cwiseAbs().maxCoeff(),
                     (new_shift - shift).norm() / (1.0 + shift.norm()));
        scale = new_scale;
        shift = new_shift;
        if (!(scale.minCoeff() > 0.0))
            throw DegenerateGeometry("estimate_scale: non-positive scale");
        if (change < kFixedPointTol)
            break;
    }

    AffineInit out;
    out.scale = scale;
    out.shift = shift;
    out.overlap = std::min(n_l2r, n_r2l);
    out.rounds = rounds + 1;
    return out;
}

Vec3 estimate_scale(const PointMap& map_left, const PointMap& map_right,
                    const CameraModel& cam_left, const CameraModel& cam_right,
                    const RegistrationConfig& cfg) {
    return estimate_affine_init(map_left, map_right, cam_left, cam_right, cfg).scale;
}

TranslationObjective::TranslationObjective(const PointMap& map_left, const PointMap& map_right,
                                           const ImageBuffer& img_left,
                                           const ImageBuffer& img_right,
                                           const CameraModel& cam_left,
                                           const CameraModel& cam_right,
                                           const RegistrationConfig& cfg)
    : cfg_(cfg), width_(map_left.width), height_(map_left.height) {
    if (map_left.width != img_left.width || map_left.height != img_left.height ||
        map_right.width != img_right.width || map_right.height != img_right.height)
        throw DimensionMismatch("translation: maps and images must share dimensions");
    if (map_left.width != map_right.width || map_left.height != map_right.height)
        throw DimensionMismatch("translation: the two views must share dimensions");
    views_[0] = {&map_left, &img_left, &cam_left, {}, {}};
    views_[1] = {&map_right, &img_right, &cam_right, {}, {}};
    for (View& view : views_) {
        const size_t n = view.map->points.size();
        view.ray_dir.resize(n);
        view.mask.assign(view.map->validity.begin(), view.map->validity.end());
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x)
                view.ray_dir[view.map->index(x, y)] = view.cam->ray_direction(x, y);
    }
}

bool TranslationObjective::pixel_valid(int view, int x, int y) const {
    return views_[view].mask[views_[view].map->index(x, y)] != 0;
}

void TranslationObjective::update_masks(const Field& t_left, const Field& t_right) {
    const Field* fields[2] = {&t_left, &t_right};
    for (int i = 0; i < 2; ++i) {
        const View& self = views_[i];
        const View& other = views_[1 - i];
        const Field& t_self = *fields[i];
        const Field& t_other = *fields[1 - i];

        PointMap other_current(width_, height_, PointSpace::Metric);
        other_current.validity = other.map->validity;
        for (size_t k = 0; k < other_current.points.size(); ++k)
            other_current.points[k] = other.map->points[k] + t_other[k];

        View& mut = views_[i];
        for (size_t k = 0; k < mut.mask.size(); ++k)
            mut.mask[k] = self.map->validity[k];
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x) {
                const size_t k = self.map->index(x, y);
                if (!mut.mask[k])
                    continue;
                const Vec3 world = self.map->points[k] + t_self[k];
                const Projection proj = project(world, *other.cam);
                if (!(proj.depth > 0.0))
                    continue;
                const auto sampled =
                    bilinear_point(other_current, proj.pixel.x(), proj.pixel.y());
                if (!sampled)
                    continue;
                const double z_other = other.cam->to_camera(*sampled).z();
                if (std::abs(proj.depth - z_other) > cfg_.occlusion_threshold)
                    mut.mask[k] = 0; // occluded in the other view
            }
    }
}

double TranslationObjective::view_term(int i, const Field& t_self, const Field& t_other,
                                       Field* grad) const {
    (void)t_other;
    const View& self = views_[i];
    const View& other = views_[1 - i];
    const PseudoHuber huber{cfg_.huber_delta};
    const Vec3 center = self.cam->center();
    const Mat3& rot_other = other.cam->rotation;

    std::vector<double> row_sum(static_cast<size_t>(height_), 0.0);
    parallel_for(0, height_, [&](int y) {
        double acc = 0.0;
        for (int x = 0; x < width_; ++x) {
            const size_t k = self.map->index(x, y);
            if (!self.map->validity[k])
                continue;
            const Vec3 world = self.map->points[k] + t_self[k];
            Vec3 g = Vec3::Zero();

            // Own-ray consistency: registered points stay pixel-aligned.
            const Vec3& d = self.ray_dir[k];
            const Vec3 rel = world - center;
            const Vec3 off_ray = rel - rel.dot(d) * d;
            acc += cfg_.ray_weight * off_ray.squaredNorm();
            if (grad)
                g += 2.0 * cfg_.ray_weight * off_ray;

            if (self.mask[k]) {
                const Vec3 p_cam = other.cam->to_camera(world);
                if (p_cam.z() > 0.0) {
                    const double inv_z = 1.0 / p_cam.z();
                    const double u = other.cam->fx * p_cam.x() * inv_z + other.cam->cx;
                    const double v = other.cam->fy * p_cam.y() * inv_z + other.cam->cy;
                    Vec3 sample, su, sv;
                    if (sample_with_gradient(*other.image, u, v, sample, su, sv)) {
                        const Vec3 own = self.image->rgb(x, y);
                        Eigen::Matrix<double, 2, 3> jac;
                        jac << other.cam->fx * inv_z, 0.0,
                            -other.cam->fx * p_cam.x() * inv_z * inv_z, 0.0,
                            other.cam->fy * inv_z, -other.cam->fy * p_cam.y() * inv_z * inv_z;
                        const Eigen::Matrix<double, 2, 3> jw = jac * rot_other;
                        for (int c = 0; c < 3; ++c) {
                            const double r = own[c] - sample[c];
                            acc += huber.value(r);
                            if (grad) {
                                const Vec2 img_grad(su[c], sv[c]);
                                g -= huber.derivative(r) * (jw.transpose() * img_grad);
                            }
                        }
                    }
                }
            }
            if (grad)
                (*grad)[k] += g;
        }
        row_sum[static_cast<size_t>(y)] = acc;
    });
    double total = 0.0;
    for (double v : row_sum)
        total += v;
    return total;
}

double TranslationObjective::smoothness_term(const Field& t, Field* grad) const {
    double e = 0.0;
    const double w = cfg_.smoothness_weight;
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) {
            const size_t k = static_cast<size_t>(y) * static_cast<size_t>(width_) +
                             static_cast<size_t>(x);
            if (x + 1 < width_) {
                const Vec3 d = t[k] - t[k + 1];
                e += w * d.squaredNorm();
                if (grad) {
                    (*grad)[k] += 2.0 * w * d;
                    (*grad)[k + 1] -= 2.0 * w * d;
                }
            }
            if (y + 1 < height_) {
                const Vec3 d = t[k] - t[k + static_cast<size_t>(width_)];
                e += w * d.squaredNorm();
                if (grad) {
                    (*grad)[k] += 2.0 * w * d;
                    (*grad)[k + static_cast<size_t>(width_)] -= 2.0 * w * d;
                }
            }
        }
    return e;
}

double TranslationObjective::evaluate(const Field& t_left, const Field& t_right) const {
    double e = view_term(0, t_left, t_right, nullptr) + view_term(1, t_right, t_left, nullptr);
    e += smoothness_term(t_left, nullptr) + smoothness_term(t_right, nullptr);
    return e;
}

double TranslationObjective::gradient(const Field& t_left, const Field& t_right, Field& grad_left,
                                      Field& grad_right) const {
    grad_left.assign(t_left.size(), Vec3::Zero());
    grad_right.assign(t_right.size(), Vec3::Zero());
    double e = view_term(0, t_left, t_right, &grad_left) +
               view_term(1, t_right, t_left, &grad_right);
    e += smoothness_term(t_left, &grad_left) + smoothness_term(t_right, &grad_right);
    return e;
}

TranslationResult iterative_translation(const PointMap& scaled_left,
                                        const PointMap& scaled_right, const ImageBuffer& img_left,
                                        const ImageBuffer& img_right, const CameraModel& cam_left,
                                        const CameraModel& cam_right,
                                        const RegistrationConfig& cfg) {
    cfg.validate();
    TranslationObjective obj(scaled_left, scaled_right, img_left, img_right, cam_left, cam_right,
                             cfg);
    const size_t n = scaled_left.points.size();
    TranslationResult res;
    res.t_left.assign(n, Vec3::Zero());
    res.t_right.assign(n, Vec3::Zero());
    res.accepted_steps = 0;

    obj.update_masks(res.t_left, res.t_right);
    res.initial_objective = obj.evaluate(res.t_left, res.t_right);
    if (!std::isfinite(res.initial_objective))
        throw NonFiniteResidual("iterative_translation: non-finite objective");
    double current = res.initial_objective;

    TranslationObjective::Field grad_l, grad_r, trial_l(n), trial_r(n);
    for (int it = 0; it < cfg.iterations; ++it) {
        obj.update_masks(res.t_left, res.t_right);
        const double e0 = obj.gradient(res.t_left, res.t_right, grad_l, grad_r);
        if (!std::isfinite(e0))
            throw NonFiniteResidual("iterative_translation: non-finite objective");

        double step = cfg.step_size;
        bool accepted = false;
        for (int bt = 0; bt <= 8; ++bt) {
            for (size_t k = 0; k < n; ++k) {
                trial_l[k] = res.t_left[k] - step * grad_l[k];
                trial_r[k] = res.t_right[k] - step * grad_r[k];
            }
            const double e_trial = obj.evaluate(trial_l, trial_r);
            if (!std::isfinite(e_trial))
                throw NonFiniteResidual("iterative_translation: non-finite objective");
            if (e_trial < e0) {
                res.t_left.swap(trial_l);
                res.t_right.swap(trial_r);
                current = e_trial;
                accepted = true;
                ++res.accepted_steps;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break; // stuck: bail out rather than looping on rejected steps
    }
    res.final_objective = current;
    return res;
}

GaussianPlane auxiliary_gaussian_plane(const PointMap& metric_map, const ImageBuffer& img,
                                       const CameraModel& cam, double pixel_footprint) {
    if (metric_map.width != img.width || metric_map.height != img.height)
        throw DimensionMismatch("auxiliary_gaussian_plane: map and image sizes differ");
    const double focal = 0.5 * (cam.fx + cam.fy) *
                         (static_cast<double>(metric_map.width) / cam.width);
    GaussianPlane plane;
    plane.primitives.reserve(metric_map.valid_count());
    for (int y = 0; y < metric_map.height; ++y)
        for (int x = 0; x < metric_map.width; ++x) {
            if (!metric_map.valid(x, y))
                continue;
            const Vec3& p = metric_map.at(x, y);
            const double z = cam.to_camera(p).z();
            if (!(z > 0.0))
                continue;
            Gaussian g;
            g.position = p;
            g.color = img.rgb(x, y);
            g.rotation = Quat::Identity();
            g.scale = Vec3::Constant(pixel_footprint * z / focal);
            g.opacity = 0.95;
            plane.primitives.push_back(g);
        }
    return plane;
}

double stage1_objective(const ImageBuffer& render, const ImageBuffer& gt,
                        const ColoredPointSet& left, const ColoredPointSet& right, double gamma) {
    const double render_term = render_loss(render, gt);
    if (gamma == 0.0)
        return render_term;
    return render_term + gamma * chamfer_6d(left, right).total;
}

RegistrationResult register_views(const PointMap& map_left, const PointMap& map_right,
                                  const ImageBuffer& img_left, const ImageBuffer& img_right,
                                  const CameraModel& cam_left, const CameraModel& cam_right,
                                  const RegistrationConfig& cfg) {
    cfg.validate();
    RegistrationResult res;
    res.init = estimate_affine_init(map_left, map_right, cam_left, cam_right, cfg);

    AffineTransform pre_l(map_left.width, map_left.height);
    pre_l.scale = res.init.scale;
    for (auto& t : pre_l.translation)
        t = res.init.shift;
    AffineTransform pre_r(map_right.width, map_right.height);
    pre_r.scale = res.init.scale;
    for (auto& t : pre_r.translation)
        t = res.init.shift;

    const PointMap scaled_l = apply_affine(map_left, pre_l);
    const PointMap scaled_r = apply_affine(map_right, pre_r);

    res.refinement = iterative_translation(scaled_l, scaled_r, img_left, img_right, cam_left,
                                           cam_right, cfg);

    res.transform_left = std::move(pre_l);
    res.transform_right = std::move(pre_r);
    for (size_t k = 0; k < res.transform_left.translation.size(); ++k)
        res.transform_left.translation[k] += res.refinement.t_left[k];
    for (size_t k = 0; k < res.transform_right.translation.size(); ++k)
        res.transform_right.translation[k] += res.refinement.t_right[k];

    res.metric_left = apply_affine(map_left, res.transform_left);
    res.metric_right = apply_affine(map_right, res.transform_right);
    return res;
}

} // namespace gsp
