// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#include "gsplane/synth/scene.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "gsplane/core/errors.hpp"
#include "gsplane/core/parallel.hpp"

namespace gsp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRayMin = 1e-6;

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double hash_unit(uint64_t seed, int64_t ix, int64_t iy, int64_t iz) {
    uint64_t h = splitmix64(seed ^ splitmix64(static_cast<uint64_t>(ix) ^
                                              splitmix64(static_cast<uint64_t>(iy) ^
                                                         splitmix64(static_cast<uint64_t>(iz)))));
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double smooth5(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }

// Seeded lattice value noise with quintic interpolation; C2-smooth, so
// bilinear resampling of rendered texture stays well behaved.
double value_noise(uint64_t seed, const Vec3& p) {
    const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
    const int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy),
                  iz = static_cast<int64_t>(fz);
    const double tx = smooth5(p.x() - fx), ty = smooth5(p.y() - fy), tz = smooth5(p.z() - fz);
    double c[2][2][2];
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
                c[dz][dy][dx] = hash_unit(seed, ix + dx, iy + dy, iz + dz);
    const double x00 = c[0][0][0] + (c[0][0][1] - c[0][0][0]) * tx;
    const double x10 = c[0][1][0] + (c[0][1][1] - c[0][1][0]) * tx;
    const double x01 = c[1][0][0] + (c[1][0][1] - c[1][0][0]) * tx;
    const double x11 = c[1][1][0] + (c[1][1][1] - c[1][1][0]) * tx;
    const double y0 = x00 + (x10 - x00) * ty;
    const double y1 = x01 + (x11 - x01) * ty;
    return y0 + (y1 - y0) * tz;
}

Vec3 texture_albedo(const TextureSpec& tex, uint64_t seed, const Vec3& p) {
    if (tex.type == TextureSpec::Type::Checker) {
        const int64_t sx = static_cast<int64_t>(std::floor(p.x() / tex.cell));
        const int64_t sy = static_cast<int64_t>(std::floor(p.y() / tex.cell));
        const int64_t sz = static_cast<int64_t>(std::floor(p.z() / tex.cell));
        return ((sx + sy + sz) & 1) ? tex.color_b : tex.color_a;
    }
    const double n0 = value_noise(seed, p / tex.cell);
    const double n1 = value_noise(seed ^ 0x5bf0'3635ULL, p * (2.0 / tex.cell) + Vec3(17.3, 9.1, 4.7));
    const double t = 0.7 * n0 + 0.3 * n1;
    return tex.color_a + (tex.color_b - tex.color_a) * t;
}

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    Vec3 normal = Vec3::UnitZ();
    const PrimitiveSpec* prim = nullptr;
};

bool intersect_sphere(const PrimitiveSpec& s, const Vec3& o, const Vec3& d, Hit& hit) {
    const Vec3 oc = o - s.center;
    const double b = oc.dot(d);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0.0)
        return false;
    const double sq = std::sqrt(disc);
    double t = -b - sq;
    if (t <= kRayMin)
        t = -b + sq;
    if (t <= kRayMin || t >= hit.t)
        return false;
    hit.t = t;
    hit.normal = (o + t * d - s.center).normalized();
    hit.prim = &s;
    return true;
}

bool intersect_box(const PrimitiveSpec& box, const Vec3& o, const Vec3& d, Hit& hit) {
    const double yaw = box.yaw_deg * kPi / 180.0;
    const double cs = std::cos(yaw), sn = std::sin(yaw);
    Mat3 to_box;
    to_box << cs, sn, 0.0, -sn, cs, 0.0, 0.0, 0.0, 1.0; // world -> box
    const Vec3 ob = to_box * (o - box.center);
    const Vec3 db = to_box * d;

    double t0 = kRayMin, t1 = hit.t;
    int axis0 = -1;
    for (int a = 0; a < 3; ++a) {
        const double e = box.half_extents[a];
        if (std::abs(db[a]) < 1e-12) {
            if (ob[a] < -e || ob[a] > e)
                return false;
            continue;
        }
        double near = (-e - ob[a]) / db[a];
        double far = (e - ob[a]) / db[a];
        if (near > far)
            std::swap(near, far);
        if (near > t0) {
            t0 = near;
            axis0 = a;
        }
        t1 = std::min(t1, far);
        if (t0 > t1)
            return false;
    }
    if (axis0 < 0 || t0 <= kRayMin || t0 >= hit.t)
        return false; // origin inside the box: treat as a miss
    hit.t = t0;
    Vec3 n_box = Vec3::Zero();
    n_box[axis0] = db[axis0] > 0.0 ? -1.0 : 1.0;
    hit.normal = to_box.transpose() * n_box;
    hit.prim = &box;
    return true;
}

bool intersect_ground(const PrimitiveSpec& g, const Vec3& o, const Vec3& d, Hit& hit) {
    if (std::abs(d.z()) < 1e-12)
        return false;
    const double t = (g.center.z() - o.z()) / d.z();
    if (t <= kRayMin || t >= hit.t)
        return false;
    hit.t = t;
    hit.normal = Vec3(0.0, 0.0, o.z() > g.center.z() ? 1.0 : -1.0);
    hit.prim = &g;
    return true;
}

TextureSpec texture_from_json(const nlohmann::json& j) {
    TextureSpec tex;
    const std::string type = j.value("type", "noise");
    tex.type = type == "checker" ? TextureSpec::Type::Checker : TextureSpec::Type::Noise;
    tex.cell = j.value("cell", tex.cell);
    if (j.contains("color_a")) {
        const auto a = j.at("color_a").get<std::vector<double>>();
        tex.color_a = Vec3(a.at(0), a.at(1), a.at(2));
    }
    if (j.contains("color_b")) {
        const auto b = j.at("color_b").get<std::vector<double>>();
        tex.color_b = Vec3(b.at(0), b.at(1), b.at(2));
    }
    return tex;
}

nlohmann::json texture_to_json(const TextureSpec& tex) {
    nlohmann::json j;
    j["type"] = tex.type == TextureSpec::Type::Checker ? "checker" : "noise";
    j["cell"] = tex.cell;
    j["color_a"] = {tex.color_a.x(), tex.color_a.y(), tex.color_a.z()};
    j["color_b"] = {tex.color_b.x(), tex.color_b.y(), tex.color_b.z()};
    return j;
}

} // namespace

void SceneSpec::validate() const {
    if (primitives.empty())
        throw BadConfig("scene: needs at least one primitive");
    for (const auto& p : primitives) {
        if (p.kind == PrimitiveSpec::Kind::Sphere && !(p.radius > 0.0))
            throw BadConfig("scene: sphere radius must be positive");
        if (p.kind == PrimitiveSpec::Kind::Box && !(p.half_extents.minCoeff() > 0.0))
            throw BadConfig("scene: box extents must be positive");
        if (!(p.texture.cell > 0.0))
            throw BadConfig("scene: texture cell must be positive");
    }
    if (light.direction.norm() < 1e-12)
        throw BadConfig("scene: light direction is zero");
    if (light.ambient < 0.0 || light.ambient > 1.0)
        throw BadConfig("scene: ambient must lie in [0,1]");
}

SceneSpec default_scene(uint64_t seed) {
    SceneSpec spec;
    spec.seed = seed;
    auto unit = [&](uint64_t salt) { return hash_unit(seed, static_cast<int64_t>(salt), 0, 0); };

    PrimitiveSpec sphere;
    sphere.kind = PrimitiveSpec::Kind::Sphere;
    sphere.center = Vec3(-0.25 + 0.5 * unit(1), -0.2 + 0.4 * unit(2), 0.85 + 0.2 * unit(3));
    sphere.radius = 0.42 + 0.12 * unit(4);
    sphere.texture.type = TextureSpec::Type::Noise;
    sphere.texture.cell = 0.22 + 0.08 * unit(5);
    sphere.texture.color_a = Vec3(0.85, 0.5 + 0.2 * unit(6), 0.25);
    sphere.texture.color_b = Vec3(0.12, 0.2, 0.55 + 0.2 * unit(7));

    PrimitiveSpec box;
    box.kind = PrimitiveSpec::Kind::Box;
    box.center = Vec3(0.55 + 0.25 * unit(8), 0.15 + 0.3 * unit(9), 0.35);
    box.half_extents = Vec3(0.22, 0.28, 0.35);
    box.yaw_deg = 60.0 * unit(10) - 30.0;
    box.texture.type = TextureSpec::Type::Noise;
    box.texture.cell = 0.16 + 0.1 * unit(11);
    box.texture.color_a = Vec3(0.2, 0.65, 0.3 + 0.2 * unit(12));
    box.texture.color_b = Vec3(0.75, 0.7, 0.2);

    PrimitiveSpec ground;
    ground.kind = PrimitiveSpec::Kind::Ground;
    ground.center = Vec3(0.0, 0.0, 0.0);
    ground.texture.type = TextureSpec::Type::Noise;
    ground.texture.cell = 0.35 + 0.1 * unit(13);
    ground.texture.color_a = Vec3(0.45, 0.4, 0.35);
    ground.texture.color_b = Vec3(0.75, 0.72, 0.6);

    spec.primitives = {sphere, box, ground};
    spec.light.direction = Vec3(-0.35 + 0.2 * unit(14), -0.3 + 0.2 * unit(15), -1.0);
    spec.light.ambient = 0.35;
    return spec;
}

RenderedView raycast_render(const SceneSpec& scene, const CameraModel& cam) {
    scene.validate();
    RenderedView out;
    out.image = ImageBuffer(cam.width, cam.height, 3);
    out.depth = DepthMap(cam.width, cam.height);
    out.points = PointMap(cam.width, cam.height, PointSpace::Metric);

    const Vec3 origin = cam.center();
    const Vec3 light = -scene.light.direction.normalized();
    const double ambient = scene.light.ambient;

    parallel_for(0, cam.height, [&](int y) {
        for (int x = 0; x < cam.width; ++x) {
            const Vec3 dir = cam.ray_direction(static_cast<double>(x), static_cast<double>(y));
            Hit hit;
            for (const auto& prim : scene.primitives) {
                switch (prim.kind) {
                case PrimitiveSpec::Kind::Sphere:
                    intersect_sphere(prim, origin, dir, hit);
                    break;
                case PrimitiveSpec::Kind::Box:
                    intersect_box(prim, origin, dir, hit);
                    break;
                case PrimitiveSpec::Kind::Ground:
                    intersect_ground(prim, origin, dir, hit);
                    break;
                }
            }
            if (!hit.prim)
                continue;
            const Vec3 p = origin + hit.t * dir;
            const double depth = cam.to_camera(p).z();
            if (!(depth > 0.0))
                continue;
            const Vec3 albedo = texture_albedo(hit.prim->texture, scene.seed, p);
            const double diffuse = std::max(0.0, hit.normal.dot(light));
            out.image.set_rgb(x, y, albedo * (ambient + (1.0 - ambient) * diffuse));
            out.depth.set(x, y, depth, true);
            out.points.at(x, y) = p;
            out.points.set_valid(x, y, true);
        }
    });
    return out;
}

void CorruptionSpec::validate() const {
    if (!(true_scale.minCoeff() > 0.0))
        throw BadConfig("corruption: true_scale must be positive");
    if (smooth_warp_amplitude < 0.0 || noise_sigma < 0.0)
        throw BadConfig("corruption: amplitudes must be non-negative");
    if (!(smooth_warp_wavelength > 0.0))
        throw BadConfig("corruption: wavelength must be positive");
}

namespace {

struct WarpField {
    double amplitude;
    double wavelength;
    double phase_u[3];
    double phase_v[3];

    Vec3 at(int u, int v) const {
        Vec3 w;
        for (int a = 0; a < 3; ++a)
            w[a] = amplitude * std::sin(2.0 * kPi * u / wavelength + phase_u[a]) *
                   std::sin(2.0 * kPi * v / wavelength + phase_v[a]);
        return w;
    }
};

WarpField make_warp(const CorruptionSpec& spec, int view) {
    WarpField w;
    w.amplitude = spec.smooth_warp_amplitude;
    w.wavelength = spec.smooth_warp_wavelength;
    for (int a = 0; a < 3; ++a) {
        w.phase_u[a] = 2.0 * kPi * hash_unit(spec.seed, view, a, 0);
        w.phase_v[a] = 2.0 * kPi * hash_unit(spec.seed, view, a, 1);
    }
    return w;
}

std::vector<Vec3> make_noise(const CorruptionSpec& spec, int view, size_t n) {
    std::vector<Vec3> noise(n, Vec3::Zero());
    if (spec.noise_sigma > 0.0) {
        std::mt19937_64 rng(splitmix64(spec.seed ^ (0xA5A5ULL + static_cast<uint64_t>(view))));
        std::normal_distribution<double> gauss(0.0, spec.noise_sigma);
        for (auto& v : noise)
            v = Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    return noise;
}

// Corruption before normalization; the undoing translation is
// offset + warp + noise per pixel (plus the normalization shift added later).
PointMap corrupt_raw(const PointMap& gt, const CorruptionSpec& spec, const WarpField& warp,
                     const std::vector<Vec3>& noise, AffineTransform& undo) {
    PointMap raw(gt.width, gt.height, PointSpace::Canonical);
    raw.validity = gt.validity;
    undo = AffineTransform(gt.width, gt.height);
    for (int v = 0; v < gt.height; ++v)
        for (int u = 0; u < gt.width; ++u) {
            const size_t i = gt.index(u, v);
            const Vec3 shift = spec.true_offset + warp.at(u, v) + noise[i];
            undo.translation[i] = shift;
            if (!gt.validity[i])
                continue;
            raw.points[i] = (gt.points[i] - shift).cwiseQuotient(spec.true_scale);
        }
    return raw;
}

void minmax_over(const PointMap& map, Vec3& lo, Vec3& hi) {
    for (size_t i = 0; i < map.points.size(); ++i) {
        if (!map.validity[i])
            continue;
        lo = lo.cwiseMin(map.points[i]);
        hi = hi.cwiseMax(map.points[i]);
    }
}

CorruptedPointMap normalize_raw(PointMap raw, AffineTransform undo, const CorruptionSpec& spec,
                                const Vec3& lo, const Vec3& range) {
    for (size_t i = 0; i < raw.points.size(); ++i)
        if (raw.validity[i])
            raw.points[i] = (raw.points[i] - lo).cwiseQuotient(range);
    CorruptedPointMap out;
    out.map = std::move(raw);
    out.gt_transform = std::move(undo);
    out.gt_transform.scale = spec.true_scale.cwiseProduct(range);
    const Vec3 shift0 = spec.true_scale.cwiseProduct(lo);
    for (auto& t : out.gt_transform.translation)
        t += shift0;
    return out;
}

} // namespace

CorruptedPointMap corrupt_pointmap(const PointMap& gt, const CorruptionSpec& spec) {
    spec.validate();
    const WarpField warp = make_warp(spec, 0);
    const auto noise = make_noise(spec, 0, gt.points.size());
    AffineTransform undo;
    PointMap raw = corrupt_raw(gt, spec, warp, noise, undo);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
    minmax_over(raw, lo, hi);
    if (!lo.allFinite())
        throw EmptyGeometry("corrupt_pointmap: no valid points");
    const Vec3 range = (hi - lo).cwiseMax(1e-6);
    return normalize_raw(std::move(raw), std::move(undo), spec, lo, range);
}

std::pair<CorruptedPointMap, CorruptedPointMap>
corrupt_pointmap_pair(const PointMap& gt_left, const PointMap& gt_right,
                      const CorruptionSpec& spec) {
    spec.validate();
    const WarpField warp_l = make_warp(spec, 0);
    const WarpField warp_r = make_warp(spec, 1);
    const auto noise_l = make_noise(spec, 0, gt_left.points.size());
    const auto noise_r = make_noise(spec, 1, gt_right.points.size());
    AffineTransform undo_l, undo_r;
    PointMap raw_l = corrupt_raw(gt_left, spec, warp_l, noise_l, undo_l);
    PointMap raw_r = corrupt_raw(gt_right, spec, warp_r, noise_r, undo_r);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
    minmax_over(raw_l, lo, hi);
    minmax_over(raw_r, lo, hi);
    if (!lo.allFinite())
        throw EmptyGeometry("corrupt_pointmap_pair: no valid points");
    const Vec3 range = (hi - lo).cwiseMax(1e-6);
    return {normalize_raw(std::move(raw_l), std::move(undo_l), spec, lo, range),
            normalize_raw(std::move(raw_r), std::move(undo_r), spec, lo, range)};
}

std::vector<CameraModel> gen_rig(int n_cams, double radius, const Vec3& look_at,
                                 const RigOptions& opt) {
    if (n_cams < 3)
        throw BadConfig("gen_rig: need at least 3 cameras");
    if (!(radius > 0.0) || std::abs(opt.elevation) >= radius)
        throw BadConfig("gen_rig: elevation must be smaller than the radius");
    const double focal = opt.focal > 0.0 ? opt.focal : 1.2 * opt.width;
    const double rho = std::sqrt(radius * radius - opt.elevation * opt.elevation);
    const double span = opt.span_deg * kPi / 180.0;

    std::vector<CameraModel> cams;
    cams.reserve(static_cast<size_t>(n_cams));
    for (int k = 0; k < n_cams; ++k) {
        const double theta = -0.5 * span + span * static_cast<double>(k) /
                                               static_cast<double>(n_cams - 1);
        const Vec3 pos = look_at + Vec3(rho * std::sin(theta), -rho * std::cos(theta),
                                        opt.elevation);
        const Vec3 fwd = (look_at - pos).normalized();
        Vec3 right = fwd.cross(Vec3::UnitZ());
        if (right.norm() < 1e-9)
            right = Vec3::UnitX();
        right.normalize();
        const Vec3 down = fwd.cross(right);

        CameraModel cam;
        cam.fx = focal;
        cam.fy = focal;
        cam.cx = 0.5 * (opt.width - 1);
        cam.cy = 0.5 * (opt.height - 1);
        cam.width = opt.width;
        cam.height = opt.height;
        cam.rotation.row(0) = right;
        cam.rotation.row(1) = down;
        cam.rotation.row(2) = fwd;
        cam.translation = -cam.rotation * pos;
        cam.validate();
        cams.push_back(cam);
    }
    return cams;
}

SceneSpec scene_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BadConfig("invalid scene JSON in " + path + ": " + e.what());
    }
    SceneSpec spec;
    try {
        spec.seed = j.value("seed", static_cast<uint64_t>(1));
        if (j.contains("light")) {
            const auto& jl = j.at("light");
            if (jl.contains("direction")) {
                const auto d = jl.at("direction").get<std::vector<double>>();
                spec.light.direction = Vec3(d.at(0), d.at(1), d.at(2));
            }
            spec.light.ambient = jl.value("ambient", spec.light.ambient);
        }
        if (!j.contains("primitives")) {
            spec = default_scene(spec.seed);
        } else {
            for (const auto& jp : j.at("primitives")) {
                PrimitiveSpec p;
                const std::string kind = jp.at("type").get<std::string>();
                if (kind == "sphere") {
                    p.kind = PrimitiveSpec::Kind::Sphere;
                    const auto c = jp.at("center").get<std::vector<double>>();
                    p.center = Vec3(c.at(0), c.at(1), c.at(2));
                    p.radius = jp.at("radius").get<double>();
                } else if (kind == "box") {
                    p.kind = PrimitiveSpec::Kind::Box;
                    const auto c = jp.at("center").get<std::vector<double>>();
                    p.center = Vec3(c.at(0), c.at(1), c.at(2));
                    const auto e = jp.at("half_extents").get<std::vector<double>>();
                    p.half_extents = Vec3(e.at(0), e.at(1), e.at(2));
                    p.yaw_deg = jp.value("yaw_deg", 0.0);
                } else if (kind == "ground") {
                    p.kind = PrimitiveSpec::Kind::Ground;
                    p.center = Vec3(0.0, 0.0, jp.value("height", 0.0));
                } else {
                    throw BadConfig("unknown primitive type: " + kind);
                }
                if (jp.contains("texture"))
                    p.texture = texture_from_json(jp.at("texture"));
                spec.primitives.push_back(p);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw BadConfig("scene JSON schema error in " + path + ": " + e.what());
    }
    spec.validate();
    return spec;
}

std::string scene_to_json(const SceneSpec& spec) {
    nlohmann::json j;
    j["seed"] = spec.seed;
    j["light"] = {{"direction",
                   {spec.light.direction.x(), spec.light.direction.y(), spec.light.direction.z()}},
                  {"ambient", spec.light.ambient}};
    j["primitives"] = nlohmann::json::array();
    for (const auto& p : spec.primitives) {
        nlohmann::json jp;
        switch (p.kind) {
        case PrimitiveSpec::Kind::Sphere:
            jp["type"] = "sphere";
            jp["center"] = {p.center.x(), p.center.y(), p.center.z()};
            jp["radius"] = p.radius;
            break;
        case PrimitiveSpec::Kind::Box:
            jp["type"] = "box";
            jp["center"] = {p.center.x(), p.center.y(), p.center.z()};
            jp["half_extents"] = {p.half_extents.x(), p.half_extents.y(), p.half_extents.z()};
            jp["yaw_deg"] = p.yaw_deg;
            break;
        case PrimitiveSpec::Kind::Ground:
            jp["type"] = "ground";
            jp["height"] = p.center.z();
            break;
        }
        jp["texture"] = texture_to_json(p.texture);
        j["primitives"].push_back(jp);
    }
    return j.dump(2);
}

} // namespace gsp
