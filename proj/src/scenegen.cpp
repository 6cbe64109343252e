#include "vfa/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "vfa/error.hpp"
#include "vfa/io.hpp"
#include "vfa/parallel.hpp"

namespace vfa {

namespace {

// Platform-independent uniform draws (std::uniform_real_distribution is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 gen_;
};

double cross(const ImagePoint& o, const ImagePoint& a, const ImagePoint& b) {
    return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

std::vector<ImagePoint> convex_hull(std::vector<ImagePoint> pts) {
    std::sort(pts.begin(), pts.end(), [](const ImagePoint& a, const ImagePoint& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    if (pts.size() < 3) return pts;
    std::vector<ImagePoint> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

void SceneConfig::validate() const {
    if (!(extent_x > 0.0) || !(extent_y > 0.0))
        throw InvalidArgument("scene: extent must be positive");
    if (n_cameras < 1 || n_cameras > kMaxRigCameras)
        throw InvalidArgument("scene: n_cameras must lie in [1, 7]");
    if (n_objects < 0) throw InvalidArgument("scene: n_objects must be >= 0");
    const auto range_ok = [](double lo, double hi) { return lo > 0.0 && hi >= lo; };
    if (!range_ok(length_min, length_max) || !range_ok(width_min, width_max) ||
        !range_ok(height_min, height_max))
        throw InvalidArgument("scene: dimension ranges must be positive and ordered");
    if (image_width < 1 || image_height < 1 || !(focal > 0.0))
        throw InvalidArgument("scene: bad image size or focal length");
    if (!(min_separation >= 0.0) || max_attempts < 1)
        throw InvalidArgument("scene: bad placement parameters");
}

std::vector<Camera> make_rig(const SceneConfig& cfg) {
    cfg.validate();
    const double X = cfg.extent_x;
    const double Y = cfg.extent_y;
    const Vec3 center(0.5 * X, 0.5 * Y, 0.0);
    const double hc = cfg.corner_camera_height;
    const double ht = cfg.trough_camera_height;
    const std::vector<std::pair<Vec3, Vec3>> poses = {
        {{0.0, 0.0, hc}, center},
        {{X, 0.0, hc}, center},
        {{X, Y, hc}, center},
        {{0.0, Y, hc}, center},
        {{X / 3.0, 0.0, ht}, {0.25 * X, 0.5 * Y, 0.0}},
        {{X / 2.0, 0.0, ht}, {0.5 * X, 0.5 * Y, 0.0}},
        {{2.0 * X / 3.0, 0.0, ht}, {0.75 * X, 0.5 * Y, 0.0}},
    };
    const Intrinsics K{cfg.focal, cfg.focal, 0.5 * (cfg.image_width - 1),
                       0.5 * (cfg.image_height - 1), 0.0};
    std::vector<Camera> rig;
    for (int i = 0; i < cfg.n_cameras; ++i)
        rig.emplace_back(i, K, Extrinsics::look_at(poses[i].first, poses[i].second),
                         cfg.image_width, cfg.image_height);
    return rig;
}

Scene generate_scene(const SceneConfig& cfg) {
    cfg.validate();
    Scene scene;
    scene.cameras = make_rig(cfg);
    scene.frame = cfg.frame;
    Rng rng(cfg.seed);
    const double margin = 0.5 * std::hypot(cfg.length_max, cfg.width_max);
    if (2.0 * margin >= cfg.extent_x || 2.0 * margin >= cfg.extent_y)
        throw InvalidArgument("scene: extent too small for the object size range");
    int attempts = 0;
    while (static_cast<int>(scene.objects.size()) < cfg.n_objects) {
        if (++attempts > cfg.max_attempts)
            throw PlacementFailure("scene: could not place " + std::to_string(cfg.n_objects) +
                                   " objects with separation " +
                                   std::to_string(cfg.min_separation) + " m");
        GroundTruthObject o;
        o.id = static_cast<int>(scene.objects.size());
        o.x = rng.uniform(margin, cfg.extent_x - margin);
        o.y = rng.uniform(margin, cfg.extent_y - margin);
        o.l = rng.uniform(cfg.length_min, cfg.length_max);
        o.w = rng.uniform(cfg.width_min, cfg.width_max);
        o.h = rng.uniform(cfg.height_min, cfg.height_max);
        o.yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const bool clear = std::none_of(scene.objects.begin(), scene.objects.end(), [&](const auto& p) {
            return std::hypot(p.x - o.x, p.y - o.y) < cfg.min_separation;
        });
        if (clear) scene.objects.push_back(o);
    }
    return scene;
}

WorldPoint object_corner(const GroundTruthObject& o, int k) {
    const double a = (k & 1) ? 0.5 * o.l : -0.5 * o.l;
    const double b = (k & 2) ? 0.5 * o.w : -0.5 * o.w;
    const double c = std::cos(o.yaw);
    const double s = std::sin(o.yaw);
    return {o.x + c * a - s * b, o.y + s * a + c * b, (k & 4) ? o.h : 0.0};
}

std::vector<float> object_signature(std::size_t index, const RenderConfig& cfg) {
    if (cfg.channels < 1) throw InvalidArgument("render: channels must be >= 1");
    std::vector<float> sig(static_cast<std::size_t>(cfg.channels));
    Rng rng(cfg.seed * 0x9E3779B97F4A7C15ull + index + 1);
    for (auto& v : sig) v = static_cast<float>(cfg.noise * rng.uniform());
    sig[index % static_cast<std::size_t>(cfg.channels)] = 1.0f;
    return sig;
}

ImagePoint feature_pixel_center(int x, int y, int stride) {
    const double half = 0.5 * (stride - 1);
    return {x * stride + half, y * stride + half};
}

std::vector<ImagePoint> projected_hull(const Camera& camera, const GroundTruthObject& o) {
    std::vector<ImagePoint> pts;
    for (int k = 0; k < 8; ++k) {
        const auto q = project_point(camera, object_corner(o, k));
        if (!q) return {};
        pts.push_back(*q);
    }
    return convex_hull(std::move(pts));
}

bool point_in_convex(std::span<const ImagePoint> hull, const ImagePoint& q) {
    if (hull.size() < 3) return false;
    for (std::size_t i = 0; i < hull.size(); ++i)
        if (cross(hull[i], hull[(i + 1) % hull.size()], q) < 0.0) return false;
    return true;
}

std::vector<FeatureMap> render_feature_views(const Scene& scene, const RenderConfig& cfg) {
    if (cfg.stride < 1) throw InvalidArgument("render: stride must be >= 1");
    if (cfg.channels < 1) throw InvalidArgument("render: channels must be >= 1");
    for (const Camera& cam : scene.cameras)
        if (cam.image_width() % cfg.stride || cam.image_height() % cfg.stride)
            throw InvalidArgument("render: stride must divide the image size of camera " +
                                  std::to_string(cam.id()));
    std::vector<std::vector<float>> signatures;
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        signatures.push_back(object_signature(i, cfg));

    std::vector<FeatureMap> maps(scene.cameras.size());
    parallel_for(scene.cameras.size(), [&](std::size_t c) {
        const Camera& cam = scene.cameras[c];
        FeatureMap m(cfg.channels, cam.image_height() / cfg.stride, cam.image_width() / cfg.stride);
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < scene.objects.size(); ++i) {
            const auto& o = scene.objects[i];
            order.emplace_back(cam.depth({o.x, o.y, 0.5 * o.h}), i);
        }
        // Far to near; ties by index for determinism.
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (const auto& [depth, i] : order) {
            const auto hull = projected_hull(cam, scene.objects[i]);
            if (hull.size() < 3) continue;
            double u0 = hull[0].u, u1 = hull[0].u, v0 = hull[0].v, v1 = hull[0].v;
            for (const auto& p : hull) {
                u0 = std::min(u0, p.u);
                u1 = std::max(u1, p.u);
                v0 = std::min(v0, p.v);
                v1 = std::max(v1, p.v);
            }
            const double half = 0.5 * (cfg.stride - 1);
            const int x0 = std::max(0, static_cast<int>(std::floor((u0 - half) / cfg.stride)));
            const int x1 = std::min(m.width - 1, static_cast<int>(std::ceil((u1 - half) / cfg.stride)));
            const int y0 = std::max(0, static_cast<int>(std::floor((v0 - half) / cfg.stride)));
            const int y1 = std::min(m.height - 1, static_cast<int>(std::ceil((v1 - half) / cfg.stride)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (!point_in_convex(hull, feature_pixel_center(x, y, cfg.stride))) continue;
                    for (int ch = 0; ch < cfg.channels; ++ch) m.at(ch, y, x) = signatures[i][ch];
                }
        }
        maps[c] = std::move(m);
    });
    return maps;
}

void export_scene(const Scene& scene, const std::filesystem::path& dir,
                  std::span<const FeatureMap> features) {
    std::filesystem::create_directories(dir);
    write_calibration(dir / "calibration.json", scene.cameras);
    write_annotation(dir / "annotations.json", AnnotatedFrame{scene.frame, scene.objects});
    if (!features.empty()) {
        std::filesystem::create_directories(dir / "features");
        for (std::size_t i = 0; i < features.size(); ++i)
            write_tensor(dir / "features" / ("cam" + std::to_string(i) + ".tensor"),
                         features[i].to_tensor());
    }
}

}  // namespace vfa
