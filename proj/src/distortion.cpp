#include "vfa/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "vfa/error.hpp"

namespace vfa {

namespace {

// Separating-axis test for two convex polygons.
bool convex_overlap(const std::vector<ImagePoint>& a, const std::vector<ImagePoint>& b) {
    const auto separated = [](const std::vector<ImagePoint>& p, const std::vector<ImagePoint>& q) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const ImagePoint& e0 = p[i];
            const ImagePoint& e1 = p[(i + 1) % p.size()];
            const double nx = e0.v - e1.v;
            const double ny = e1.u - e0.u;
            double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
            double qmin = pmin, qmax = -pmin;
            for (const auto& v : p) {
                const double d = nx * v.u + ny * v.v;
                pmin = std::min(pmin, d);
                pmax = std::max(pmax, d);
            }
            for (const auto& v : q) {
                const double d = nx * v.u + ny * v.v;
                qmin = std::min(qmin, d);
                qmax = std::max(qmax, d);
            }
            if (pmax < qmin || qmax < pmin) return true;
        }
        return false;
    };
    if (a.size() < 3 || b.size() < 3) return false;
    return !separated(a, b) && !separated(b, a);
}

void landing_stats(const std::vector<WorldPoint>& pts, const GroundTruthObject& o,
                   MethodDistortion& out) {
    if (pts.empty()) return;
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= pts.size();
    my /= pts.size();
    double ss = 0.0;
    for (const auto& p : pts) ss += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
    out.spread = std::sqrt(ss / pts.size());
    out.centroid_displacement = std::hypot(mx - o.x, my - o.y);
}

// Fuses per-view responses of one object's channel by the minimum across its
// visible views, sums over layers, and takes the weighted centroid of cells
// at or above `fraction` of the peak inside a window around the object.
// layered(view, layer, ix, iy) gives one view's response.
void response_centroid(const GroundTruthObject& o, const std::vector<int>& views, int layers,
                       const VoxelGridSpec& grid, double fraction,
                       const std::function<double(int, int, int, int)>& layered,
                       MethodDistortion& out) {
    const double radius = std::hypot(o.l, o.w);
    const int ix0 = std::max(0, static_cast<int>(std::floor((o.x - radius - grid.origin.x) / grid.voxel_l)));
    const int ix1 = std::min(grid.nx - 1, static_cast<int>(std::floor((o.x + radius - grid.origin.x) / grid.voxel_l)));
    const int iy0 = std::max(0, static_cast<int>(std::floor((o.y - radius - grid.origin.y) / grid.voxel_w)));
    const int iy1 = std::min(grid.ny - 1, static_cast<int>(std::floor((o.y + radius - grid.origin.y) / grid.voxel_w)));
    if (ix0 > ix1 || iy0 > iy1 || views.empty()) return;
    const int w = ix1 - ix0 + 1;
    std::vector<double> r(static_cast<std::size_t>(w) * (iy1 - iy0 + 1), 0.0);
    double peak = 0.0;
    for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix) {
            double sum = 0.0;
            for (int z = 0; z < layers; ++z) {
                double m = std::numeric_limits<double>::infinity();
                for (int v : views) m = std::min(m, layered(v, z, ix, iy));
                sum += m;
            }
            r[(iy - iy0) * w + (ix - ix0)] = sum;
            peak = std::max(peak, sum);
        }
    if (!(peak > 0.0)) return;
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix) {
            const double v = r[(iy - iy0) * w + (ix - ix0)];
            if (v < fraction * peak) continue;
            const WorldPoint c = grid.cell_center(ix, iy);
            sw += v;
            sx += v * c.x;
            sy += v * c.y;
        }
    out.has_response = true;
    out.response_x = sx / sw;
    out.response_y = sy / sw;
    out.response_error = std::hypot(out.response_x - o.x, out.response_y - o.y);
}

}  // namespace

void DistortionConfig::validate() const {
    grid.validate();
    if (multi_heights.empty()) throw InvalidArgument("distortion: multi_heights is empty");
    for (double h : multi_heights)
        if (!std::isfinite(h)) throw InvalidArgument("distortion: non-finite plane height");
    if (axis_samples < 2) throw InvalidArgument("distortion: axis_samples must be >= 2");
    if (!(response_fraction > 0.0 && response_fraction <= 1.0))
        throw InvalidArgument("distortion: response_fraction must lie in (0, 1]");
}

bool object_fully_visible(const Camera& camera, const GroundTruthObject& o) {
    for (int k = 0; k < 8; ++k) {
        const auto q = project_point(camera, object_corner(o, k));
        if (!q || !camera.contains(*q)) return false;
    }
    return true;
}

AxisLandings axis_landings(const Camera& camera, const GroundTruthObject& o,
                           const ProjectionTable& table, std::size_t camera_index,
                           const DistortionConfig& cfg) {
    const VoxelGridSpec& g = cfg.grid;
    AxisLandings out;
    for (int k = 0; k < cfg.axis_samples; ++k) {
        const double z = o.h * (k + 0.5) / cfg.axis_samples;
        const auto q = project_point(camera, {o.x, o.y, z});
        if (!q || !camera.contains(*q)) return {};

        const auto ground = backproject_to_plane(camera, *q, 0.0);
        const double nearest = *std::min_element(
            cfg.multi_heights.begin(), cfg.multi_heights.end(),
            [z](double a, double b) { return std::abs(a - z) < std::abs(b - z); });
        const auto plane = backproject_to_plane(camera, *q, nearest);
        if (!ground || !plane) return {};
        out.single.push_back(*ground);
        out.multi.push_back(*plane);

        // VFA places the sample in the voxel that contains it, provided that
        // voxel's pooling box captures the sample's pixel.
        const int ix = static_cast<int>(std::floor((o.x - g.origin.x) / g.voxel_l));
        const int iy = static_cast<int>(std::floor((o.y - g.origin.y) / g.voxel_w));
        const int iz = static_cast<int>(std::floor((z - g.origin.z) / g.voxel_h));
        if (ix < 0 || iy < 0 || iz < 0 || ix >= g.nx || iy >= g.ny || iz >= g.nz) continue;
        const VoxelBox2D& b = table.box(camera_index, g.index(ix, iy, iz));
        if (!b.valid || q->u < b.u_min || q->u > b.u_max || q->v < b.v_min || q->v > b.v_max)
            continue;
        out.vfa.push_back(g.cell_center(ix, iy));
    }
    return out;
}

DistortionReport analyze_distortion(const Scene& scene, const DistortionConfig& cfg) {
    cfg.validate();
    const VoxelGridSpec& g = cfg.grid;
    const int C = cfg.render.channels;
    const auto maps = render_feature_views(scene, cfg.render);
    const ProjectionTable table = build_projection_table(g, scene.cameras, cfg.render.stride);
    const auto voxels = aggregate_features(table, maps);

    const std::vector<double> ground_plane{0.0};
    const GroundFeature single = homography_aggregate(scene.cameras, maps, ground_plane, g, cfg.render.stride);
    const GroundFeature multi = homography_aggregate(scene.cameras, maps, cfg.multi_heights, g, cfg.render.stride);
    const int nh = static_cast<int>(cfg.multi_heights.size());
    const int n_views = static_cast<int>(scene.cameras.size());

    DistortionReport report;
    report.single_map = GroundFeature(1, g.ny, g.nx);
    report.multi_map = GroundFeature(1, g.ny, g.nx);
    report.vfa_map = GroundFeature(1, g.ny, g.nx);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double s = 0.0, m = 0.0, v = 0.0;
            for (int cam = 0; cam < n_views; ++cam) {
                float best = 0.0f;
                for (int c = 0; c < C; ++c) best = std::max(best, single.at(cam * C + c, iy, ix));
                s += best;
                for (int k = 0; k < nh; ++k) {
                    best = 0.0f;
                    for (int c = 0; c < C; ++c) best = std::max(best, multi.at((cam * nh + k) * C + c, iy, ix));
                    m += best;
                }
                for (int z = 0; z < g.nz; ++z) {
                    best = 0.0f;
                    for (int c = 0; c < C; ++c) best = std::max(best, voxels[cam].at(c, g.index(ix, iy, z)));
                    v += best;
                }
            }
            report.single_map.at(0, iy, ix) = static_cast<float>(s / n_views);
            report.multi_map.at(0, iy, ix) = static_cast<float>(m / n_views);
            report.vfa_map.at(0, iy, ix) = static_cast<float>(v / n_views);
        }

    std::vector<std::vector<std::vector<ImagePoint>>> hulls(n_views);
    for (int cam = 0; cam < n_views; ++cam)
        for (const auto& o : scene.objects) hulls[cam].push_back(projected_hull(scene.cameras[cam], o));

    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const GroundTruthObject& o = scene.objects[i];
        ObjectDistortion od;
        od.id = o.id;
        AxisLandings pooled;
        bool occluded = false;
        for (int cam = 0; cam < n_views; ++cam) {
            const Camera& camera = scene.cameras[cam];
            if (!object_fully_visible(camera, o)) continue;
            od.visible_views.push_back(cam);
            const double depth = camera.depth({o.x, o.y, 0.5 * o.h});
            for (std::size_t j = 0; j < scene.objects.size(); ++j) {
                if (j == i) continue;
                const auto& p = scene.objects[j];
                if (camera.depth({p.x, p.y, 0.5 * p.h}) < depth &&
                    convex_overlap(hulls[cam][i], hulls[cam][j]))
                    occluded = true;
            }
            const AxisLandings l = axis_landings(camera, o, table, cam, cfg);
            pooled.single.insert(pooled.single.end(), l.single.begin(), l.single.end());
            pooled.multi.insert(pooled.multi.end(), l.multi.begin(), l.multi.end());
            pooled.vfa.insert(pooled.vfa.end(), l.vfa.begin(), l.vfa.end());
        }
        od.unoccluded = !occluded;
        landing_stats(pooled.single, o, od.single);
        landing_stats(pooled.multi, o, od.multi);
        landing_stats(pooled.vfa, o, od.vfa);

        const int ch = static_cast<int>(i % static_cast<std::size_t>(C));
        response_centroid(o, od.visible_views, 1, g, cfg.response_fraction,
                          [&](int cam, int, int ix, int iy) { return single.at(cam * C + ch, iy, ix); },
                          od.single);
        response_centroid(o, od.visible_views, nh, g, cfg.response_fraction,
                          [&](int cam, int k, int ix, int iy) {
                              return multi.at((cam * nh + k) * C + ch, iy, ix);
                          },
                          od.multi);
        response_centroid(o, od.visible_views, g.nz, g, cfg.response_fraction,
                          [&](int cam, int z, int ix, int iy) {
                              return voxels[cam].at(ch, g.index(ix, iy, z));
                          },
                          od.vfa);
        report.objects.push_back(std::move(od));
    }
    return report;
}

}  // namespace vfa
