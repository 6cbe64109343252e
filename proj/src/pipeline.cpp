#include "vfa/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "vfa/error.hpp"

namespace vfa {

namespace {

float fraction_below_one(double v) {
    const float f = static_cast<float>(v);
    return std::clamp(f, 0.0f, std::nextafter(1.0f, 0.0f));
}

// Separable Gaussian blur with std given per axis in cells, zero padded.
std::vector<float> gaussian_blur(const GroundFeature& in, double sx, double sy) {
    const auto kernel = [](double sigma) {
        const int r = static_cast<int>(std::ceil(3.0 * sigma));
        std::vector<double> k(2 * r + 1);
        double sum = 0.0;
        for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
        for (double& v : k) v /= sum;
        return k;
    };
    const int w = in.width, h = in.height;
    const auto kx = kernel(sx);
    const auto ky = kernel(sy);
    const int rx = static_cast<int>(kx.size() / 2), ry = static_cast<int>(ky.size() / 2);
    std::vector<double> tmp(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -rx; i <= rx; ++i)
                if (x + i >= 0 && x + i < w) acc += kx[i + rx] * in.at(0, y, x + i);
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    std::vector<float> out(tmp.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -ry; i <= ry; ++i)
                if (y + i >= 0 && y + i < h) acc += ky[i + ry] * tmp[static_cast<std::size_t>(y + i) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
        }
    return out;
}

double fuse_views(std::vector<double>& v, ViewFusion mode) {
    switch (mode) {
        case ViewFusion::mean: {
            double sum = 0.0;
            for (double x : v) sum += x;
            return sum / v.size();
        }
        case ViewFusion::min:
            return *std::min_element(v.begin(), v.end());
        case ViewFusion::median: {
            const std::size_t n = v.size();
            std::nth_element(v.begin(), v.begin() + n / 2, v.end());
            const double hi = v[n / 2];
            if (n % 2) return hi;
            const double lo = *std::max_element(v.begin(), v.begin() + n / 2);
            return 0.5 * (lo + hi);
        }
    }
    return 0.0;
}

}  // namespace

TargetMaps occupancy_head(const ProjectionTable& table, std::span<const VoxelFeature> voxels,
                          const HeadConfig& head, const DecoderConfig& decoder) {
    const VoxelGridSpec& g = table.grid();
    if (voxels.size() != table.camera_count())
        throw ShapeMismatch("head: one voxel feature per camera required");
    if (voxels.empty()) throw InvalidArgument("head: no cameras");
    const int C = voxels.front().channels;
    for (const auto& v : voxels)
        if (v.channels != C || v.nz != g.nz || v.ny != g.ny || v.nx != g.nx)
            throw ShapeMismatch("head: voxel features disagree with the grid");

    TargetMaps out;
    out.confidence = GroundFeature(1, g.ny, g.nx);
    out.offset = GroundFeature(2, g.ny, g.nx);
    out.dimension = GroundFeature(3, g.ny, g.nx);
    out.orientation = GroundFeature(head.csl_bins, g.ny, g.nx);
    out.mask = GroundFeature(1, g.ny, g.nx);

    std::vector<double> column;
    column.reserve(voxels.size());
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            double best = 0.0;
            for (int c = 0; c < C; ++c) {
                double layer_sum = 0.0;
                for (int iz = 0; iz < g.nz; ++iz) {
                    const std::size_t vox = g.index(ix, iy, iz);
                    column.clear();
                    for (std::size_t cam = 0; cam < voxels.size(); ++cam)
                        if (table.box(cam, vox).valid) column.push_back(voxels[cam].at(c, vox));
                    if (!column.empty()) layer_sum += fuse_views(column, head.fusion);
                }
                best = std::max(best, layer_sum);
            }
            out.confidence.at(0, iy, ix) = static_cast<float>(std::clamp(best / g.nz, 0.0, 1.0));
        }

    const GroundFeature raw = out.confidence;
    if (head.smoothing_sigma > 0.0)
        out.confidence.data = gaussian_blur(raw, head.smoothing_sigma / g.voxel_l,
                                            head.smoothing_sigma / g.voxel_w);
    const GroundFeature& s = out.confidence;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const double center = s.at(0, iy, ix);
            if (center < decoder.score_threshold) continue;

            double sw = 0.0, sx = 0.0, sy = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = ix + dx, y = iy + dy;
                    if (x < 0 || y < 0 || x >= g.nx || y >= g.ny) continue;
                    const double v = s.at(0, y, x);
                    sw += v;
                    sx += v * dx;
                    sy += v * dy;
                }
            out.offset.at(0, iy, ix) = fraction_below_one(0.5 + sx / sw);
            out.offset.at(1, iy, ix) = fraction_below_one(0.5 + sy / sw);

            // Principal axis of the raw cells above half the local raw peak.
            const int r = decoder.nms_radius;
            double raw_peak = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int x = ix + dx, y = iy + dy;
                    if (x >= 0 && y >= 0 && x < g.nx && y < g.ny) raw_peak = std::max<double>(raw_peak, raw.at(0, y, x));
                }
            double w = 0.0, mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int x = ix + dx, y = iy + dy;
                    if (x < 0 || y < 0 || x >= g.nx || y >= g.ny) continue;
                    const double v = raw.at(0, y, x);
                    if (v < 0.5 * raw_peak) continue;
                    const double px = dx * g.voxel_l, py = dy * g.voxel_w;
                    w += v;
                    mx += v * px;
                    my += v * py;
                    xx += v * px * px;
                    yy += v * py * py;
                    xy += v * px * py;
                }
            mx /= w;
            my /= w;
            const double cxx = xx / w - mx * mx;
            const double cyy = yy / w - my * my;
            const double cxy = xy / w - mx * my;
            double yaw = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
            if (yaw < 0.0) yaw += std::numbers::pi;
            const auto csl = encode_csl(yaw, head.csl_bins, head.csl_radius);
            for (int b = 0; b < head.csl_bins; ++b) out.orientation.at(b, iy, ix) = csl[b];
        }
    return out;
}

void PipelineConfig::validate() const {
    scene.validate();
    grid.validate();
    match.validate();
    if (frames < 1) throw InvalidArgument("pipeline: frames must be >= 1");
    if (render.channels < 1 || render.stride < 1)
        throw InvalidArgument("pipeline: render channels and stride must be >= 1");
}

MeanDims PipelineConfig::mean_dims() const {
    return {0.5 * (scene.length_min + scene.length_max), 0.5 * (scene.width_min + scene.width_max),
            0.5 * (scene.height_min + scene.height_max)};
}

DecoderConfig PipelineConfig::effective_decoder() const {
    DecoderConfig d = decoder;
    if (d.nms_radius <= 0) d.nms_radius = DecoderConfig::defaults_for(mean_dims(), grid).nms_radius;
    return d;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    const DecoderConfig decoder = cfg.effective_decoder();
    decoder.validate();
    const MeanDims mean = cfg.mean_dims();
    const BevScale scale = BevScale::for_grid(cfg.grid, cfg.encode.scale.units_per_meter);
    EncodeOptions encode = cfg.encode;
    encode.scale = scale;

    const auto rig = make_rig(cfg.scene);
    const ProjectionTable table = build_projection_table(cfg.grid, rig, cfg.render.stride);

    PipelineResult result;
    std::vector<std::vector<Detection>> dets;
    std::vector<std::vector<GroundTruthObject>> gts;
    std::vector<double> times;
    for (int f = 0; f < cfg.frames; ++f) {
        SceneConfig sc = cfg.scene;
        sc.seed = cfg.scene.seed + static_cast<std::uint64_t>(f);
        sc.frame = f;
        const Scene scene = generate_scene(sc);
        const auto maps = render_feature_views(scene, cfg.render);

        const auto t0 = std::chrono::steady_clock::now();
        const auto voxels = aggregate_features(table, maps);
        const TargetMaps head = occupancy_head(table, voxels, cfg.head, decoder);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        FrameResult fr;
        fr.frame = f;
        fr.objects = scene.objects;
        fr.detections = decode(head, cfg.grid, mean, scale, decoder, cfg.head.csl_radius);
        const TargetMaps target = encode_targets(scene.objects, cfg.grid, mean, encode);
        fr.focal_loss = focal_loss(head.confidence, target.confidence);
        fr.aggregate_seconds = seconds;
        times.push_back(seconds);
        dets.push_back(fr.detections);
        gts.push_back(fr.objects);
        result.mean_focal_loss += fr.focal_loss / cfg.frames;
        result.frames.push_back(std::move(fr));
    }
    result.metrics = evaluate(dets, gts, cfg.match);
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    result.median_aggregate_seconds = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    return result;
}

SweepParam parse_sweep_param(const std::string& name) {
    if (name == "n_layers") return SweepParam::n_layers;
    if (name == "voxel_height") return SweepParam::voxel_height;
    throw InvalidArgument("unknown sweep parameter '" + name + "' (n_layers | voxel_height)");
}

std::string to_string(SweepParam p) {
    return p == SweepParam::n_layers ? "n_layers" : "voxel_height";
}

PipelineConfig sweep_point(const PipelineConfig& base, SweepParam param, double value,
                           double grid_height) {
    PipelineConfig cfg = base;
    if (param == SweepParam::n_layers) {
        const long n = std::lround(value);
        if (n < 1 || std::abs(value - static_cast<double>(n)) > 1e-9)
            throw InvalidArgument("sweep: n_layers values must be positive integers");
        if (!(grid_height > 0.0)) throw InvalidArgument("sweep: grid height must be positive");
        cfg.grid.nz = static_cast<int>(n);
        cfg.grid.voxel_h = grid_height / static_cast<double>(n);
    } else {
        if (!(value > 0.0)) throw InvalidArgument("sweep: voxel_height values must be positive");
        cfg.grid.voxel_h = value;
    }
    return cfg;
}

std::vector<SweepRow> run_sweep(const PipelineConfig& base, SweepParam param,
                                std::span<const double> values, double grid_height) {
    if (values.empty()) throw InvalidArgument("sweep: empty value range");
    std::vector<SweepRow> rows;
    for (double v : values) {
        const PipelineConfig cfg = sweep_point(base, param, v, grid_height);
        const PipelineResult r = run_pipeline(cfg);
        SweepRow row;
        row.value = v;
        row.nz = cfg.grid.nz;
        row.voxel_h = cfg.grid.voxel_h;
        row.clear = r.metrics.clear;
        row.mean_focal_loss = r.mean_focal_loss;
        row.seconds_per_frame = r.median_aggregate_seconds;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace vfa
