#include "vfa/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vfa/error.hpp"

namespace vfa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Peak {
    int ix;
    int iy;
    float score;
    std::size_t index;
};

bool is_peak(const GroundFeature& s, int ix, int iy) {
    const float v = s.at(0, iy, ix);
    const std::size_t self = static_cast<std::size_t>(iy) * s.width + ix;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int x = ix + dx;
            const int y = iy + dy;
            if (x < 0 || y < 0 || x >= s.width || y >= s.height) continue;
            const float n = s.at(0, y, x);
            if (n > v) return false;
            if (n == v && static_cast<std::size_t>(y) * s.width + x < self) return false;
        }
    return true;
}

}  // namespace

void DecoderConfig::validate() const {
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
        throw InvalidArgument("decoder: score_threshold must lie in [0, 1]");
    if (nms_radius < 1) throw InvalidArgument("decoder: nms_radius must be >= 1");
    if (max_detections < 0) throw InvalidArgument("decoder: max_detections must be >= 0");
}

DecoderConfig DecoderConfig::defaults_for(const MeanDims& mean, const VoxelGridSpec& grid) {
    mean.validate();
    const double cell = std::min(grid.voxel_l, grid.voxel_w);
    DecoderConfig cfg;
    cfg.nms_radius =
        std::max(1, static_cast<int>(std::ceil(std::hypot(mean.l, mean.w) / 2.0 / cell)));
    return cfg;
}

double decode_csl(std::span<const float> bins, int radius) {
    const int n = static_cast<int>(bins.size());
    if (n < 2) throw InvalidArgument("decode_csl: need at least 2 bins");
    const auto it = std::max_element(bins.begin(), bins.end());
    if (!(*it > 0.0f)) throw DegenerateVector("decode_csl: no positive bin");
    const int k = static_cast<int>(it - bins.begin());
    const int r = std::min(radius, (n - 1) / 2);
    double weight = 0.0;
    double moment = 0.0;
    for (int d = -r; d <= r; ++d) {
        const float v = bins[static_cast<std::size_t>(((k + d) % n + n) % n)];
        if (v <= 0.0f) continue;
        weight += v;
        moment += v * d;
    }
    double theta = (k + moment / weight) * kTwoPi / n;
    theta = std::fmod(theta, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;
    return theta;
}

std::vector<Detection> decode(const TargetMaps& maps, const VoxelGridSpec& grid,
                              const MeanDims& mean, const BevScale& scale,
                              const DecoderConfig& cfg, int csl_radius) {
    cfg.validate();
    mean.validate();
    scale.validate();
    const GroundFeature& s = maps.confidence;
    const auto same_plane = [&](const GroundFeature& m, int channels) {
        return m.channels == channels && m.height == s.height && m.width == s.width;
    };
    if (s.channels != 1 || s.height != grid.ny || s.width != grid.nx)
        throw ShapeMismatch("decode: confidence map does not match the grid");
    if (!same_plane(maps.offset, 2) || !same_plane(maps.dimension, 3) ||
        maps.orientation.height != s.height || maps.orientation.width != s.width ||
        maps.orientation.channels < 2)
        throw ShapeMismatch("decode: head maps disagree with the confidence map");

    std::vector<Peak> peaks;
    for (int iy = 0; iy < s.height; ++iy)
        for (int ix = 0; ix < s.width; ++ix) {
            const float v = s.at(0, iy, ix);
            if (v < cfg.score_threshold || !is_peak(s, ix, iy)) continue;
            peaks.push_back({ix, iy, v, static_cast<std::size_t>(iy) * s.width + ix});
        }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        return a.score != b.score ? a.score > b.score : a.index < b.index;
    });

    std::vector<Peak> kept;
    const double r2 = static_cast<double>(cfg.nms_radius) * cfg.nms_radius;
    for (const Peak& p : peaks) {
        if (static_cast<int>(kept.size()) >= cfg.max_detections) break;
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
            const double dx = p.ix - k.ix;
            const double dy = p.iy - k.iy;
            return dx * dx + dy * dy <= r2;
        });
        if (!suppressed) kept.push_back(p);
    }

    const int bins = maps.orientation.channels;
    std::vector<float> column(static_cast<std::size_t>(bins));
    std::vector<Detection> out;
    out.reserve(kept.size());
    for (const Peak& p : kept) {
        Detection d;
        d.x = grid.origin.x + (p.ix + maps.offset.at(0, p.iy, p.ix)) * scale.gamma /
                                  scale.units_per_meter;
        d.y = grid.origin.y + (p.iy + maps.offset.at(1, p.iy, p.ix)) * scale.gamma /
                                  scale.units_per_meter;
        d.l = mean.l * std::exp(static_cast<double>(maps.dimension.at(0, p.iy, p.ix)));
        d.w = mean.w * std::exp(static_cast<double>(maps.dimension.at(1, p.iy, p.ix)));
        d.h = mean.h * std::exp(static_cast<double>(maps.dimension.at(2, p.iy, p.ix)));
        for (int b = 0; b < bins; ++b) column[b] = maps.orientation.at(b, p.iy, p.ix);
        const bool has_orientation =
            std::any_of(column.begin(), column.end(), [](float v) { return v > 0.0f; });
        d.yaw = has_orientation ? decode_csl(column, csl_radius) : 0.0;
        d.score = std::clamp<double>(p.score, 0.0, 1.0);
        out.push_back(d);
    }
    return out;
}

}  // namespace vfa
