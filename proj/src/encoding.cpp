#include "vfa/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vfa/error.hpp"

namespace vfa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Cell {
    int ix;
    int iy;
};

Cell object_cell(const GroundTruthObject& o, const VoxelGridSpec& grid, const BevScale& scale) {
    const double sx = (o.x - grid.origin.x) * scale.units_per_meter / scale.gamma;
    const double sy = (o.y - grid.origin.y) * scale.units_per_meter / scale.gamma;
    const double fx = std::floor(sx);
    const double fy = std::floor(sy);
    if (!(fx >= 0 && fy >= 0 && fx < grid.nx && fy < grid.ny))
        throw OutOfGrid("object " + std::to_string(o.id) + " at (" + std::to_string(o.x) + ", " +
                        std::to_string(o.y) + ") lies outside the grid");
    return {static_cast<int>(fx), static_cast<int>(fy)};
}

// Axis-aligned patch A[b][a] for integer offsets a (along), b (across) in
// [-half, half].
class Patch {
public:
    Patch(int half, double var_l, double var_w)
        : half_(half), side_(2 * half + 1), values_(static_cast<std::size_t>(side_) * side_) {
        for (int b = -half; b <= half; ++b)
            for (int a = -half; a <= half; ++a)
                values_[idx(a, b)] = axis_aligned_gaussian(a, b, var_l, var_w);
    }

    double at(int a, int b) const {
        if (a < -half_ || a > half_ || b < -half_ || b > half_) return 0.0;
        return values_[idx(a, b)];
    }

    double bilinear(double a, double b) const {
        const double fa = std::floor(a);
        const double fb = std::floor(b);
        const int a0 = static_cast<int>(fa);
        const int b0 = static_cast<int>(fb);
        const double ta = a - fa;
        const double tb = b - fb;
        double v = (1.0 - ta) * (1.0 - tb) * at(a0, b0);
        if (ta > 0.0) v += ta * (1.0 - tb) * at(a0 + 1, b0);
        if (tb > 0.0) v += (1.0 - ta) * tb * at(a0, b0 + 1);
        if (ta > 0.0 && tb > 0.0) v += ta * tb * at(a0 + 1, b0 + 1);
        return v;
    }

private:
    std::size_t idx(int a, int b) const {
        return static_cast<std::size_t>(b + half_) * side_ + (a + half_);
    }
    int half_;
    int side_;
    std::vector<double> values_;
};

void splat_max(GroundFeature& map, int cx, int cy, int dx, int dy, double value) {
    const int x = cx + dx;
    const int y = cy + dy;
    if (x < 0 || y < 0 || x >= map.width || y >= map.height) return;
    float& cell = map.at(0, y, x);
    cell = std::max(cell, static_cast<float>(value));
}

// Fractional part stored as float, kept strictly below 1.
float fraction(double v) {
    const float f = static_cast<float>(v - std::floor(v));
    return f < 1.0f ? f : std::nextafter(1.0f, 0.0f);
}

}  // namespace

void GroundTruthObject::validate() const {
    if (!(l > 0.0) || !(w > 0.0) || !(h > 0.0))
        throw InvalidArgument("object " + std::to_string(id) + ": dimensions must be positive");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(yaw))
        throw InvalidArgument("object " + std::to_string(id) + ": non-finite pose");
}

void MeanDims::validate() const {
    if (!(l > 0.0) || !(w > 0.0) || !(h > 0.0))
        throw InvalidArgument("mean dimensions must be positive");
}

MeanDims MeanDims::of(std::span<const GroundTruthObject> objects) {
    if (objects.empty()) throw InvalidArgument("mean dimensions of an empty population");
    MeanDims m{0.0, 0.0, 0.0};
    for (const auto& o : objects) {
        m.l += o.l;
        m.w += o.w;
        m.h += o.h;
    }
    const double n = static_cast<double>(objects.size());
    m.l /= n;
    m.w /= n;
    m.h /= n;
    return m;
}

void BevScale::validate() const {
    if (!(units_per_meter > 0.0) || !(gamma > 0.0))
        throw InvalidArgument("bev scale: units_per_meter and gamma must be positive");
}

BevScale BevScale::for_grid(const VoxelGridSpec& grid, double units_per_meter) {
    return {units_per_meter, grid.voxel_l * units_per_meter};
}

double axis_aligned_gaussian(double dx, double dy, double var_l, double var_w) {
    return std::exp(-dx * dx / (2.0 * var_l) - dy * dy / (2.0 * var_w));
}

GroundFeature encode_confidence(std::span<const GroundTruthObject> objects,
                                const VoxelGridSpec& grid, ConfidenceMode mode, double alpha,
                                const BevScale& scale) {
    grid.validate();
    scale.validate();
    if (!(alpha > 0.0)) throw InvalidArgument("encode_confidence: alpha must be positive");
    GroundFeature map(1, grid.ny, grid.nx);
    for (const auto& o : objects) {
        o.validate();
        const Cell c = object_cell(o, grid, scale);
        switch (mode) {
            case ConfidenceMode::point:
                splat_max(map, c.ix, c.iy, 0, 0, 1.0);
                break;
            case ConfidenceMode::gaussian: {
                const double sd = alpha * 0.5 * (o.l + o.w) * scale.units_per_meter;
                const double var = sd * sd;
                const int half = static_cast<int>(std::ceil(3.0 * sd));
                for (int dy = -half; dy <= half; ++dy)
                    for (int dx = -half; dx <= half; ++dx)
                        splat_max(map, c.ix, c.iy, dx, dy, axis_aligned_gaussian(dx, dy, var, var));
                break;
            }
            case ConfidenceMode::oriented_gaussian: {
                const double sd_l = alpha * o.l * scale.units_per_meter;
                const double sd_w = alpha * o.w * scale.units_per_meter;
                const int half = static_cast<int>(std::ceil(3.0 * std::max(sd_l, sd_w)));
                // The rotated output square reaches sqrt(2) * half into the source patch.
                const Patch patch(static_cast<int>(std::ceil(half * std::numbers::sqrt2)) + 1,
                                  sd_l * sd_l, sd_w * sd_w);
                const double cb = std::cos(o.yaw);
                const double sb = std::sin(o.yaw);
                for (int dy = -half; dy <= half; ++dy)
                    for (int dx = -half; dx <= half; ++dx) {
                        const double along = cb * dx + sb * dy;
                        const double across = -sb * dx + cb * dy;
                        splat_max(map, c.ix, c.iy, dx, dy, patch.bilinear(along, across));
                    }
                break;
            }
        }
    }
    return map;
}

GroundFeature encode_offsets(std::span<const GroundTruthObject> objects,
                             const VoxelGridSpec& grid, const BevScale& scale) {
    grid.validate();
    scale.validate();
    GroundFeature out(2, grid.ny, grid.nx);
    for (const auto& o : objects) {
        const Cell c = object_cell(o, grid, scale);
        const double sx = (o.x - grid.origin.x) * scale.units_per_meter / scale.gamma;
        const double sy = (o.y - grid.origin.y) * scale.units_per_meter / scale.gamma;
        out.at(0, c.iy, c.ix) = fraction(sx);
        out.at(1, c.iy, c.ix) = fraction(sy);
    }
    return out;
}

GroundFeature encode_dimensions(std::span<const GroundTruthObject> objects,
                                const VoxelGridSpec& grid, const MeanDims& mean,
                                const BevScale& scale) {
    grid.validate();
    mean.validate();
    GroundFeature out(3, grid.ny, grid.nx);
    for (const auto& o : objects) {
        o.validate();
        const Cell c = object_cell(o, grid, scale);
        out.at(0, c.iy, c.ix) = static_cast<float>(std::log(o.l / mean.l));
        out.at(1, c.iy, c.ix) = static_cast<float>(std::log(o.w / mean.w));
        out.at(2, c.iy, c.ix) = static_cast<float>(std::log(o.h / mean.h));
    }
    return out;
}

int csl_bin(double theta, int bins) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    const long k = std::lround(t * bins / kTwoPi);
    return static_cast<int>(((k % bins) + bins) % bins);
}

std::vector<float> encode_csl(double theta, int bins, int radius) {
    if (bins < 2) throw InvalidArgument("encode_csl: need at least 2 bins");
    if (radius <= 0 || 2 * radius >= bins)
        throw InvalidArgument("encode_csl: radius must satisfy 0 < r < bins / 2");
    if (!std::isfinite(theta)) throw InvalidArgument("encode_csl: non-finite angle");
    std::vector<float> v(static_cast<std::size_t>(bins), 0.0f);
    const int center = csl_bin(theta, bins);
    const double two_r2 = 2.0 * radius * radius;
    for (int d = -(radius - 1); d <= radius - 1; ++d) {
        const int k = ((center + d) % bins + bins) % bins;
        v[static_cast<std::size_t>(k)] = static_cast<float>(std::exp(-d * d / two_r2));
    }
    return v;
}

double focal_loss(const GroundFeature& pred, const GroundFeature& target,
                  const FocalLossParams& params) {
    if (pred.channels != target.channels || pred.height != target.height ||
        pred.width != target.width)
        throw ShapeMismatch("focal_loss: prediction and target shapes differ");
    double pos_loss = 0.0;
    double neg_loss = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double p = std::clamp<double>(pred.data[i], params.eps, 1.0 - params.eps);
        const double t = target.data[i];
        if (t >= 1.0) {
            pos_loss += std::pow(1.0 - p, params.alpha) * std::log(p);
            ++positives;
        } else {
            neg_loss += std::pow(1.0 - t, params.beta) * std::pow(p, params.alpha) *
                        std::log(1.0 - p);
        }
    }
    return -(pos_loss + neg_loss) / static_cast<double>(std::max<std::size_t>(positives, 1));
}

TargetMaps encode_targets(std::span<const GroundTruthObject> objects, const VoxelGridSpec& grid,
                          const MeanDims& mean, const EncodeOptions& options) {
    TargetMaps maps;
    maps.confidence = encode_confidence(objects, grid, options.mode, options.alpha, options.scale);
    maps.offset = encode_offsets(objects, grid, options.scale);
    maps.dimension = encode_dimensions(objects, grid, mean, options.scale);
    maps.orientation = GroundFeature(options.csl_bins, grid.ny, grid.nx);
    maps.mask = GroundFeature(1, grid.ny, grid.nx);
    for (const auto& o : objects) {
        const Cell c = object_cell(o, grid, options.scale);
        const auto csl = encode_csl(o.yaw, options.csl_bins, options.csl_radius);
        for (int b = 0; b < options.csl_bins; ++b) maps.orientation.at(b, c.iy, c.ix) = csl[b];
        maps.mask.at(0, c.iy, c.ix) = 1.0f;
    }
    return maps;
}

void write_target_maps(const std::filesystem::path& dir, const TargetMaps& maps) {
    std::filesystem::create_directories(dir);
    write_tensor(dir / "confidence.tensor", maps.confidence.to_tensor());
    write_tensor(dir / "offset.tensor", maps.offset.to_tensor());
    write_tensor(dir / "dimension.tensor", maps.dimension.to_tensor());
    write_tensor(dir / "orientation.tensor", maps.orientation.to_tensor());
    write_tensor(dir / "mask.tensor", maps.mask.to_tensor());
}

TargetMaps read_target_maps(const std::filesystem::path& dir) {
    TargetMaps maps;
    maps.confidence = GroundFeature::from_tensor(read_tensor(dir / "confidence.tensor"));
    maps.offset = GroundFeature::from_tensor(read_tensor(dir / "offset.tensor"));
    maps.dimension = GroundFeature::from_tensor(read_tensor(dir / "dimension.tensor"));
    maps.orientation = GroundFeature::from_tensor(read_tensor(dir / "orientation.tensor"));
    const auto mask = dir / "mask.tensor";
    if (std::filesystem::exists(mask)) maps.mask = GroundFeature::from_tensor(read_tensor(mask));
    return maps;
}

}  // namespace vfa
