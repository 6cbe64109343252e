#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "vfa/voxel.hpp"

namespace vfa {

// Ground-standing object; center at (x, y, 0), yaw measured from +x toward +y.
struct GroundTruthObject {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double l = 1.0;
    double w = 1.0;
    double h = 1.0;
    double yaw = 0.0;

    void validate() const;
    bool operator==(const GroundTruthObject&) const = default;
};

struct MeanDims {
    double l = 1.0;
    double w = 1.0;
    double h = 1.0;

    void validate() const;
    static MeanDims of(std::span<const GroundTruthObject> objects);
};

// Mapping from meters to the annotation ("source") grid and on to BEV cells.
// MultiviewC: 100 source units per meter, 3900 / 156 = 25 source units per cell.
struct BevScale {
    double units_per_meter = 100.0;
    double gamma = 25.0;

    void validate() const;
    // gamma = cell length in source units.
    static BevScale for_grid(const VoxelGridSpec& grid, double units_per_meter = 100.0);
};

enum class ConfidenceMode { point, gaussian, oriented_gaussian };

inline constexpr double kDefaultAlpha = 0.01;
inline constexpr int kCslBins = 360;
inline constexpr int kCslRadius = 6;

// Confidence map [1][ny][nx]. Gaussian std in cells is alpha times the
// object size in source units (l and w for the oriented mode, their mean for
// the isotropic one). Overlaps combine by per-cell max.
// Throws OutOfGrid for centers outside the grid.
GroundFeature encode_confidence(std::span<const GroundTruthObject> objects,
                                const VoxelGridSpec& grid, ConfidenceMode mode,
                                double alpha = kDefaultAlpha, const BevScale& scale = {});

// Axis-aligned Gaussian sampled on integer cell offsets from the center.
double axis_aligned_gaussian(double dx, double dy, double var_l, double var_w);

// Position offsets [2][ny][nx]: fractional part of (x_src / gamma, y_src / gamma)
// at each object cell, zero elsewhere.
GroundFeature encode_offsets(std::span<const GroundTruthObject> objects,
                             const VoxelGridSpec& grid, const BevScale& scale = {});

// Dimension offsets [3][ny][nx]: log(d / mean) at each object cell.
GroundFeature encode_dimensions(std::span<const GroundTruthObject> objects,
                                const VoxelGridSpec& grid, const MeanDims& mean,
                                const BevScale& scale = {});

// Circular smooth label: Gaussian window exp(-d^2 / (2 r^2)) for bin distance
// |d| < r around the bin nearest theta, wrapping at 0 / bins.
std::vector<float> encode_csl(double theta, int bins = kCslBins, int radius = kCslRadius);

// Index of the CSL bin nearest an angle.
int csl_bin(double theta, int bins = kCslBins);

struct FocalLossParams {
    double alpha = 2.0;  // focusing exponent on (1 - p) / p
    double beta = 4.0;   // penalty reduction exponent on (1 - t)
    double eps = 1e-6;
};

// Penalty-reduced focal loss for Gaussian heatmaps, normalized by the number
// of positive (target == 1) cells.
double focal_loss(const GroundFeature& pred, const GroundFeature& target,
                  const FocalLossParams& params = {});

// All supervision maps for one frame.
struct TargetMaps {
    GroundFeature confidence;   // [1][H][W]
    GroundFeature offset;       // [2][H][W]
    GroundFeature dimension;    // [3][H][W]
    GroundFeature orientation;  // [B][H][W]
    GroundFeature mask;         // [1][H][W], 1 at object cells
};

struct EncodeOptions {
    ConfidenceMode mode = ConfidenceMode::oriented_gaussian;
    double alpha = kDefaultAlpha;
    BevScale scale{};
    int csl_bins = kCslBins;
    int csl_radius = kCslRadius;
};

TargetMaps encode_targets(std::span<const GroundTruthObject> objects, const VoxelGridSpec& grid,
                          const MeanDims& mean, const EncodeOptions& options = {});

// Directory of tensor files: confidence, offset, dimension, orientation, mask.
void write_target_maps(const std::filesystem::path& dir, const TargetMaps& maps);
TargetMaps read_target_maps(const std::filesystem::path& dir);

}  // namespace vfa
