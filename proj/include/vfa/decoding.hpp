#pragma once

#include <span>
#include <vector>

#include "vfa/encoding.hpp"

namespace vfa {

struct Detection {
    double x = 0.0;
    double y = 0.0;
    double l = 1.0;
    double w = 1.0;
    double h = 1.0;
    double yaw = 0.0;
    double score = 0.0;

    bool operator==(const Detection&) const = default;
};

struct DecoderConfig {
    double score_threshold = 0.4;
    int nms_radius = 6;  // cells
    int max_detections = 200;

    void validate() const;
    // nms_radius = ceil(mean footprint diagonal / 2) in cells.
    static DecoderConfig defaults_for(const MeanDims& mean, const VoxelGridSpec& grid);
};

// Circular centroid of the window of `radius` bins around the argmax,
// in [0, 2 pi). Throws DegenerateVector when no bin is positive.
double decode_csl(std::span<const float> bins, int radius = kCslRadius);

// Peaks of the confidence map (8-neighbour local maxima, plateau ties to the
// row-major first cell) at or above the threshold, greedily suppressed within
// nms_radius, sorted by descending score. Cells whose orientation column is
// all zero decode with yaw 0.
std::vector<Detection> decode(const TargetMaps& maps, const VoxelGridSpec& grid,
                              const MeanDims& mean, const BevScale& scale,
                              const DecoderConfig& cfg, int csl_radius = kCslRadius);

}  // namespace vfa
