#pragma once

#include <string>
#include <vector>

#include "vfa/decoding.hpp"
#include "vfa/encoding.hpp"
#include "vfa/metrics.hpp"
#include "vfa/scenegen.hpp"
#include "vfa/voxel.hpp"

namespace vfa {

// How the untrained head fuses one voxel's pooled features across views.
enum class ViewFusion { mean, median, min };

// Training-free detection head over VFA voxel features. Confidence per BEV
// cell is the max over channels of the layer mean of the view-fused voxel
// feature, so a column scores high only when one signature fills it; views
// whose box for the voxel is invalid are left out. The map is
// then Gaussian-smoothed so footprint plateaus peak at their center. Offsets
// come from the 3x3 confidence centroid, orientation from the principal axis
// of the unsmoothed blob within nms_radius, dimensions are the means.
struct HeadConfig {
    ViewFusion fusion = ViewFusion::median;
    double smoothing_sigma = 0.65;  // meters; 0 disables
    int csl_bins = kCslBins;
    int csl_radius = kCslRadius;
};

TargetMaps occupancy_head(const ProjectionTable& table, std::span<const VoxelFeature> voxels,
                          const HeadConfig& head, const DecoderConfig& decoder);

struct PipelineConfig {
    SceneConfig scene;  // frame f uses seed scene.seed + f
    RenderConfig render;
    VoxelGridSpec grid = VoxelGridSpec::multiviewc();
    HeadConfig head;
    DecoderConfig decoder;  // nms_radius <= 0 selects defaults_for(mean dims, grid)
    MatchConfig match;
    EncodeOptions encode;
    int frames = 4;

    void validate() const;
    // Mean dims of the scene's sampling ranges.
    MeanDims mean_dims() const;
    DecoderConfig effective_decoder() const;
};

struct FrameResult {
    int frame = 0;
    std::vector<GroundTruthObject> objects;
    std::vector<Detection> detections;
    double focal_loss = 0.0;        // head confidence against the encoded target
    double aggregate_seconds = 0.0; // aggregation plus head
};

struct PipelineResult {
    std::vector<FrameResult> frames;
    MetricsReport metrics;
    double mean_focal_loss = 0.0;
    double median_aggregate_seconds = 0.0;
};

// scene -> render -> aggregate -> head -> decode -> evaluate, per frame.
PipelineResult run_pipeline(const PipelineConfig& cfg);

enum class SweepParam { n_layers, voxel_height };
SweepParam parse_sweep_param(const std::string& name);
std::string to_string(SweepParam p);

struct SweepRow {
    double value = 0.0;
    int nz = 0;
    double voxel_h = 0.0;
    ClearMetrics clear;
    double mean_focal_loss = 0.0;
    double seconds_per_frame = 0.0;
};

// n_layers keeps the grid height fixed and splits it into `value` layers;
// voxel_height keeps the layer count and sets the layer thickness.
PipelineConfig sweep_point(const PipelineConfig& base, SweepParam param, double value,
                           double grid_height = 1.6);
std::vector<SweepRow> run_sweep(const PipelineConfig& base, SweepParam param,
                                std::span<const double> values, double grid_height = 1.6);

}  // namespace vfa
