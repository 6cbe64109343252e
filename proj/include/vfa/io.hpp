#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vfa/decoding.hpp"
#include "vfa/encoding.hpp"
#include "vfa/geometry.hpp"
#include "vfa/metrics.hpp"

namespace vfa {

// Calibration: {"cameras": [{"id", "image_size": [W, H], "K", "R", "t"}]},
// matrices row-major.
nlohmann::ordered_json calibration_to_json(std::span<const Camera> cameras);
std::vector<Camera> calibration_from_json(const nlohmann::json& j);
std::vector<Camera> read_calibration(const std::filesystem::path& path);
void write_calibration(const std::filesystem::path& path, std::span<const Camera> cameras);

struct AnnotatedFrame {
    int frame = 0;
    std::vector<GroundTruthObject> objects;
};

// Annotation: {"frame", "objects": [{"id", "center": [x, y], "dims": [l, w, h], "yaw"}]}.
nlohmann::ordered_json annotation_to_json(const AnnotatedFrame& frame);
AnnotatedFrame annotation_from_json(const nlohmann::json& j);
// Accepts a single frame document, an array of them, or JSON lines.
std::vector<AnnotatedFrame> read_annotations(const std::filesystem::path& path);
void write_annotation(const std::filesystem::path& path, const AnnotatedFrame& frame);
void write_annotations(const std::filesystem::path& path, std::span<const AnnotatedFrame> frames);

struct FrameDetection {
    int frame = 0;
    int id = 0;
    Detection detection;
};

// Detection JSON lines: annotation object schema plus "frame" and "score".
void write_detections(std::ostream& out, std::span<const FrameDetection> dets);
std::vector<FrameDetection> read_detections(std::istream& in);
std::vector<FrameDetection> read_detections(const std::filesystem::path& path);

nlohmann::ordered_json metrics_to_json(const MetricsReport& report, const MatchConfig& cfg);
// Columns: iou_threshold, rank, score, precision, recall, orientation_precision.
void write_pr_curve_csv(std::ostream& out, const MetricsReport& report);

// {"origin": [x, y, z], "size": [nx, ny, nz], "voxel": [l, w, h]}.
nlohmann::ordered_json grid_to_json(const VoxelGridSpec& grid);
VoxelGridSpec grid_from_json(const nlohmann::json& j);

// Sidecar for a target-map directory: frame, grid, mean dims and BEV scale.
struct TargetMeta {
    int frame = 0;
    VoxelGridSpec grid;
    MeanDims mean;
    BevScale scale;
};
nlohmann::ordered_json target_meta_to_json(const TargetMeta& meta);
TargetMeta target_meta_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

}  // namespace vfa
