#pragma once

#include <array>
#include <span>
#include <vector>

#include "vfa/decoding.hpp"
#include "vfa/encoding.hpp"

namespace vfa {

enum class ApInterpolation { eleven_point, forty_point, all_point };

struct MatchConfig {
    double distance_threshold = 0.5;  // meters, for MODA / MODP
    std::vector<double> iou_thresholds{0.25, 0.5};
    ApInterpolation interpolation = ApInterpolation::eleven_point;

    void validate() const;
};

// ---------------------------------------------------------------------------
// 2D localization (CLEAR detection metrics)
// ---------------------------------------------------------------------------

struct MatchedPair {
    int detection;
    int ground_truth;
    double distance;
};

struct FrameMatching {
    std::vector<MatchedPair> pairs;
    std::vector<int> false_positives;  // detection indices
    std::vector<int> false_negatives;  // ground-truth indices
    std::size_t ground_truth_count = 0;

    double total_distance() const;
};

// One-to-one matching that maximizes the number of pairs within
// distance_threshold, then minimizes their total ground-plane distance.
FrameMatching match_frame(std::span<const Detection> dets,
                          std::span<const GroundTruthObject> gts, double distance_threshold);

struct ClearMetrics {
    double moda = 0.0;  // 1 - (FP + FN) / GT; negative when errors exceed GT
    double modp = 0.0;  // mean (1 - d / r) over true positives
    double precision = 0.0;
    double recall = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t gt = 0;
};

// Throws InvalidArgument when there is no ground truth at all.
ClearMetrics moda_modp(std::span<const FrameMatching> frames, double distance_threshold);

// ---------------------------------------------------------------------------
// 3D boxes
// ---------------------------------------------------------------------------

// Yaw-rotated box resting on z = z_bottom.
struct Box3D {
    double x = 0.0;
    double y = 0.0;
    double z_bottom = 0.0;
    double l = 1.0;
    double w = 1.0;
    double h = 1.0;
    double yaw = 0.0;

    static Box3D from(const Detection& d);
    static Box3D from(const GroundTruthObject& o);
    // Footprint corners, counter-clockwise.
    std::array<std::array<double, 2>, 4> footprint() const;
};

// Area of the intersection of two footprints (convex polygon clipping).
double footprint_intersection_area(const Box3D& a, const Box3D& b);

// Volumetric IoU of two yaw-rotated boxes. Throws DegenerateBox on
// non-positive dimensions.
double rotated_iou_3d(const Box3D& a, const Box3D& b);

// ---------------------------------------------------------------------------
// AP3D / AOS / OS
// ---------------------------------------------------------------------------

struct PrPoint {
    double score;
    double precision;
    double recall;
    double orientation_precision;  // sum of similarities over TPs / rank
};

struct ApResult {
    double iou_threshold = 0.0;
    double ap = 0.0;
    double aos = 0.0;
    double os = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::vector<PrPoint> curve;
};

// Orientation similarity (1 + cos(delta)) / 2.
double orientation_similarity(double yaw_a, double yaw_b);

// Interpolated area under a precision-recall curve; `precision` is indexed
// like `recall` (non-decreasing recall along the ranking).
double interpolated_ap(std::span<const double> recall, std::span<const double> precision,
                       ApInterpolation mode);

// Score-ranked sweep over all frames; a detection is a TP when its best
// rotated IoU with a still-unmatched ground truth of its frame reaches the
// threshold.
ApResult ap3d_aos_os(std::span<const std::vector<Detection>> dets,
                     std::span<const std::vector<GroundTruthObject>> gts, double iou_threshold,
                     ApInterpolation mode);

struct MetricsReport {
    ClearMetrics clear;
    std::vector<ApResult> per_threshold;
    double os = 0.0;  // at the first IoU threshold
};

MetricsReport evaluate(std::span<const std::vector<Detection>> dets,
                       std::span<const std::vector<GroundTruthObject>> gts,
                       const MatchConfig& cfg = {});

}  // namespace vfa
