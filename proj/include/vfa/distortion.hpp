#pragma once

#include <vector>

#include "vfa/scenegen.hpp"
#include "vfa/voxel.hpp"

namespace vfa {

// Compares where the features of an object's vertical axis land on the BEV
// grid under three aggregation schemes: one ground-plane homography, a stack
// of plane homographies, and VFA.
struct DistortionConfig {
    VoxelGridSpec grid = VoxelGridSpec::multiviewc();
    std::vector<double> multi_heights{0.0, 0.4, 0.8, 1.2};
    int axis_samples = 16;          // points along each object's vertical axis
    double response_fraction = 0.5; // centroid over cells >= fraction * peak
    RenderConfig render;

    void validate() const;
};

struct MethodDistortion {
    double spread = 0.0;                // RMS distance of landings from their mean, meters
    double centroid_displacement = 0.0; // |mean landing - true center|, meters
    bool has_response = false;
    double response_error = 0.0;        // |response centroid - true center|, meters
    double response_x = 0.0;
    double response_y = 0.0;
};

struct ObjectDistortion {
    int id = 0;
    std::vector<int> visible_views;  // all 8 corners inside the image
    bool unoccluded = false;         // no nearer object overlaps it in any visible view
    MethodDistortion single;
    MethodDistortion multi;
    MethodDistortion vfa;

    bool ordered() const {
        return vfa.spread < multi.spread && multi.spread < single.spread;
    }
};

struct DistortionReport {
    std::vector<ObjectDistortion> objects;
    // One-channel BEV responses (mean over views of the channel max), summed
    // over planes or layers.
    GroundFeature single_map;
    GroundFeature multi_map;
    GroundFeature vfa_map;
};

// Geometry-only landings of the samples on one object's vertical axis, seen
// from one camera. Empty when the camera does not see every sample.
struct AxisLandings {
    std::vector<WorldPoint> single;
    std::vector<WorldPoint> multi;
    std::vector<WorldPoint> vfa;
};
AxisLandings axis_landings(const Camera& camera, const GroundTruthObject& o,
                           const ProjectionTable& table, std::size_t camera_index,
                           const DistortionConfig& cfg);

bool object_fully_visible(const Camera& camera, const GroundTruthObject& o);

DistortionReport analyze_distortion(const Scene& scene, const DistortionConfig& cfg);

}  // namespace vfa
