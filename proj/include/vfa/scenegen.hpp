#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vfa/encoding.hpp"
#include "vfa/geometry.hpp"
#include "vfa/voxel.hpp"

namespace vfa {

// Synthetic farm modelled on MultiviewC: 39 m x 39 m, seven 1280 x 720
// cameras (four corners at 6 m, three on a trough along the south edge at
// 4 m), fifteen cattle-sized boxes.
struct SceneConfig {
    double extent_x = 39.0;
    double extent_y = 39.0;
    int n_cameras = 7;
    int n_objects = 15;
    double length_min = 2.48;
    double length_max = 2.78;
    double width_min = 1.1;
    double width_max = 1.5;
    double height_min = 1.1;
    double height_max = 1.5;
    int image_width = 1280;
    int image_height = 720;
    double focal = 640.0;  // pixels
    double corner_camera_height = 6.0;
    double trough_camera_height = 4.0;
    double min_separation = 3.2;  // meters between centers
    int max_attempts = 100000;
    std::uint64_t seed = 0;
    int frame = 0;

    void validate() const;
};

struct Scene {
    std::vector<Camera> cameras;
    std::vector<GroundTruthObject> objects;
    int frame = 0;
};

inline constexpr int kMaxRigCameras = 7;

// The first n_cameras of: corners (0,0), (X,0), (X,Y), (0,Y), then three
// trough cameras at y = 0 looking north.
std::vector<Camera> make_rig(const SceneConfig& cfg);

// Deterministic in cfg (seed included). Throws PlacementFailure when the
// minimum-separation rejection sampling exceeds max_attempts.
Scene generate_scene(const SceneConfig& cfg);

// Corner k in [0, 8) of an object box: bit 0 +l/2, bit 1 +w/2, bit 2 top.
WorldPoint object_corner(const GroundTruthObject& o, int k);

struct RenderConfig {
    int channels = 16;
    int stride = 4;
    double noise = 0.02;      // amplitude of the off-signature channels
    std::uint64_t seed = 0;   // noise seed
};

// Feature vector painted for the object at `index`: 1 on channel
// index % channels, deterministic noise in [0, noise) elsewhere.
std::vector<float> object_signature(std::size_t index, const RenderConfig& cfg);

// Analytic stand-in for a CNN: each object paints its projected box hull in
// every view with its signature, far to near (painter's order by depth of the
// box center). Objects with any corner behind a camera are skipped in it.
std::vector<FeatureMap> render_feature_views(const Scene& scene, const RenderConfig& cfg);

// Pixel-center coordinate of feature pixel (x, y) in full-resolution pixels.
ImagePoint feature_pixel_center(int x, int y, int stride);

// Convex hull of an object's projected corners in image pixels; empty when
// a corner is behind the camera.
std::vector<ImagePoint> projected_hull(const Camera& camera, const GroundTruthObject& o);
bool point_in_convex(std::span<const ImagePoint> hull, const ImagePoint& q);

// Writes calibration.json, annotations.json and, when given, one
// features/cam<i>.tensor per view.
void export_scene(const Scene& scene, const std::filesystem::path& dir,
                  std::span<const FeatureMap> features = {});

}  // namespace vfa
