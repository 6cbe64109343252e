#pragma once

#include <optional>

#include <Eigen/Core>

namespace vfa {

using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Vec3 = Eigen::Vector3d;

// Cameras at or behind this depth (meters, camera frame) do not see a point.
inline constexpr double kDepthEpsilon = 1e-6;

struct WorldPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    bool operator==(const WorldPoint&) const = default;
};

struct ImagePoint {
    double u = 0.0;
    double v = 0.0;
};

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    double skew = 0.0;

    Mat3 matrix() const;
    // Rejects non-positive focal lengths and non-finite entries.
    void validate() const;
    // Accepts an upper-triangular K (normalized so K(2,2) == 1).
    static Intrinsics from_matrix(const Mat3& K);
};

// World-to-camera rigid transform: X_cam = R * X_world + t.
class Extrinsics {
public:
    Extrinsics();
    Extrinsics(const Mat3& R, const Vec3& t);

    const Mat3& rotation() const { return R_; }
    const Vec3& translation() const { return t_; }
    // Camera center in world coordinates.
    Vec3 center() const { return -R_.transpose() * t_; }

    // Camera at `eye` looking at `target`, image v axis pointing down.
    static Extrinsics look_at(const Vec3& eye, const Vec3& target,
                              const Vec3& world_up = Vec3::UnitZ());

private:
    Mat3 R_;
    Vec3 t_;
};

class Camera {
public:
    Camera(int id, Intrinsics intrinsics, Extrinsics extrinsics, int image_width,
           int image_height);

    int id() const { return id_; }
    const Intrinsics& intrinsics() const { return intrinsics_; }
    const Extrinsics& extrinsics() const { return extrinsics_; }
    int image_width() const { return width_; }
    int image_height() const { return height_; }
    const Mat34& projection() const { return P_; }

    // Depth of a world point along the optical axis.
    double depth(const WorldPoint& p) const;
    bool contains(const ImagePoint& q) const;

private:
    int id_;
    Intrinsics intrinsics_;
    Extrinsics extrinsics_;
    int width_;
    int height_;
    Mat34 P_;
};

// Dehomogenized K[R|t](x, y, z, 1). Empty when the point is at or behind the
// image plane (depth <= kDepthEpsilon).
std::optional<ImagePoint> project_point(const Camera& camera, const WorldPoint& p);

// Homography from plane z = plane_height (coordinates (x, y, 1)) to homogeneous
// pixels: columns 1, 2 and plane_height * column 3 + column 4 of P.
// Throws SingularHomography when |det H| < 1e-12.
Mat3 ground_homography(const Camera& camera, double plane_height);

// Intersection of the viewing ray through `pt` with plane z = plane_height.
// Empty when the ray is parallel to the plane or meets it behind the camera.
std::optional<WorldPoint> backproject_to_plane(const Camera& camera, const ImagePoint& pt,
                                               double plane_height);

}  // namespace vfa
