#include "vfa/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "vfa/error.hpp"

namespace vfa {

namespace {

constexpr double kOrthonormalTol = 1e-9;
constexpr double kSingularDet = 1e-12;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

Mat3 Intrinsics::matrix() const {
    Mat3 K;
    K << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return K;
}

void Intrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw InvalidArgument("intrinsics: focal lengths must be positive");
    if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy) ||
        !std::isfinite(skew))
        throw InvalidArgument("intrinsics: non-finite entry");
}

Intrinsics Intrinsics::from_matrix(const Mat3& K) {
    if (!all_finite(K) || K(2, 2) == 0.0)
        throw InvalidArgument("intrinsics: K must be finite with K[2][2] != 0");
    const Mat3 Kn = K / K(2, 2);
    if (Kn(1, 0) != 0.0 || Kn(2, 0) != 0.0 || Kn(2, 1) != 0.0)
        throw InvalidArgument("intrinsics: K must be upper triangular");
    Intrinsics in{Kn(0, 0), Kn(1, 1), Kn(0, 2), Kn(1, 2), Kn(0, 1)};
    in.validate();
    return in;
}

Extrinsics::Extrinsics() : R_(Mat3::Identity()), t_(Vec3::Zero()) {}

Extrinsics::Extrinsics(const Mat3& R, const Vec3& t) : R_(R), t_(t) {
    if (!all_finite(R) || !all_finite(t))
        throw InvalidArgument("extrinsics: non-finite entry");
    const double ortho_err = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho_err >= kOrthonormalTol)
        throw InvalidArgument("extrinsics: R is not orthonormal (err " +
                              std::to_string(ortho_err) + ")");
    if (std::abs(R.determinant() - 1.0) > kOrthonormalTol)
        throw InvalidArgument("extrinsics: det(R) != 1");
}

Extrinsics Extrinsics::look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(world_up);
    if (right.norm() < 1e-12)
        throw InvalidArgument("look_at: viewing direction parallel to up vector");
    right.normalize();
    const Vec3 down = forward.cross(right);
    Mat3 R;
    R.row(0) = right.transpose();
    R.row(1) = down.transpose();
    R.row(2) = forward.transpose();
    // Re-orthonormalize to remove accumulated rounding.
    Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    R = svd.matrixU() * svd.matrixV().transpose();
    return Extrinsics(R, -R * eye);
}

Camera::Camera(int id, Intrinsics intrinsics, Extrinsics extrinsics, int image_width,
               int image_height)
    : id_(id),
      intrinsics_(intrinsics),
      extrinsics_(std::move(extrinsics)),
      width_(image_width),
      height_(image_height) {
    intrinsics_.validate();
    if (width_ < 1 || height_ < 1)
        throw InvalidArgument("camera: image size must be at least 1x1");
    Mat34 Rt;
    Rt.leftCols<3>() = extrinsics_.rotation();
    Rt.col(3) = extrinsics_.translation();
    P_ = intrinsics_.matrix() * Rt;
}

double Camera::depth(const WorldPoint& p) const {
    const Vec3 xc = extrinsics_.rotation() * Vec3(p.x, p.y, p.z) + extrinsics_.translation();
    return xc.z();
}

bool Camera::contains(const ImagePoint& q) const {
    return q.u >= 0.0 && q.v >= 0.0 && q.u <= width_ - 1.0 && q.v <= height_ - 1.0;
}

std::optional<ImagePoint> project_point(const Camera& camera, const WorldPoint& p) {
    const Vec3 h = camera.projection() * Eigen::Vector4d(p.x, p.y, p.z, 1.0);
    // K's last row is (0, 0, 1), so the third homogeneous coordinate is depth.
    if (h.z() <= kDepthEpsilon) return std::nullopt;
    return ImagePoint{h.x() / h.z(), h.y() / h.z()};
}

Mat3 ground_homography(const Camera& camera, double plane_height) {
    const Mat34& P = camera.projection();
    Mat3 H;
    H.col(0) = P.col(0);
    H.col(1) = P.col(1);
    H.col(2) = plane_height * P.col(2) + P.col(3);
    if (std::abs(H.determinant()) < kSingularDet)
        throw SingularHomography("camera " + std::to_string(camera.id()) +
                                 ": homography to plane z=" + std::to_string(plane_height) +
                                 " is singular");
    return H;
}

std::optional<WorldPoint> backproject_to_plane(const Camera& camera, const ImagePoint& pt,
                                               double plane_height) {
    const Mat3& R = camera.extrinsics().rotation();
    const Vec3 center = camera.extrinsics().center();
    const Vec3 ray_cam = camera.intrinsics().matrix().triangularView<Eigen::Upper>().solve(
        Vec3(pt.u, pt.v, 1.0));
    const Vec3 ray = R.transpose() * ray_cam;
    if (std::abs(ray.z()) < 1e-12) return std::nullopt;
    // ray_cam has unit depth, so s is the depth of the intersection.
    const double s = (plane_height - center.z()) / ray.z();
    if (s <= kDepthEpsilon) return std::nullopt;
    const Vec3 x = center + s * ray;
    return WorldPoint{x.x(), x.y(), plane_height};
}

}  // namespace vfa
