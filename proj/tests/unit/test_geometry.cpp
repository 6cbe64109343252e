#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "vfa/error.hpp"
#include "vfa/geometry.hpp"

using namespace vfa;

namespace {

Camera random_camera(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> f(300.0, 1500.0), c(200.0, 800.0), sk(-2.0, 2.0), t(-5.0, 5.0);
    Intrinsics in{f(rng), f(rng), c(rng), c(rng), sk(rng)};
    Vec3 tv(t(rng), t(rng), std::uniform_real_distribution<double>(8.0, 20.0)(rng));
    return Camera(0, in, Extrinsics(oracle::random_rotation(rng), tv), 1280, 720);
}

}  // namespace

TEST_CASE("projection matches the hand-built K[R|t] product") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> p(-3.0, 3.0);
    for (int i = 0; i < 500; ++i) {
        const Camera cam = random_camera(rng);
        const WorldPoint w{p(rng), p(rng), p(rng)};
        const auto want = oracle::project(cam, w);
        const auto got = project_point(cam, w);
        if (want.w <= kDepthEpsilon) {
            CHECK_FALSE(got.has_value());
            continue;
        }
        REQUIRE(got.has_value());
        CHECK(got->u == doctest::Approx(want.u).epsilon(1e-12));
        CHECK(got->v == doctest::Approx(want.v).epsilon(1e-12));
        CHECK(cam.depth(w) == doctest::Approx(want.w));
    }
}

TEST_CASE("points behind or on the image plane do not project") {
    const Camera cam(0, {500, 500, 320, 240}, Extrinsics(), 640, 480);
    CHECK_FALSE(project_point(cam, {0, 0, -1}).has_value());
    CHECK_FALSE(project_point(cam, {1, 1, 0}).has_value());
    CHECK_FALSE(project_point(cam, {0, 0, 5e-7}).has_value());
    CHECK(project_point(cam, {0, 0, 2e-6}).has_value());
}

TEST_CASE("principal point is the image of the optical axis") {
    const Camera cam(0, {800, 700, 300.5, 200.25}, Extrinsics(), 640, 480);
    const auto q = project_point(cam, {0, 0, 7});
    REQUIRE(q);
    CHECK(q->u == doctest::Approx(300.5));
    CHECK(q->v == doctest::Approx(200.25));
}

TEST_CASE("backprojection round trip on several planes") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> p(-2.0, 2.0), h(-1.0, 1.5);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const Camera cam = random_camera(rng);
        const WorldPoint w{p(rng), p(rng), h(rng)};
        const auto q = project_point(cam, w);
        if (!q) continue;
        const auto back = backproject_to_plane(cam, *q, w.z);
        if (!back) continue;
        const auto again = project_point(cam, *back);
        REQUIRE(again);
        CHECK(std::hypot(again->u - q->u, again->v - q->v) < 1e-6);
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("backprojection of a ray parallel to the plane is empty") {
    // Camera looking along +x from height 2; the principal ray is horizontal.
    const auto ext = Extrinsics::look_at(Vec3(0, 0, 2), Vec3(10, 0, 2));
    const Camera cam(0, {500, 500, 320, 240}, ext, 640, 480);
    CHECK_FALSE(backproject_to_plane(cam, {320, 240}, 0.0).has_value());
    // Rays above the horizon hit z = 0 only behind the camera.
    CHECK_FALSE(backproject_to_plane(cam, {320, 10}, 0.0).has_value());
    CHECK(backproject_to_plane(cam, {320, 470}, 0.0).has_value());
}

TEST_CASE("ground homography maps plane points like the full projection") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> p(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const Camera cam = random_camera(rng);
        const double z = p(rng) * 0.5;
        Mat3 H;
        try {
            H = ground_homography(cam, z);
        } catch (const SingularHomography&) {
            continue;
        }
        const WorldPoint w{p(rng), p(rng), z};
        const auto want = oracle::project(cam, w);
        if (want.w <= kDepthEpsilon) continue;
        const Vec3 q = H * Vec3(w.x, w.y, 1.0);
        CHECK(q.x() / q.z() == doctest::Approx(want.u).epsilon(1e-10));
        CHECK(q.y() / q.z() == doctest::Approx(want.v).epsilon(1e-10));
    }
}

TEST_CASE("a camera inside the plane has a singular homography") {
    // Optical center at z = 1 gives a rank-deficient map of plane z = 1.
    const auto ext = Extrinsics::look_at(Vec3(0, 0, 1), Vec3(5, 0, 0));
    const Camera cam(0, {500, 500, 320, 240}, ext, 640, 480);
    CHECK_THROWS_AS(ground_homography(cam, 1.0), SingularHomography);
    CHECK_NOTHROW(ground_homography(cam, 0.0));
}

TEST_CASE("look_at points the optical axis at the target with v down") {
    const Vec3 eye(1, 2, 6), target(10, 12, 0);
    const auto ext = Extrinsics::look_at(eye, target);
    CHECK((ext.center() - eye).norm() < 1e-12);
    CHECK((ext.rotation() * ext.rotation().transpose() - Mat3::Identity()).norm() < 1e-12);
    CHECK(ext.rotation().determinant() == doctest::Approx(1.0));
    const Camera cam(0, {500, 500, 320, 240}, ext, 640, 480);
    const auto c = project_point(cam, {target.x(), target.y(), target.z()});
    REQUIRE(c);
    CHECK(c->u == doctest::Approx(320.0));
    CHECK(c->v == doctest::Approx(240.0));
    // A point above the target appears higher in the image (smaller v).
    const auto up = project_point(cam, {target.x(), target.y(), 1.0});
    REQUIRE(up);
    CHECK(up->v < c->v);
}

TEST_CASE("intrinsics validation and matrix round trip") {
    CHECK_THROWS_AS(Intrinsics({0, 1, 0, 0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(Intrinsics({1, -1, 0, 0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(Intrinsics({1, 1, std::nan(""), 0}).validate(), InvalidArgument);
    const Intrinsics in{812.5, 790.25, 640.0, 360.5, 0.75};
    const Intrinsics back = Intrinsics::from_matrix(in.matrix() * 3.0);
    CHECK(back.fx == doctest::Approx(in.fx));
    CHECK(back.fy == doctest::Approx(in.fy));
    CHECK(back.cx == doctest::Approx(in.cx));
    CHECK(back.cy == doctest::Approx(in.cy));
    CHECK(back.skew == doctest::Approx(in.skew));
}

TEST_CASE("camera contains checks the pixel rectangle") {
    const Camera cam(0, {500, 500, 320, 240}, Extrinsics(), 640, 480);
    CHECK(cam.contains({0, 0}));
    CHECK(cam.contains({639.0, 479.0}));
    CHECK_FALSE(cam.contains({639.5, 10}));
    CHECK_FALSE(cam.contains({-1, 10}));
    CHECK_FALSE(cam.contains({10, 481}));
}
