#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <numbers>

#include "oracles.hpp"
#include "vfa/error.hpp"
#include "vfa/io.hpp"
#include "vfa/scenegen.hpp"

using namespace vfa;

namespace {

SceneConfig small_config(std::uint64_t seed) {
    SceneConfig sc;
    sc.extent_x = 12.0;
    sc.extent_y = 12.0;
    sc.n_objects = 4;
    sc.image_width = 160;
    sc.image_height = 96;
    sc.focal = 80.0;
    sc.seed = seed;
    return sc;
}

// q inside the convex hull of pts: on the inner side of every supporting line.
bool in_hull_brute(const std::vector<ImagePoint>& pts, const ImagePoint& q) {
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double ex = pts[j].u - pts[i].u, ey = pts[j].v - pts[i].v;
            if (std::hypot(ex, ey) < 1e-12) continue;
            bool supporting = true;
            for (const auto& p : pts)
                if (ex * (p.v - pts[i].v) - ey * (p.u - pts[i].u) < -1e-9) {
                    supporting = false;
                    break;
                }
            if (supporting && ex * (q.v - pts[i].v) - ey * (q.u - pts[i].u) < 0) return false;
        }
    return true;
}

}  // namespace

TEST_CASE("scenes are deterministic in the seed") {
    const Scene a = generate_scene(small_config(7));
    const Scene b = generate_scene(small_config(7));
    const Scene c = generate_scene(small_config(8));
    CHECK(a.objects == b.objects);
    CHECK(a.objects != c.objects);
    RenderConfig rc;
    rc.stride = 2;
    CHECK(render_feature_views(a, rc)[2].data == render_feature_views(b, rc)[2].data);
}

TEST_CASE("empty scenes and placement failure") {
    SceneConfig sc = small_config(1);
    sc.n_objects = 0;
    const Scene s = generate_scene(sc);
    CHECK(s.objects.empty());
    CHECK(s.cameras.size() == 7);
    for (const auto& m : render_feature_views(s, {})) {
        bool all_zero = true;
        for (float v : m.data) all_zero = all_zero && v == 0.0f;
        CHECK(all_zero);
    }
    sc.n_objects = 40;
    sc.max_attempts = 500;
    CHECK_THROWS_AS(generate_scene(sc), PlacementFailure);
    sc.n_objects = -1;
    CHECK_THROWS_AS(generate_scene(sc), InvalidArgument);
}

TEST_CASE("object statistics over 1000 placements") {
    SceneConfig sc;
    std::vector<GroundTruthObject> all;
    for (std::uint64_t seed = 0; seed < 67; ++seed) {
        sc.seed = seed;
        const Scene s = generate_scene(sc);
        for (std::size_t i = 0; i < s.objects.size(); ++i)
            for (std::size_t j = i + 1; j < s.objects.size(); ++j)
                CHECK(std::hypot(s.objects[i].x - s.objects[j].x, s.objects[i].y - s.objects[j].y) >=
                      sc.min_separation);
        all.insert(all.end(), s.objects.begin(), s.objects.end());
    }
    REQUIRE(all.size() >= 1000);
    double ml = 0, mw = 0, mh = 0, my = 0;
    const double margin = 0.5 * std::hypot(sc.length_max, sc.width_max);
    for (const auto& o : all) {
        CHECK(o.l >= sc.length_min);
        CHECK(o.l <= sc.length_max);
        CHECK(o.w >= sc.width_min);
        CHECK(o.w <= sc.width_max);
        CHECK(o.h >= sc.height_min);
        CHECK(o.h <= sc.height_max);
        CHECK(o.x >= margin);
        CHECK(o.x <= sc.extent_x - margin);
        CHECK(o.y >= margin);
        CHECK(o.y <= sc.extent_y - margin);
        CHECK(o.yaw >= 0.0);
        CHECK(o.yaw < 2 * std::numbers::pi);
        ml += o.l;
        mw += o.w;
        mh += o.h;
        my += o.yaw;
    }
    const double n = static_cast<double>(all.size());
    // Uniform means with a 5-sigma allowance (sd of a uniform on [a, b] is (b - a) / sqrt(12)).
    const auto near_mid = [n](double mean, double a, double b) {
        return std::abs(mean - 0.5 * (a + b)) <= 5.0 * (b - a) / std::sqrt(12.0 * n);
    };
    CHECK(near_mid(ml / n, sc.length_min, sc.length_max));
    CHECK(near_mid(mw / n, sc.width_min, sc.width_max));
    CHECK(near_mid(mh / n, sc.height_min, sc.height_max));
    CHECK(near_mid(my / n, 0.0, 2 * std::numbers::pi));
}

TEST_CASE("rig layout") {
    const SceneConfig sc;
    const auto cams = make_rig(sc);
    REQUIRE(cams.size() == 7);
    CHECK((cams[0].extrinsics().center() - Vec3(0, 0, 6)).norm() < 1e-9);
    CHECK((cams[2].extrinsics().center() - Vec3(39, 39, 6)).norm() < 1e-9);
    CHECK((cams[5].extrinsics().center() - Vec3(19.5, 0, 4)).norm() < 1e-9);
    for (const auto& c : cams) {
        CHECK(c.image_width() == 1280);
        CHECK(c.intrinsics().cx == doctest::Approx(639.5));
        const auto q = project_point(c, {19.5, 19.5, 0.0});
        REQUIRE(q);
        CHECK(c.contains(*q));
    }
    SceneConfig three = sc;
    three.n_cameras = 3;
    CHECK(make_rig(three).size() == 3);
    three.n_cameras = 8;
    CHECK_THROWS_AS(make_rig(three), InvalidArgument);
}

TEST_CASE("signatures") {
    RenderConfig rc;
    const auto s3 = object_signature(3, rc);
    REQUIRE(s3.size() == 16);
    CHECK(s3[3] == 1.0f);
    for (int c = 0; c < 16; ++c)
        if (c != 3) {
            CHECK(s3[c] >= 0.0f);
            CHECK(s3[c] < rc.noise);
        }
    CHECK(object_signature(19, rc)[3] == 1.0f);
    CHECK(object_signature(3, rc) == s3);
}

TEST_CASE("renderer paints the nearest containing hull") {
    for (std::uint64_t seed : {2u, 5u}) {
        const Scene s = generate_scene(small_config(seed));
        RenderConfig rc;
        rc.stride = 2;
        rc.channels = 6;
        const auto maps = render_feature_views(s, rc);
        REQUIRE(maps.size() == s.cameras.size());
        std::size_t painted = 0;
        for (std::size_t c = 0; c < s.cameras.size(); ++c) {
            const Camera& cam = s.cameras[c];
            std::vector<std::vector<ImagePoint>> corners(s.objects.size());
            for (std::size_t i = 0; i < s.objects.size(); ++i)
                for (int k = 0; k < 8; ++k) {
                    const auto q = oracle::project(cam, object_corner(s.objects[i], k));
                    if (q.w <= kDepthEpsilon) {
                        corners[i].clear();
                        break;
                    }
                    corners[i].push_back({q.u, q.v});
                }
            for (int y = 0; y < maps[c].height; ++y)
                for (int x = 0; x < maps[c].width; ++x) {
                    const ImagePoint q{x * 2.0 + 0.5, y * 2.0 + 0.5};
                    int winner = -1;
                    double best = 1e30;
                    for (std::size_t i = 0; i < s.objects.size(); ++i) {
                        if (corners[i].empty() || !in_hull_brute(corners[i], q)) continue;
                        const auto& o = s.objects[i];
                        const double d = oracle::project(cam, {o.x, o.y, 0.5 * o.h}).w;
                        if (d < best) {
                            best = d;
                            winner = static_cast<int>(i);
                        }
                    }
                    const auto sig = winner >= 0 ? object_signature(winner, rc) : std::vector<float>(6, 0.0f);
                    for (int ch = 0; ch < 6; ++ch) REQUIRE(maps[c].at(ch, y, x) == sig[ch]);
                    painted += winner >= 0;
                }
        }
        CHECK(painted > 0);
    }
}

TEST_CASE("objects behind a camera are not painted in it") {
    Scene s;
    const auto ext = Extrinsics::look_at(Vec3(5, 5, 2), Vec3(10, 5, 0));
    s.cameras.emplace_back(0, Intrinsics{80, 80, 79.5, 47.5}, ext, 160, 96);
    s.objects.push_back({0, 4.0, 5.0, 2.6, 1.3, 1.3, 0.0});  // straddles the camera
    s.objects.push_back({1, 1.0, 5.0, 2.6, 1.3, 1.3, 0.0});  // fully behind
    RenderConfig rc;
    rc.stride = 2;
    const auto maps = render_feature_views(s, rc);
    for (float v : maps[0].data) REQUIRE(v == 0.0f);
    CHECK(projected_hull(s.cameras[0], s.objects[0]).empty());
}

TEST_CASE("export writes calibration and annotations that read back exactly") {
    const Scene s = generate_scene(small_config(3));
    RenderConfig rc;
    rc.stride = 4;
    const auto maps = render_feature_views(s, rc);
    const auto dir = std::filesystem::temp_directory_path() / "vfa_test_export";
    std::filesystem::remove_all(dir);
    export_scene(s, dir, maps);
    const auto cams = read_calibration(dir / "calibration.json");
    REQUIRE(cams.size() == s.cameras.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        CHECK(cams[i].projection() == s.cameras[i].projection());
        CHECK(cams[i].image_width() == s.cameras[i].image_width());
    }
    const auto frames = read_annotations(dir / "annotations.json");
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].objects == s.objects);
    const auto f0 = FeatureMap::from_tensor(read_tensor(dir / "features" / "cam0.tensor"));
    CHECK(f0.data == maps[0].data);
    std::filesystem::remove_all(dir);
}
