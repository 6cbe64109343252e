#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "oracles.hpp"
#include "vfa/decoding.hpp"
#include "vfa/error.hpp"
#include "vfa/scenegen.hpp"

using namespace vfa;
using std::numbers::pi;

namespace {

const VoxelGridSpec kGrid = VoxelGridSpec::multiviewc();
const BevScale kScale{};
const MeanDims kMean{2.63, 1.3, 1.3};

TargetMaps empty_maps(int h, int w) {
    TargetMaps m;
    m.confidence = GroundFeature(1, h, w);
    m.offset = GroundFeature(2, h, w);
    m.dimension = GroundFeature(3, h, w);
    m.orientation = GroundFeature(8, h, w);
    m.mask = GroundFeature(1, h, w);
    return m;
}

}  // namespace

TEST_CASE("decode inverts encode on seeded scenes") {
    const DecoderConfig cfg{0.5, DecoderConfig::defaults_for(kMean, kGrid).nms_radius, 200};
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        SceneConfig sc;
        sc.seed = seed;
        const Scene scene = generate_scene(sc);
        const TargetMaps maps = encode_targets(scene.objects, kGrid, kMean);
        const auto dets = decode(maps, kGrid, kMean, kScale, cfg);
        REQUIRE(dets.size() == scene.objects.size());
        for (const auto& o : scene.objects) {
            const Detection* best = nullptr;
            double bd = 1e9;
            for (const auto& d : dets) {
                const double e = std::hypot(d.x - o.x, d.y - o.y);
                if (e < bd) {
                    bd = e;
                    best = &d;
                }
            }
            REQUIRE(best != nullptr);
            CHECK(bd * kScale.units_per_meter <= kScale.gamma / 2);
            CHECK(best->l == doctest::Approx(o.l).epsilon(1e-6));
            CHECK(best->w == doctest::Approx(o.w).epsilon(1e-6));
            CHECK(best->h == doctest::Approx(o.h).epsilon(1e-6));
            CHECK(oracle::angle_diff(best->yaw, o.yaw) <= 0.5 * pi / 180.0);
            CHECK(best->score == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("plateau ties go to the row-major first cell") {
    TargetMaps m = empty_maps(5, 6);
    m.confidence.at(0, 2, 2) = 0.8f;
    m.confidence.at(0, 2, 3) = 0.8f;
    m.confidence.at(0, 3, 2) = 0.8f;
    const auto dets = decode(m, {WorldPoint{}, 6, 5, 1, 1, 1, 1}, kMean, {1.0, 1.0}, {0.5, 1, 10});
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].x == doctest::Approx(2.0));
    CHECK(dets[0].y == doctest::Approx(2.0));
    CHECK(dets[0].yaw == 0.0);  // empty orientation column
    CHECK(dets[0].l == doctest::Approx(kMean.l));
}

TEST_CASE("threshold, suppression radius and detection cap") {
    TargetMaps m = empty_maps(10, 20);
    m.confidence.at(0, 5, 2) = 0.9f;
    m.confidence.at(0, 5, 5) = 0.7f;   // 3 cells from the first
    m.confidence.at(0, 5, 12) = 0.6f;
    m.confidence.at(0, 5, 17) = 0.3f;  // below threshold
    const VoxelGridSpec g{WorldPoint{}, 20, 10, 1, 1, 1, 1};
    const BevScale s{1.0, 1.0};
    CHECK(decode(m, g, kMean, s, {0.5, 2, 10}).size() == 3);
    const auto sup = decode(m, g, kMean, s, {0.5, 3, 10});
    REQUIRE(sup.size() == 2);
    CHECK(sup[0].score == doctest::Approx(0.9));
    CHECK(sup[1].score == doctest::Approx(0.6));
    CHECK(decode(m, g, kMean, s, {0.5, 2, 1}).size() == 1);
    CHECK(decode(m, g, kMean, s, {0.2, 2, 10}).size() == 4);
    CHECK(decode(m, g, kMean, s, {0.95, 2, 10}).empty());
}

TEST_CASE("decoder argument checks") {
    CHECK_THROWS_AS(DecoderConfig({1.5, 3, 10}).validate(), InvalidArgument);
    CHECK_THROWS_AS(DecoderConfig({0.5, 0, 10}).validate(), InvalidArgument);
    const std::vector<float> zero(36, 0.0f);
    CHECK_THROWS_AS(decode_csl(zero, 3), DegenerateVector);
    TargetMaps m = empty_maps(5, 6);
    CHECK_THROWS_AS(decode(m, kGrid, kMean, kScale, {}), ShapeMismatch);
    CHECK(DecoderConfig::defaults_for(kMean, kGrid).nms_radius == 6);
}

TEST_CASE("decode_csl recovers sub-bin angles from a symmetric window") {
    std::vector<float> bins(360, 0.0f);
    // Two equal bins at 10 and 11 degrees average to 10.5 degrees.
    bins[10] = 1.0f;
    bins[11] = 1.0f;
    CHECK(decode_csl(bins) * 180.0 / pi == doctest::Approx(10.5));
    std::fill(bins.begin(), bins.end(), 0.0f);
    bins[359] = 1.0f;
    bins[0] = 1.0f;
    const double wrap = decode_csl(bins) * 180.0 / pi;
    CHECK(wrap == doctest::Approx(359.5));
}
