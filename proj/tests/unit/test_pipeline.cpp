#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vfa/error.hpp"
#include "vfa/pipeline.hpp"

using namespace vfa;

TEST_CASE("the occupancy head finds objects in a rendered frame") {
    PipelineConfig cfg;
    cfg.frames = 2;
    const PipelineResult r = run_pipeline(cfg);
    REQUIRE(r.frames.size() == 2);
    CHECK(r.frames[1].objects.size() == 15);
    CHECK(r.metrics.clear.gt == 30);
    CHECK(r.metrics.clear.moda >= 0.9);
    CHECK(r.metrics.clear.modp > 0.5);
    CHECK(r.mean_focal_loss > 0.0);
    for (const auto& f : r.frames)
        for (const auto& d : f.detections) {
            CHECK(d.score >= cfg.decoder.score_threshold);
            CHECK(d.yaw >= 0.0);
            CHECK(d.yaw < 3.1415927);
        }
}

TEST_CASE("pipeline results are reproducible") {
    PipelineConfig cfg;
    cfg.frames = 1;
    cfg.scene.seed = 12;
    const PipelineResult a = run_pipeline(cfg);
    const PipelineResult b = run_pipeline(cfg);
    CHECK(a.frames[0].detections == b.frames[0].detections);
    CHECK(a.frames[0].focal_loss == b.frames[0].focal_loss);
}

TEST_CASE("head fusion modes all run and report one confidence channel") {
    SceneConfig sc;
    sc.seed = 3;
    const Scene s = generate_scene(sc);
    RenderConfig rc;
    const auto maps = render_feature_views(s, rc);
    const VoxelGridSpec g = VoxelGridSpec::multiviewc();
    const ProjectionTable table = build_projection_table(g, s.cameras, rc.stride);
    const auto vox = aggregate_features(table, maps);
    for (ViewFusion f : {ViewFusion::mean, ViewFusion::median, ViewFusion::min}) {
        HeadConfig h;
        h.fusion = f;
        const TargetMaps t = occupancy_head(table, vox, h, DecoderConfig::defaults_for({2.63, 1.3, 1.3}, g));
        CHECK(t.confidence.channels == 1);
        CHECK(t.orientation.channels == h.csl_bins);
        float mx = 0.0f;
        for (float v : t.confidence.data) {
            CHECK(v >= 0.0f);
            mx = std::max(mx, v);
        }
        CHECK(mx <= 1.0f + 1e-6f);
        CHECK(mx > 0.3f);
    }
}

TEST_CASE("sweep points keep the grid height or the layer count") {
    const PipelineConfig base;
    const PipelineConfig p = sweep_point(base, SweepParam::n_layers, 8);
    CHECK(p.grid.nz == 8);
    CHECK(p.grid.voxel_h == doctest::Approx(0.2));
    const PipelineConfig q = sweep_point(base, SweepParam::voxel_height, 0.4);
    CHECK(q.grid.nz == base.grid.nz);
    CHECK(q.grid.voxel_h == doctest::Approx(0.4));
    CHECK_THROWS_AS(sweep_point(base, SweepParam::n_layers, 0), InvalidArgument);
    CHECK_THROWS_AS(sweep_point(base, SweepParam::n_layers, 2.5), InvalidArgument);
    CHECK(parse_sweep_param("n_layers") == SweepParam::n_layers);
    CHECK(parse_sweep_param("voxel_height") == SweepParam::voxel_height);
    CHECK(to_string(SweepParam::voxel_height) == "voxel_height");
    CHECK_THROWS_AS(parse_sweep_param("depth"), InvalidArgument);
}

TEST_CASE("pipeline configuration checks") {
    PipelineConfig cfg;
    cfg.frames = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg.frames = 1;
    cfg.render.stride = 3;  // does not divide 1280 x 720 evenly in height
    CHECK_THROWS_AS(run_pipeline(cfg), InvalidArgument);
    PipelineConfig d;
    d.decoder.nms_radius = 0;
    CHECK(d.effective_decoder().nms_radius == 6);
}
