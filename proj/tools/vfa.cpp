#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "json_config.hpp"
#include "manifest.hpp"
#include "vfa/distortion.hpp"
#include "vfa/error.hpp"
#include "vfa/image.hpp"
#include "vfa/io.hpp"
#include "vfa/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace vfa::cli {
namespace {

// Option values that are not part of the replayable configuration.
bool snapshot_excluded(const std::string& name) {
    return name == "help" || name == "config" || name == "out";
}

ordered_json config_snapshot(const CLI::App* app) {
    ordered_json j = ordered_json::object();
    for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames().front();
        if (snapshot_excluded(name)) continue;
        if (opt->count() > 0) {
            const auto& r = opt->results();
            j[name] = r.size() == 1 ? ordered_json(r.front()) : ordered_json(r);
        } else {
            j[name] = opt->get_default_str();
        }
    }
    return j;
}

struct SceneOptions {
    SceneConfig scene;
    std::vector<double> extent{39.0};

    void add(CLI::App* app) {
        app->add_option("--seed", scene.seed, "Scene seed")->capture_default_str();
        app->add_option("--objects", scene.n_objects, "Objects per scene")->capture_default_str();
        app->add_option("--cameras", scene.n_cameras, "Cameras (1-7)")->capture_default_str();
        app->add_option("--extent", extent, "Floor extent in meters: one value or X Y")
            ->expected(1, 2)
            ->capture_default_str();
        app->add_option("--min-separation", scene.min_separation, "Minimum center distance (m)")
            ->capture_default_str();
    }
    SceneConfig resolve() const {
        SceneConfig s = scene;
        s.extent_x = extent.at(0);
        s.extent_y = extent.size() > 1 ? extent[1] : extent[0];
        s.validate();
        return s;
    }
};

struct RenderOptions {
    RenderConfig render;
    void add(CLI::App* app) {
        app->add_option("--channels", render.channels, "Feature channels")->capture_default_str();
        app->add_option("--stride", render.stride, "Feature stride in pixels")->capture_default_str();
        app->add_option("--noise", render.noise, "Off-signature noise amplitude")->capture_default_str();
    }
};

struct GridOptions {
    std::string preset = "multiviewc";
    std::optional<int> nx, ny, nz;
    std::optional<double> voxel_l, voxel_w, voxel_h;

    void add(CLI::App* app) {
        app->add_option("--grid-preset", preset, "multiviewc | multiviewx")
            ->check(CLI::IsMember({"multiviewc", "multiviewx"}))
            ->capture_default_str();
        app->add_option("--nx", nx, "Voxels along x");
        app->add_option("--ny", ny, "Voxels along y");
        app->add_option("--nz", nz, "Voxel layers");
        app->add_option("--voxel-l", voxel_l, "Voxel length (m)");
        app->add_option("--voxel-w", voxel_w, "Voxel width (m)");
        app->add_option("--voxel-h", voxel_h, "Voxel height (m)");
    }
    // Without explicit nx / ny the grid is fitted to the scene floor.
    VoxelGridSpec resolve(const SceneConfig* scene = nullptr) const {
        VoxelGridSpec g = preset == "multiviewx" ? VoxelGridSpec::multiviewx_style() : VoxelGridSpec::multiviewc();
        if (voxel_l) g.voxel_l = *voxel_l;
        if (voxel_w) g.voxel_w = *voxel_w;
        if (voxel_h) g.voxel_h = *voxel_h;
        if (scene) {
            g.nx = static_cast<int>(std::lround(scene->extent_x / g.voxel_l));
            g.ny = static_cast<int>(std::lround(scene->extent_y / g.voxel_w));
        }
        if (nx) g.nx = *nx;
        if (ny) g.ny = *ny;
        if (nz) g.nz = *nz;
        g.validate();
        return g;
    }
};

std::vector<FeatureMap> read_feature_dir(const fs::path& dir, std::size_t cameras) {
    std::vector<FeatureMap> maps;
    for (std::size_t i = 0; i < cameras; ++i)
        maps.push_back(FeatureMap::from_tensor(read_tensor(dir / ("cam" + std::to_string(i) + ".tensor"))));
    return maps;
}

GroundFeature channel_max(const GroundFeature& f) {
    GroundFeature out(1, f.height, f.width);
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) out.at(0, y, x) = std::max(out.at(0, y, x), f.at(c, y, x));
    return out;
}

std::string frame_dir_name(int frame) {
    std::ostringstream s;
    s << "frame_" << std::setw(6) << std::setfill('0') << frame;
    return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << text;
}

ordered_json method_json(const MethodDistortion& m) {
    ordered_json j;
    j["spread"] = m.spread;
    j["centroid_displacement"] = m.centroid_displacement;
    if (m.has_response) {
        j["response_centroid"] = {m.response_x, m.response_y};
        j["response_error"] = m.response_error;
    } else {
        j["response_centroid"] = nullptr;
        j["response_error"] = nullptr;
    }
    return j;
}

ApInterpolation parse_interpolation(const std::string& s) {
    if (s == "11") return ApInterpolation::eleven_point;
    if (s == "40") return ApInterpolation::forty_point;
    if (s == "all") return ApInterpolation::all_point;
    throw InvalidArgument("interpolation must be 11, 40 or all");
}

struct Context {
    const CLI::App* app;
    fs::path out;
    RunManifest manifest;
};

// ---------------------------------------------------------------------------

struct ScenegenCmd {
    SceneOptions scene;
    RenderOptions render;
    bool no_features = false;

    void add(CLI::App* app) {
        scene.add(app);
        render.add(app);
        app->add_flag("--no-features", no_features, "Skip rendering feature tensors");
    }
    void run(Context& ctx) {
        const Scene s = generate_scene(scene.resolve());
        std::vector<FeatureMap> maps;
        if (!no_features) maps = render_feature_views(s, render.render);
        export_scene(s, ctx.out, maps);
        ctx.manifest.add_output("calibration.json");
        ctx.manifest.add_output("annotations.json");
        for (std::size_t i = 0; i < maps.size(); ++i)
            ctx.manifest.add_output("features/cam" + std::to_string(i) + ".tensor");
    }
};

struct ProjectCmd {
    std::string calibration;
    GridOptions grid;
    int stride = 1;

    void add(CLI::App* app) {
        app->add_option("--calibration", calibration, "Calibration JSON")->required()->check(CLI::ExistingFile);
        grid.add(app);
        app->add_option("--stride", stride, "Feature stride the table pools from")->capture_default_str();
    }
    void run(Context& ctx) {
        ctx.manifest.add_input(calibration);
        const auto cameras = read_calibration(calibration);
        const VoxelGridSpec g = grid.resolve();
        const ProjectionTable table = build_projection_table(g, cameras, stride);
        save_projection_table(ctx.out / "table.bin", table);

        ordered_json summary;
        summary["grid"] = grid_to_json(g);
        summary["stride"] = stride;
        summary["cameras"] = ordered_json::array();
        for (std::size_t c = 0; c < cameras.size(); ++c) {
            std::size_t valid = 0;
            double pixels = 0.0;
            for (std::size_t v = 0; v < g.voxel_count(); ++v) {
                const VoxelBox2D& b = table.box(c, v);
                if (!b.valid) continue;
                ++valid;
                pixels += static_cast<double>(b.pixel_count());
            }
            ordered_json cj;
            cj["id"] = cameras[c].id();
            cj["valid_voxels"] = valid;
            cj["mean_box_pixels"] = valid ? pixels / valid : 0.0;
            summary["cameras"].push_back(cj);
        }
        write_json(ctx.out / "table_summary.json", summary);
        ctx.manifest.add_output("table.bin");
        ctx.manifest.add_output("table_summary.json");
    }
};

struct AggregateCmd {
    std::string calibration;
    std::string features;
    std::string table_path;
    GridOptions grid;
    int stride = 4;
    std::string method = "vfa";
    CollapseMode collapse = CollapseMode::concat;
    std::vector<double> heights{0.0};

    void add(CLI::App* app) {
        app->add_option("--calibration", calibration, "Calibration JSON")->required()->check(CLI::ExistingFile);
        app->add_option("--features", features, "Directory of cam<i>.tensor")->required()->check(CLI::ExistingDirectory);
        app->add_option("--table", table_path, "Cached projection table")->check(CLI::ExistingFile);
        grid.add(app);
        app->add_option("--stride", stride, "Feature stride")->capture_default_str();
        app->add_option("--method", method, "vfa | homography")
            ->check(CLI::IsMember({"vfa", "homography"}))
            ->capture_default_str();
        const std::map<std::string, CollapseMode> modes{
            {"concat", CollapseMode::concat}, {"mean", CollapseMode::mean}, {"max", CollapseMode::max}};
        app->add_option("--collapse", collapse, "concat | mean | max")
            ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
            ->default_str("concat");
        app->add_option("--heights", heights, "Homography plane heights (m)")->capture_default_str();
    }
    void run(Context& ctx) {
        ctx.manifest.add_input(calibration);
        ctx.manifest.add_input_dir(features);
        const auto cameras = read_calibration(calibration);
        const auto maps = read_feature_dir(features, cameras.size());
        const VoxelGridSpec g = grid.resolve();
        GroundFeature ground;
        if (method == "vfa") {
            std::optional<ProjectionTable> table;
            if (!table_path.empty()) {
                ctx.manifest.add_input(table_path);
                table = load_projection_table(table_path);
                if (!(table->grid() == g) || table->stride() != stride)
                    throw ShapeMismatch("aggregate: cached table was built for another grid or stride");
            } else {
                table = build_projection_table(g, cameras, stride);
            }
            ground = collapse_to_bev(aggregate_features(*table, maps), collapse);
        } else {
            ground = homography_aggregate(cameras, maps, heights, g, stride);
        }
        write_tensor(ctx.out / "ground.tensor", ground.to_tensor());
        write_ppm(ctx.out / "bev.ppm", heatmap(channel_max(ground)));
        ctx.manifest.add_output("ground.tensor");
        ctx.manifest.add_output("bev.ppm");
    }
};

struct EncodeCmd {
    std::string annotations;
    GridOptions grid;
    ConfidenceMode mode = ConfidenceMode::oriented_gaussian;
    double alpha = kDefaultAlpha;
    double units_per_meter = 100.0;
    std::vector<double> mean_dims{2.63, 1.3, 1.3};

    void add(CLI::App* app) {
        app->add_option("--annotations", annotations, "Annotation JSON / JSONL")->required()->check(CLI::ExistingFile);
        grid.add(app);
        const std::map<std::string, ConfidenceMode> modes{{"point", ConfidenceMode::point},
                                                          {"gaussian", ConfidenceMode::gaussian},
                                                          {"oriented", ConfidenceMode::oriented_gaussian}};
        app->add_option("--mode", mode, "point | gaussian | oriented")
            ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
            ->default_str("oriented");
        app->add_option("--alpha", alpha, "Gaussian width factor")->capture_default_str();
        app->add_option("--units-per-meter", units_per_meter, "Annotation units per meter")->capture_default_str();
        app->add_option("--mean-dims", mean_dims, "Mean l w h (m)")->expected(3)->capture_default_str();
    }
    void run(Context& ctx) {
        ctx.manifest.add_input(annotations);
        const auto frames = read_annotations(annotations);
        const VoxelGridSpec g = grid.resolve();
        EncodeOptions opt;
        opt.mode = mode;
        opt.alpha = alpha;
        opt.scale = BevScale::for_grid(g, units_per_meter);
        const MeanDims mean{mean_dims[0], mean_dims[1], mean_dims[2]};
        mean.validate();
        for (const auto& f : frames) {
            const std::string name = frame_dir_name(f.frame);
            const fs::path dir = ctx.out / name;
            fs::create_directories(dir);
            const TargetMaps maps = encode_targets(f.objects, g, mean, opt);
            write_target_maps(dir, maps);
            write_json(dir / "meta.json", target_meta_to_json({f.frame, g, mean, opt.scale}));
            write_ppm(dir / "confidence.ppm", heatmap(maps.confidence));
            for (const char* file : {"confidence.tensor", "offset.tensor", "dimension.tensor",
                                     "orientation.tensor", "mask.tensor", "meta.json", "confidence.ppm"})
                ctx.manifest.add_output(name + "/" + file);
        }
    }
};

struct DecodeCmd {
    std::string maps_dir;
    DecoderConfig decoder;
    int csl_radius = kCslRadius;

    void add(CLI::App* app) {
        app->add_option("--maps", maps_dir, "Target-map directory or a directory of them")
            ->required()
            ->check(CLI::ExistingDirectory);
        app->add_option("--threshold", decoder.score_threshold, "Peak score threshold")->capture_default_str();
        decoder.nms_radius = 0;
        app->add_option("--nms-radius", decoder.nms_radius, "Suppression radius in cells (0: from mean dims)")
            ->capture_default_str();
        app->add_option("--max-detections", decoder.max_detections, "Detections per frame")->capture_default_str();
        app->add_option("--csl-radius", csl_radius, "CSL decoding window")->capture_default_str();
    }
    void run(Context& ctx) {
        std::vector<fs::path> dirs;
        if (fs::exists(fs::path(maps_dir) / "meta.json")) {
            dirs.push_back(maps_dir);
        } else {
            for (const auto& e : fs::directory_iterator(maps_dir))
                if (e.is_directory() && fs::exists(e.path() / "meta.json")) dirs.push_back(e.path());
            std::sort(dirs.begin(), dirs.end());
        }
        if (dirs.empty()) throw InvalidArgument("decode: no target-map directory with meta.json under " + maps_dir);
        std::vector<FrameDetection> all;
        for (const auto& dir : dirs) {
            ctx.manifest.add_input_dir(dir);
            const TargetMeta meta = target_meta_from_json(read_json(dir / "meta.json"));
            DecoderConfig cfg = decoder;
            if (cfg.nms_radius <= 0) cfg.nms_radius = DecoderConfig::defaults_for(meta.mean, meta.grid).nms_radius;
            const auto dets = decode(read_target_maps(dir), meta.grid, meta.mean, meta.scale, cfg, csl_radius);
            for (std::size_t i = 0; i < dets.size(); ++i)
                all.push_back({meta.frame, static_cast<int>(i), dets[i]});
        }
        std::ofstream out(ctx.out / "detections.jsonl", std::ios::binary);
        write_detections(out, all);
        ctx.manifest.add_output("detections.jsonl");
    }
};

struct EvaluateCmd {
    std::string detections;
    std::string annotations;
    MatchConfig match;
    std::string interpolation = "11";

    void add(CLI::App* app) {
        app->add_option("--detections", detections, "Detection JSONL")->required()->check(CLI::ExistingFile);
        app->add_option("--annotations", annotations, "Annotation JSON / JSONL")->required()->check(CLI::ExistingFile);
        app->add_option("--distance", match.distance_threshold, "Matching radius (m)")->capture_default_str();
        app->add_option("--iou", match.iou_thresholds, "3D IoU thresholds")->capture_default_str();
        app->add_option("--interpolation", interpolation, "11 | 40 | all")
            ->check(CLI::IsMember({"11", "40", "all"}))
            ->capture_default_str();
    }
    void run(Context& ctx) {
        ctx.manifest.add_input(detections);
        ctx.manifest.add_input(annotations);
        match.interpolation = parse_interpolation(interpolation);
        const auto frames = read_annotations(annotations);
        std::map<int, std::size_t> slot;
        std::vector<std::vector<GroundTruthObject>> gts;
        for (const auto& f : frames) {
            if (!slot.emplace(f.frame, gts.size()).second)
                throw FormatError("evaluate: frame " + std::to_string(f.frame) + " annotated twice");
            gts.push_back(f.objects);
        }
        std::vector<std::vector<Detection>> dets(gts.size());
        for (const auto& d : read_detections(detections)) {
            const auto it = slot.find(d.frame);
            if (it == slot.end())
                throw FormatError("evaluate: detection for unannotated frame " + std::to_string(d.frame));
            dets[it->second].push_back(d.detection);
        }
        const MetricsReport report = evaluate(dets, gts, match);
        write_json(ctx.out / "metrics.json", metrics_to_json(report, match));
        std::ofstream csv(ctx.out / "pr_curve.csv", std::ios::binary);
        write_pr_curve_csv(csv, report);
        ctx.manifest.add_output("metrics.json");
        ctx.manifest.add_output("pr_curve.csv");
    }
};

struct DistortionCmd {
    SceneOptions scene;
    RenderOptions render;
    GridOptions grid;
    std::vector<double> heights{0.0, 0.4, 0.8, 1.2};
    int scenes = 1;
    int axis_samples = 16;

    void add(CLI::App* app) {
        scene.add(app);
        render.add(app);
        grid.add(app);
        app->add_option("--heights", heights, "Multi-height homography planes (m)")->capture_default_str();
        app->add_option("--scenes", scenes, "Scenes, seeds seed .. seed + scenes - 1")->capture_default_str();
        app->add_option("--axis-samples", axis_samples, "Samples per object axis")->capture_default_str();
    }
    void run(Context& ctx) {
        if (scenes < 1) throw InvalidArgument("demo-distortion: --scenes must be >= 1");
        const SceneConfig base = scene.resolve();
        DistortionConfig cfg;
        cfg.grid = grid.resolve(&base);
        cfg.multi_heights = heights;
        cfg.axis_samples = axis_samples;
        cfg.render = render.render;

        ordered_json report;
        report["grid"] = grid_to_json(cfg.grid);
        report["multi_heights"] = heights;
        report["scenes"] = ordered_json::array();
        std::size_t counted = 0, ordered = 0, unoccluded = 0, within_cell = 0;
        double worst_vfa = 0.0;
        const double cell = std::max(cfg.grid.voxel_l, cfg.grid.voxel_w);
        for (int k = 0; k < scenes; ++k) {
            SceneConfig sc = base;
            sc.seed = base.seed + static_cast<std::uint64_t>(k);
            sc.frame = k;
            const Scene s = generate_scene(sc);
            const DistortionReport r = analyze_distortion(s, cfg);
            if (k == 0) {
                write_ppm(ctx.out / "bev_single.ppm", heatmap(r.single_map));
                write_ppm(ctx.out / "bev_multi.ppm", heatmap(r.multi_map));
                write_ppm(ctx.out / "bev_vfa.ppm", heatmap(r.vfa_map));
            }
            ordered_json sj;
            sj["seed"] = sc.seed;
            sj["objects"] = ordered_json::array();
            for (const auto& o : r.objects) {
                ordered_json oj;
                oj["id"] = o.id;
                oj["visible_views"] = o.visible_views;
                oj["unoccluded"] = o.unoccluded;
                oj["single_homography"] = method_json(o.single);
                oj["multi_height_homography"] = method_json(o.multi);
                oj["vfa"] = method_json(o.vfa);
                oj["ordered"] = o.ordered();
                sj["objects"].push_back(oj);
                if (o.visible_views.size() < 2) continue;
                ++counted;
                ordered += o.ordered();
                if (o.unoccluded) {
                    ++unoccluded;
                    const double e = o.vfa.has_response ? o.vfa.response_error : INFINITY;
                    within_cell += e <= cell;
                    worst_vfa = std::max(worst_vfa, e);
                }
            }
            report["scenes"].push_back(sj);
        }
        ordered_json summary;
        summary["objects_in_two_or_more_views"] = counted;
        summary["spread_ordered"] = ordered;
        summary["spread_ordered_fraction"] = counted ? static_cast<double>(ordered) / counted : 0.0;
        summary["unoccluded"] = unoccluded;
        summary["vfa_within_one_cell"] = within_cell;
        summary["vfa_worst_response_error"] = worst_vfa;
        report["summary"] = summary;
        write_json(ctx.out / "report.json", report);
        for (const char* f : {"report.json", "bev_single.ppm", "bev_multi.ppm", "bev_vfa.ppm"})
            ctx.manifest.add_output(f);
    }
};

struct PipelineOptions {
    SceneOptions scene;
    RenderOptions render;
    GridOptions grid;
    int frames = 4;
    ViewFusion fusion = ViewFusion::median;
    double smoothing = 0.65;
    DecoderConfig decoder;

    void add(CLI::App* app) {
        scene.add(app);
        render.add(app);
        grid.add(app);
        app->add_option("--frames", frames, "Frames (scene seeds seed .. seed + frames - 1)")->capture_default_str();
        const std::map<std::string, ViewFusion> fusions{
            {"mean", ViewFusion::mean}, {"median", ViewFusion::median}, {"min", ViewFusion::min}};
        app->add_option("--fusion", fusion, "Head view fusion: mean | median | min")
            ->transform(CLI::CheckedTransformer(fusions, CLI::ignore_case))
            ->default_str("median");
        app->add_option("--smoothing", smoothing, "Head smoothing std (m)")->capture_default_str();
        app->add_option("--threshold", decoder.score_threshold, "Peak score threshold")->capture_default_str();
        decoder.nms_radius = 0;
        app->add_option("--nms-radius", decoder.nms_radius, "Suppression radius in cells (0: from mean dims)")
            ->capture_default_str();
    }
    PipelineConfig resolve() const {
        PipelineConfig cfg;
        cfg.scene = scene.resolve();
        cfg.render = render.render;
        cfg.grid = grid.resolve(&cfg.scene);
        cfg.frames = frames;
        cfg.head.fusion = fusion;
        cfg.head.smoothing_sigma = smoothing;
        cfg.decoder = decoder;
        return cfg;
    }
};

struct PipelineCmd {
    PipelineOptions opts;
    void add(CLI::App* app) { opts.add(app); }
    void run(Context& ctx) {
        const PipelineConfig cfg = opts.resolve();
        const PipelineResult r = run_pipeline(cfg);
        std::vector<AnnotatedFrame> frames;
        std::vector<FrameDetection> dets;
        ordered_json times = ordered_json::array();
        for (const auto& f : r.frames) {
            frames.push_back({f.frame, f.objects});
            for (std::size_t i = 0; i < f.detections.size(); ++i)
                dets.push_back({f.frame, static_cast<int>(i), f.detections[i]});
            times.push_back(f.aggregate_seconds);
        }
        write_annotations(ctx.out / "annotations.json", frames);
        std::ofstream out(ctx.out / "detections.jsonl", std::ios::binary);
        write_detections(out, dets);
        ordered_json metrics = metrics_to_json(r.metrics, cfg.match);
        metrics["mean_focal_loss"] = r.mean_focal_loss;
        write_json(ctx.out / "metrics.json", metrics);
        std::ofstream csv(ctx.out / "pr_curve.csv", std::ios::binary);
        write_pr_curve_csv(csv, r.metrics);
        ctx.manifest.add_timing("aggregate_seconds_per_frame", times);
        ctx.manifest.add_timing("median_aggregate_seconds", r.median_aggregate_seconds);
        for (const char* f : {"annotations.json", "detections.jsonl", "metrics.json", "pr_curve.csv"})
            ctx.manifest.add_output(f);
    }
};

struct SweepCmd {
    PipelineOptions opts;
    std::string param = "n_layers";
    std::vector<double> values{1, 2, 4, 8};
    double grid_height = 1.6;

    void add(CLI::App* app) {
        opts.add(app);
        app->add_option("--param", param, "n_layers | voxel_height")
            ->check(CLI::IsMember({"n_layers", "voxel_height"}))
            ->capture_default_str();
        app->add_option("--values", values, "Parameter values")->capture_default_str();
        app->add_option("--grid-height", grid_height, "Grid height kept fixed for n_layers (m)")->capture_default_str();
    }
    void run(Context& ctx) {
        const SweepParam p = parse_sweep_param(param);
        const auto rows = run_sweep(opts.resolve(), p, values, grid_height);
        std::ostringstream csv;
        csv << std::setprecision(10);
        csv << "param,value,nz,voxel_h,moda,modp,precision,recall,tp,fp,fn,gt,focal_loss\n";
        std::vector<double> moda;
        ordered_json timing = ordered_json::array();
        for (const auto& r : rows) {
            csv << param << ',' << r.value << ',' << r.nz << ',' << r.voxel_h << ',' << r.clear.moda << ','
                << r.clear.modp << ',' << r.clear.precision << ',' << r.clear.recall << ',' << r.clear.tp << ','
                << r.clear.fp << ',' << r.clear.fn << ',' << r.clear.gt << ',' << r.mean_focal_loss << '\n';
            moda.push_back(r.clear.moda);
            ordered_json t;
            t["value"] = r.value;
            t["seconds_per_frame"] = r.seconds_per_frame;
            timing.push_back(t);
        }
        write_text(ctx.out / "sweep.csv", csv.str());
        write_ppm(ctx.out / "sweep.ppm", bar_chart(moda));
        ctx.manifest.add_timing("per_value", timing);
        ctx.manifest.add_output("sweep.csv");
        ctx.manifest.add_output("sweep.ppm");
    }
};

template <typename Cmd>
CLI::App* register_command(CLI::App& root, const std::string& name, const std::string& help,
                           std::shared_ptr<Cmd> cmd, std::string& out, std::function<void()>& runner) {
    CLI::App* sub = root.add_subcommand(name, help);
    auto config = std::make_shared<std::string>();
    sub->add_option("--config", *config, "JSON file overriding flag defaults")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
    cmd->add(sub);
    sub->callback([sub, cmd, config, &out, &runner, name] {
        runner = [sub, cmd, config, &out, name] {
            if (!config->empty()) apply_json_config(sub, *config);
            Context ctx{sub, out, RunManifest(name)};
            fs::create_directories(ctx.out);
            ctx.manifest.set_config(config_snapshot(sub));
            const auto t0 = std::chrono::steady_clock::now();
            cmd->run(ctx);
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            ctx.manifest.write(ctx.out, wall);
        };
    });
    return sub;
}

}  // namespace
}  // namespace vfa::cli

int main(int argc, char** argv) {
    using namespace vfa::cli;
    CLI::App app{"Voxelized 3D feature aggregation toolkit"};
    app.require_subcommand(1);
    std::string out;
    std::function<void()> runner;

    register_command(app, "scenegen", "Generate a synthetic calibrated scene", std::make_shared<ScenegenCmd>(), out, runner);
    register_command(app, "project", "Build a voxel projection table", std::make_shared<ProjectCmd>(), out, runner);
    register_command(app, "aggregate", "Aggregate view features onto the BEV grid", std::make_shared<AggregateCmd>(), out, runner);
    register_command(app, "encode", "Encode annotations into target maps", std::make_shared<EncodeCmd>(), out, runner);
    register_command(app, "decode", "Decode target maps into detections", std::make_shared<DecodeCmd>(), out, runner);
    register_command(app, "evaluate", "Score detections against annotations", std::make_shared<EvaluateCmd>(), out, runner);
    register_command(app, "demo-distortion", "Compare homography and VFA projection distortion",
                     std::make_shared<DistortionCmd>(), out, runner);
    register_command(app, "sweep", "Sweep voxel height or layer count", std::make_shared<SweepCmd>(), out, runner);
    register_command(app, "pipeline", "Scene to metrics end to end", std::make_shared<PipelineCmd>(), out, runner);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        runner();
    } catch (const vfa::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
