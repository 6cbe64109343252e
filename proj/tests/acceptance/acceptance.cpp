// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "vfa/distortion.hpp"
#include "vfa/metrics.hpp"
#include "vfa/pipeline.hpp"
#include "vfa/scenegen.hpp"

using namespace vfa;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

// Tolerances and budgets.
constexpr double kProjTol = 1e-9;            // px
constexpr double kRoundTripTol = 1e-6;       // px
constexpr double kProjBudget = 1.0;          // s
constexpr double kPoolRelTol = 1e-6;
constexpr double kPoolBudget = 5.0;          // s
constexpr double kOrderedFraction = 0.95;
constexpr double kDistortionBudget = 60.0;   // s
constexpr double kDimRelTol = 1e-6;
constexpr double kYawTol = 0.5 * pi / 180.0;
constexpr double kEncodeThreshold = 0.5;
constexpr double kEncodeBudget = 30.0;       // s
constexpr double kCslTol = 0.5 * pi / 180.0;
constexpr double kIouTol = 5e-3;
constexpr int kIouSamples = 200000;
constexpr int kSweepFrames = 30;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("AC%-2d %s  %-28s %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Camera random_camera(std::mt19937_64& rng, int id) {
    std::uniform_real_distribution<double> f(300.0, 1500.0), c(300.0, 700.0), sk(-1.0, 1.0), t(-4.0, 4.0),
        depth(6.0, 30.0);
    const Intrinsics in{f(rng), f(rng), c(rng), c(rng), sk(rng)};
    return Camera(id, in, Extrinsics(oracle::random_rotation(rng), Vec3(t(rng), t(rng), depth(rng))), 1280, 720);
}

// 1. ------------------------------------------------------------------------
Outcome projection() {
    std::mt19937_64 rng(1);
    std::vector<Camera> cams;
    for (int i = 0; i < 100; ++i) cams.push_back(random_camera(rng, i));
    std::uniform_real_distribution<double> p(-3.0, 3.0);
    std::uniform_int_distribution<int> pick(0, 99);
    std::vector<std::pair<int, WorldPoint>> pairs;
    for (int i = 0; i < 10000; ++i) pairs.push_back({pick(rng), {p(rng), p(rng), p(rng)}});

    const auto t0 = Clock::now();
    double max_err = 0.0, max_rt = 0.0;
    int projected = 0, mismatched_visibility = 0;
    for (const auto& [c, w] : pairs) {
        const auto want = oracle::project(cams[c], w);
        const auto got = project_point(cams[c], w);
        if (got.has_value() != (want.w > kDepthEpsilon)) ++mismatched_visibility;
        if (!got) continue;
        ++projected;
        max_err = std::max({max_err, std::abs(got->u - want.u), std::abs(got->v - want.v)});
        const auto back = backproject_to_plane(cams[c], *got, w.z);
        if (!back) continue;
        const auto again = project_point(cams[c], *back);
        max_rt = std::max(max_rt, again ? std::hypot(again->u - got->u, again->v - got->v) : 1e9);
    }
    const double secs = since(t0);
    const bool pass = mismatched_visibility == 0 && max_err <= kProjTol && max_rt < kRoundTripTol && secs < kProjBudget;
    return {pass, fmt("pairs=10000 projected=%d max|d|=%.2e px round-trip=%.2e px t=%.3fs", projected, max_err,
                      max_rt, secs)};
}

// 2. ------------------------------------------------------------------------
Outcome pooling() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> act(0.05f, 1.0f);  // non-negative activations
    const int strides[] = {1, 2, 4, 8};
    const VoxelGridSpec grid{WorldPoint{}, 10, 10, 1, 1, 1, 1};
    const auto t0 = Clock::now();
    double worst = 0.0;
    int pairs = 0;
    for (int m = 0; m < 10; ++m) {
        const int s = strides[m % 4];
        const int W = 640, H = 480;
        FeatureMap map(4, H / s, W / s);
        for (float& v : map.data) v = act(rng);
        std::uniform_int_distribution<int> u(0, W - 1), v(0, H - 1);
        std::vector<VoxelBox2D> boxes;
        for (int i = 0; i < 100; ++i) {
            int a = u(rng), b = u(rng), c = v(rng), d = v(rng);
            if (i % 5 == 0) b = a;  // single-column boxes
            boxes.push_back({static_cast<std::uint16_t>(std::min(a, b)), static_cast<std::uint16_t>(std::min(c, d)),
                             static_cast<std::uint16_t>(std::max(a, b)), static_cast<std::uint16_t>(std::max(c, d)),
                             true});
        }
        const ProjectionTable table(grid, {{W, H}}, s, boxes);
        const std::vector<FeatureMap> maps{map};
        const auto vox = aggregate_features(table, maps);
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            const auto fb = oracle::feature_box(boxes[i], s, W, H);
            for (int ch = 0; ch < 4; ++ch) {
                const double want = oracle::box_mean(map, ch, fb.u_min, fb.v_min, fb.u_max, fb.v_max);
                worst = std::max(worst, std::abs(vox[0].at(ch, i) - want) / std::abs(want));
            }
            ++pairs;
        }
    }
    const double secs = since(t0);
    return {worst <= kPoolRelTol && secs < kPoolBudget,
            fmt("pairs=%d channels=4 max rel err=%.2e t=%.3fs", pairs, worst, secs)};
}

// 3. ------------------------------------------------------------------------
Outcome distortion() {
    const auto t0 = Clock::now();
    DistortionConfig cfg;
    int eligible = 0, ordered = 0, unoccluded = 0, within = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SceneConfig sc;
        sc.seed = seed;
        const DistortionReport r = analyze_distortion(generate_scene(sc), cfg);
        for (const auto& o : r.objects) {
            if (o.visible_views.size() >= 2) {
                ++eligible;
                ordered += o.ordered();
            }
            if (o.unoccluded && !o.visible_views.empty()) {
                ++unoccluded;
                within += o.vfa.has_response && o.vfa.response_error <= cfg.grid.voxel_l;
            }
        }
    }
    const double secs = since(t0);
    const double frac = eligible ? static_cast<double>(ordered) / eligible : 0.0;
    return {eligible > 0 && frac >= kOrderedFraction && within == unoccluded && secs < kDistortionBudget,
            fmt("ordered %d/%d (%.1f%%), VFA centroid <=1 cell %d/%d unoccluded, t=%.1fs", ordered, eligible,
                100 * frac, within, unoccluded, secs)};
}

// 4. ------------------------------------------------------------------------
Outcome encode_decode() {
    const auto t0 = Clock::now();
    const VoxelGridSpec grid = VoxelGridSpec::multiviewc();
    const BevScale scale{};
    const MeanDims mean{2.63, 1.3, 1.3};
    DecoderConfig dec = DecoderConfig::defaults_for(mean, grid);
    dec.score_threshold = kEncodeThreshold;
    std::vector<std::vector<Detection>> dets;
    std::vector<std::vector<GroundTruthObject>> gts;
    double worst_pos = 0.0, worst_dim = 0.0, worst_yaw = 0.0;
    std::size_t missing = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SceneConfig sc;
        sc.seed = seed;
        const Scene s = generate_scene(sc);
        const auto d = decode(encode_targets(s.objects, grid, mean), grid, mean, scale, dec);
        for (const auto& o : s.objects) {
            const Detection* best = nullptr;
            double bd = 1e18;
            for (const auto& x : d)
                if (const double e = std::hypot(x.x - o.x, x.y - o.y); e < bd) {
                    bd = e;
                    best = &x;
                }
            if (!best) {
                ++missing;
                continue;
            }
            worst_pos = std::max(worst_pos, bd * scale.units_per_meter);
            worst_dim = std::max({worst_dim, std::abs(best->l / o.l - 1), std::abs(best->w / o.w - 1),
                                  std::abs(best->h / o.h - 1)});
            worst_yaw = std::max(worst_yaw, oracle::angle_diff(best->yaw, o.yaw));
        }
        dets.push_back(d);
        gts.push_back(s.objects);
    }
    const MetricsReport m = evaluate(dets, gts);
    const double secs = since(t0);
    const bool pass = missing == 0 && worst_pos <= scale.gamma / 2 && worst_dim <= kDimRelTol &&
                      worst_yaw <= kYawTol && m.clear.fp == 0 && m.clear.moda == 1.0 && secs < kEncodeBudget;
    return {pass, fmt("frames=100 pos<=%.3f units (limit %.1f) dim rel=%.1e yaw=%.3f deg FP=%zu MODA=%.4f t=%.1fs",
                      worst_pos, scale.gamma / 2, worst_dim, worst_yaw * 180 / pi, m.clear.fp, m.clear.moda, secs)};
}

// 5. ------------------------------------------------------------------------
Outcome csl() {
    double worst = 0.0;
    bool shift_exact = true;
    for (int deg = 0; deg < 360; ++deg) {
        const auto v = encode_csl(deg * pi / 180.0);
        worst = std::max(worst, oracle::angle_diff(decode_csl(v), deg * pi / 180.0));
        for (int k = 1; k < 360; k += 7) {
            const auto w = encode_csl((deg + k) * pi / 180.0);
            for (int b = 0; b < 360; ++b) shift_exact = shift_exact && w[(b + k) % 360] == v[b];
        }
    }
    return {worst <= kCslTol && shift_exact,
            fmt("angles=360 max err=%.2e deg shift-equivariance %s", worst * 180 / pi, shift_exact ? "exact" : "BROKEN")};
}

// 6. ------------------------------------------------------------------------
Outcome iou() {
    std::mt19937_64 rng(6), mc(66);
    std::uniform_real_distribution<double> pos(-1.5, 1.5), dim(0.3, 3.0), yaw(-pi, pi), z(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const Box3D a{pos(rng), pos(rng), z(rng), dim(rng), dim(rng), dim(rng), yaw(rng)};
        const Box3D b{pos(rng), pos(rng), z(rng), dim(rng), dim(rng), dim(rng), yaw(rng)};
        worst = std::max(worst, std::abs(rotated_iou_3d(a, b) - oracle::mc_iou_3d(a, b, kIouSamples, mc)));
    }
    const double analytic = rotated_iou_3d({0, 0, 0, 1, 1, 1, 0}, {0.5, 0, 0, 1, 1, 1, 0});
    return {worst <= kIouTol && analytic == 1.0 / 3.0,
            fmt("pairs=500 max|dIoU|=%.2e analytic=%.17g", worst, analytic)};
}

// 7. ------------------------------------------------------------------------
Outcome matching() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> p(0.0, 2.5);
    std::uniform_int_distribution<int> n(0, 7);
    int agree = 0;
    for (int i = 0; i < 200; ++i) {
        std::vector<GroundTruthObject> g;
        std::vector<Detection> d;
        const int ng = n(rng), nd = n(rng);
        for (int k = 0; k < ng; ++k) g.push_back({k, p(rng), p(rng), 2.6, 1.3, 1.3, 0.0});
        for (int k = 0; k < nd; ++k) d.push_back({p(rng), p(rng), 2.6, 1.3, 1.3, 0.0, 0.5});
        const FrameMatching m = match_frame(d, g, 0.75);
        const auto want = oracle::brute_force_match(d, g, 0.75);
        agree += static_cast<int>(m.pairs.size()) == want.pairs &&
                 std::abs(m.total_distance() - want.distance) <= 1e-9;
    }
    return {agree == 200, fmt("instances=200 agree=%d", agree)};
}

// 8. ------------------------------------------------------------------------
Outcome formulas() {
    const auto gt = [](int i) { return GroundTruthObject{i, 5.0 * i, 0.0, 2.6, 1.3, 1.3, 0.1 * i}; };
    std::vector<GroundTruthObject> g;
    std::vector<Detection> d;
    for (int i = 0; i < 10; ++i) g.push_back(gt(i));
    for (int i = 0; i < 9; ++i) d.push_back({5.0 * i, 0.0, 2.6, 1.3, 1.3, 0.1 * i, 0.9});
    FrameMatching m = match_frame(d, g, 0.5);
    const double moda = moda_modp(std::span(&m, 1), 0.5).moda;

    d.push_back({45.0, 0.0, 2.6, 1.3, 1.3, 0.9, 0.9});
    for (int i = 0; i < 10; ++i) d.push_back({5.0 * i, 20.0, 2.6, 1.3, 1.3, 0.0, 0.5});
    m = match_frame(d, g, 0.5);
    const double precision = moda_modp(std::span(&m, 1), 0.5).precision;

    std::vector<std::vector<Detection>> flipped(1);
    for (const auto& o : g) flipped[0].push_back({o.x, o.y, o.l, o.w, o.h, o.yaw + pi, 0.8});
    const std::vector<std::vector<GroundTruthObject>> gts{g};
    const MetricsReport r = evaluate(flipped, gts);
    const double ap = r.per_threshold[0].ap, os = r.os;
    const bool pass = moda == 0.9 && precision == 0.5 && std::abs(ap - 1.0) < 1e-12 && std::abs(os) < 1e-12;
    return {pass, fmt("MODA=%.17g precision=%.17g AP3D=%.17g OS=%.3g", moda, precision, ap, os)};
}

// 9. ------------------------------------------------------------------------
Outcome sweep() {
    PipelineConfig base;
    base.frames = kSweepFrames;
    const std::vector<double> layers{1, 2, 4, 8};
    const auto rows = run_sweep(base, SweepParam::n_layers, layers);
    bool acc = true, time = true;
    std::string detail = fmt("frames=%d", kSweepFrames);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        detail += fmt(" | nz=%d MODA=%.4f MODP=%.4f %.3fs/frame", rows[i].nz, rows[i].clear.moda,
                      rows[i].clear.modp, rows[i].seconds_per_frame);
        if (i > 0) {
            acc = acc && rows[i].clear.moda >= rows[i - 1].clear.moda;
            time = time && rows[i].seconds_per_frame > rows[i - 1].seconds_per_frame;
        }
    }
    return {acc && time, detail};
}

// 10. -----------------------------------------------------------------------
std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Manifest without its timing block, everything else byte for byte.
std::string comparable(const fs::path& p) {
    if (p.filename() != "manifest.json") return read_bytes(p);
    auto j = nlohmann::ordered_json::parse(read_bytes(p));
    j.erase("timing");
    return j.dump();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = comparable(e.path());
    return files;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "vfa_acceptance_cli";
    fs::remove_all(root);
    const std::string cli = VFA_CLI_PATH;
    // Inputs come from the first run so both runs see identical bytes.
    const std::string in = (root / "run0").string();
    const std::vector<std::pair<std::string, std::string>> commands{
        {"scenegen", "scenegen --seed 5 --stride 8"},
        {"project", "project --calibration " + in + "/scenegen/calibration.json --stride 8"},
        {"aggregate", "aggregate --calibration " + in + "/scenegen/calibration.json --features " + in +
                          "/scenegen/features --table " + in + "/project/table.bin --stride 8"},
        {"aggregate-h", "aggregate --calibration " + in + "/scenegen/calibration.json --features " + in +
                            "/scenegen/features --stride 8 --method homography"},
        {"encode", "encode --annotations " + in + "/scenegen/annotations.json"},
        {"decode", "decode --maps " + in + "/encode"},
        {"evaluate", "evaluate --detections " + in + "/decode/detections.jsonl --annotations " + in +
                         "/scenegen/annotations.json"},
        {"demo-distortion", "demo-distortion --scenes 2"},
        {"pipeline", "pipeline --frames 2"},
        {"sweep", "sweep --frames 1 --values 1 2"},
    };
    int identical = 0;
    std::string differing;
    for (const auto& [name, args] : commands) {
        for (const char* run : {"run0", "run1"}) {
            const std::string cmd = cli + " " + args + " --out " + (root / run / name).string() + " >/dev/null 2>&1";
            const int status = std::system(cmd.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
                return {false, name + " exited with status " + std::to_string(WEXITSTATUS(status))};
        }
        const auto a = snapshot(root / "run0" / name), b = snapshot(root / "run1" / name);
        if (a == b && !a.empty())
            ++identical;
        else
            differing += " " + name;
    }
    fs::remove_all(root);
    return {identical == static_cast<int>(commands.size()),
            fmt("commands=%zu byte-identical=%d", commands.size(), identical) + (differing.empty() ? "" : " differ:" + differing)};
}

}  // namespace

int main() {
    report(1, "projection", projection);
    report(2, "pooling oracle", pooling);
    report(3, "distortion ordering", distortion);
    report(4, "encode/decode inverse", encode_decode);
    report(5, "CSL round trip", csl);
    report(6, "rotated IoU", iou);
    report(7, "matching optimality", matching);
    report(8, "metric formulas", formulas);
    report(9, "layer sweep", sweep);
    report(10, "CLI determinism", determinism);
    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
