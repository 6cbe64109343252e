#include "vfa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vfa/assignment.hpp"
#include "vfa/error.hpp"

namespace vfa {

void MatchConfig::validate() const {
    if (!(distance_threshold > 0.0))
        throw InvalidArgument("match config: distance threshold must be positive");
    for (double t : iou_thresholds)
        if (!(t > 0.0 && t <= 1.0))
            throw InvalidArgument("match config: IoU thresholds must lie in (0, 1]");
}

double FrameMatching::total_distance() const {
    double s = 0.0;
    for (const auto& p : pairs) s += p.distance;
    return s;
}

FrameMatching match_frame(std::span<const Detection> dets,
                          std::span<const GroundTruthObject> gts, double distance_threshold) {
    if (!(distance_threshold > 0.0))
        throw InvalidArgument("match_frame: distance threshold must be positive");
    const int nd = static_cast<int>(dets.size());
    const int ng = static_cast<int>(gts.size());
    FrameMatching out;
    out.ground_truth_count = gts.size();

    // Feasible pairs cost d - big, infeasible ones 0: any extra pair outweighs
    // every possible distance saving, so cardinality is maximized first.
    const double big = distance_threshold * (std::min(nd, ng) + 1) + 1.0;
    std::vector<double> cost(static_cast<std::size_t>(nd) * ng, 0.0);
    std::vector<double> dist(cost.size(), 0.0);
    for (int i = 0; i < nd; ++i)
        for (int j = 0; j < ng; ++j) {
            const double d = std::hypot(dets[i].x - gts[j].x, dets[i].y - gts[j].y);
            dist[static_cast<std::size_t>(i) * ng + j] = d;
            if (d <= distance_threshold) cost[static_cast<std::size_t>(i) * ng + j] = d - big;
        }
    const std::vector<int> assign = solve_assignment(cost, nd, ng);

    std::vector<char> gt_matched(ng, 0);
    for (int i = 0; i < nd; ++i) {
        const int j = assign[i];
        if (j >= 0 && dist[static_cast<std::size_t>(i) * ng + j] <= distance_threshold) {
            out.pairs.push_back({i, j, dist[static_cast<std::size_t>(i) * ng + j]});
            gt_matched[j] = 1;
        } else {
            out.false_positives.push_back(i);
        }
    }
    for (int j = 0; j < ng; ++j)
        if (!gt_matched[j]) out.false_negatives.push_back(j);
    return out;
}

ClearMetrics moda_modp(std::span<const FrameMatching> frames, double distance_threshold) {
    ClearMetrics m;
    double localization = 0.0;
    for (const auto& f : frames) {
        m.tp += f.pairs.size();
        m.fp += f.false_positives.size();
        m.fn += f.false_negatives.size();
        m.gt += f.ground_truth_count;
        for (const auto& p : f.pairs) localization += 1.0 - p.distance / distance_threshold;
    }
    if (m.gt == 0) throw InvalidArgument("moda_modp: no ground-truth objects");
    m.moda = 1.0 - static_cast<double>(m.fp + m.fn) / static_cast<double>(m.gt);
    m.modp = m.tp ? localization / static_cast<double>(m.tp) : 0.0;
    m.precision = (m.tp + m.fp) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    return m;
}

// ---------------------------------------------------------------------------
// Rotated IoU
// ---------------------------------------------------------------------------

Box3D Box3D::from(const Detection& d) { return {d.x, d.y, 0.0, d.l, d.w, d.h, d.yaw}; }

Box3D Box3D::from(const GroundTruthObject& o) { return {o.x, o.y, 0.0, o.l, o.w, o.h, o.yaw}; }

std::array<std::array<double, 2>, 4> Box3D::footprint() const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const double hl = 0.5 * l;
    const double hw = 0.5 * w;
    const std::array<std::array<double, 2>, 4> local = {{{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}}};
    std::array<std::array<double, 2>, 4> out{};
    for (int i = 0; i < 4; ++i)
        out[i] = {x + c * local[i][0] - s * local[i][1], y + s * local[i][0] + c * local[i][1]};
    return out;
}

namespace {

using Pt = std::array<double, 2>;

double cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double polygon_area(const std::vector<Pt>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Pt& p = poly[i];
        const Pt& q = poly[(i + 1) % poly.size()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * std::abs(a);
}

// Sutherland-Hodgman: clip `subject` by the half-plane left of edge a->b.
std::vector<Pt> clip(const std::vector<Pt>& subject, const Pt& a, const Pt& b) {
    std::vector<Pt> out;
    if (subject.empty()) return out;
    for (std::size_t i = 0; i < subject.size(); ++i) {
        const Pt& cur = subject[i];
        const Pt& prev = subject[(i + subject.size() - 1) % subject.size()];
        const double dc = cross(a, b, cur);
        const double dp = cross(a, b, prev);
        if (dc >= 0.0) {
            if (dp < 0.0) {
                const double t = dp / (dp - dc);
                out.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
            }
            out.push_back(cur);
        } else if (dp >= 0.0) {
            const double t = dp / (dp - dc);
            out.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
        }
    }
    return out;
}

void check_box(const Box3D& b) {
    if (!(b.l > 0.0) || !(b.w > 0.0) || !(b.h > 0.0))
        throw DegenerateBox("rotated_iou_3d: box dimensions must be positive");
}

}  // namespace

double footprint_intersection_area(const Box3D& a, const Box3D& b) {
    const auto fa = a.footprint();
    const auto fb = b.footprint();
    std::vector<Pt> poly(fa.begin(), fa.end());
    for (int i = 0; i < 4 && !poly.empty(); ++i) poly = clip(poly, fb[i], fb[(i + 1) % 4]);
    return poly.size() < 3 ? 0.0 : polygon_area(poly);
}

double rotated_iou_3d(const Box3D& a, const Box3D& b) {
    check_box(a);
    check_box(b);
    const double z_overlap =
        std::max(0.0, std::min(a.z_bottom + a.h, b.z_bottom + b.h) - std::max(a.z_bottom, b.z_bottom));
    if (z_overlap <= 0.0) return 0.0;
    const double inter = footprint_intersection_area(a, b) * z_overlap;
    const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// AP3D / AOS / OS
// ---------------------------------------------------------------------------

double orientation_similarity(double yaw_a, double yaw_b) {
    return 0.5 * (1.0 + std::cos(yaw_a - yaw_b));
}

double interpolated_ap(std::span<const double> recall, std::span<const double> precision,
                       ApInterpolation mode) {
    if (recall.size() != precision.size())
        throw ShapeMismatch("interpolated_ap: recall and precision lengths differ");
    const auto best_at = [&](double r) {
        double best = 0.0;
        for (std::size_t k = 0; k < recall.size(); ++k)
            if (recall[k] >= r - 1e-12) best = std::max(best, precision[k]);
        return best;
    };
    switch (mode) {
        case ApInterpolation::eleven_point: {
            double sum = 0.0;
            for (int i = 0; i <= 10; ++i) sum += best_at(i / 10.0);
            return sum / 11.0;
        }
        case ApInterpolation::forty_point: {
            double sum = 0.0;
            for (int i = 1; i <= 40; ++i) sum += best_at(i / 40.0);
            return sum / 40.0;
        }
        case ApInterpolation::all_point: {
            double sum = 0.0;
            double prev_recall = 0.0;
            for (std::size_t k = 0; k < recall.size(); ++k) {
                if (recall[k] > prev_recall) {
                    sum += (recall[k] - prev_recall) * best_at(recall[k]);
                    prev_recall = recall[k];
                }
            }
            return sum;
        }
    }
    return 0.0;
}

ApResult ap3d_aos_os(std::span<const std::vector<Detection>> dets,
                     std::span<const std::vector<GroundTruthObject>> gts, double iou_threshold,
                     ApInterpolation mode) {
    if (dets.size() != gts.size())
        throw ShapeMismatch("ap3d: detection and ground-truth frame counts differ");
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
        throw InvalidArgument("ap3d: IoU threshold must lie in (0, 1]");

    struct Ranked {
        std::size_t frame;
        std::size_t index;
        double score;
    };
    std::vector<Ranked> ranked;
    std::size_t total_gt = 0;
    for (std::size_t f = 0; f < dets.size(); ++f) {
        total_gt += gts[f].size();
        for (std::size_t i = 0; i < dets[f].size(); ++i) ranked.push_back({f, i, dets[f][i].score});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

    std::vector<std::vector<char>> matched(gts.size());
    for (std::size_t f = 0; f < gts.size(); ++f) matched[f].assign(gts[f].size(), 0);

    ApResult res;
    res.iou_threshold = iou_threshold;
    double similarity_sum = 0.0;
    std::vector<double> recall, precision, orientation_precision;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        const Ranked& r = ranked[k];
        const Box3D det_box = Box3D::from(dets[r.frame][r.index]);
        double best_iou = -1.0;
        int best = -1;
        for (std::size_t j = 0; j < gts[r.frame].size(); ++j) {
            if (matched[r.frame][j]) continue;
            const double iou = rotated_iou_3d(det_box, Box3D::from(gts[r.frame][j]));
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(j);
            }
        }
        if (best >= 0 && best_iou >= iou_threshold) {
            matched[r.frame][best] = 1;
            ++res.tp;
            similarity_sum +=
                orientation_similarity(dets[r.frame][r.index].yaw, gts[r.frame][best].yaw);
        } else {
            ++res.fp;
        }
        const double rank = static_cast<double>(k + 1);
        recall.push_back(total_gt ? static_cast<double>(res.tp) / total_gt : 0.0);
        precision.push_back(static_cast<double>(res.tp) / rank);
        orientation_precision.push_back(similarity_sum / rank);
        res.curve.push_back({r.score, precision.back(), recall.back(), orientation_precision.back()});
    }
    if (total_gt > 0) {
        res.ap = interpolated_ap(recall, precision, mode);
        res.aos = interpolated_ap(recall, orientation_precision, mode);
    }
    res.os = res.tp ? similarity_sum / static_cast<double>(res.tp) : 0.0;
    return res;
}

MetricsReport evaluate(std::span<const std::vector<Detection>> dets,
                       std::span<const std::vector<GroundTruthObject>> gts,
                       const MatchConfig& cfg) {
    cfg.validate();
    if (dets.size() != gts.size())
        throw ShapeMismatch("evaluate: detection and ground-truth frame counts differ");
    std::vector<FrameMatching> frames;
    frames.reserve(dets.size());
    for (std::size_t f = 0; f < dets.size(); ++f)
        frames.push_back(match_frame(dets[f], gts[f], cfg.distance_threshold));
    MetricsReport report;
    report.clear = moda_modp(frames, cfg.distance_threshold);
    for (double t : cfg.iou_thresholds)
        report.per_threshold.push_back(ap3d_aos_os(dets, gts, t, cfg.interpolation));
    report.os = report.per_threshold.empty() ? 0.0 : report.per_threshold.front().os;
    return report;
}

}  // namespace vfa
