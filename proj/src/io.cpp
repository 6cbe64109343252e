#include "vfa/io.hpp"

#include <fstream>
#include <sstream>

#include "vfa/error.hpp"

namespace vfa {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename M>
ordered_json matrix_rows(const M& m) {
    ordered_json rows = ordered_json::array();
    for (int r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Mat3 mat3_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw FormatError(std::string(what) + " must be 3x3");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        if (!j[r].is_array() || j[r].size() != 3)
            throw FormatError(std::string(what) + " must be 3x3");
        for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad field \"") + key + "\": " + e.what());
    }
}

ordered_json object_to_json(const GroundTruthObject& o) {
    ordered_json j;
    j["id"] = o.id;
    j["center"] = {o.x, o.y};
    j["dims"] = {o.l, o.w, o.h};
    j["yaw"] = o.yaw;
    return j;
}

GroundTruthObject object_from_json(const json& j) {
    GroundTruthObject o;
    o.id = field<int>(j, "id");
    const auto c = field<std::vector<double>>(j, "center");
    const auto d = field<std::vector<double>>(j, "dims");
    if (c.size() != 2) throw FormatError("center must be [x, y]");
    if (d.size() != 3) throw FormatError("dims must be [l, w, h]");
    o.x = c[0];
    o.y = c[1];
    o.l = d[0];
    o.w = d[1];
    o.h = d[2];
    o.yaw = field<double>(j, "yaw");
    o.validate();
    return o;
}

json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(where + ": " + e.what());
    }
}

}  // namespace

ordered_json calibration_to_json(std::span<const Camera> cameras) {
    ordered_json cams = ordered_json::array();
    for (const Camera& c : cameras) {
        ordered_json j;
        j["id"] = c.id();
        j["image_size"] = {c.image_width(), c.image_height()};
        j["K"] = matrix_rows(c.intrinsics().matrix());
        j["R"] = matrix_rows(c.extrinsics().rotation());
        const Vec3& t = c.extrinsics().translation();
        j["t"] = {t.x(), t.y(), t.z()};
        cams.push_back(j);
    }
    ordered_json doc;
    doc["cameras"] = cams;
    return doc;
}

std::vector<Camera> calibration_from_json(const json& j) {
    if (!j.contains("cameras") || !j["cameras"].is_array())
        throw FormatError("calibration: missing \"cameras\" array");
    std::vector<Camera> cameras;
    for (const json& c : j["cameras"]) {
        const auto size = field<std::vector<int>>(c, "image_size");
        if (size.size() != 2) throw FormatError("calibration: image_size must be [W, H]");
        const auto t = field<std::vector<double>>(c, "t");
        if (t.size() != 3) throw FormatError("calibration: t must have 3 entries");
        if (!c.contains("K") || !c.contains("R")) throw FormatError("calibration: missing K or R");
        cameras.emplace_back(field<int>(c, "id"), Intrinsics::from_matrix(mat3_from(c["K"], "K")),
                             Extrinsics(mat3_from(c["R"], "R"), Vec3(t[0], t[1], t[2])), size[0],
                             size[1]);
    }
    return cameras;
}

std::vector<Camera> read_calibration(const std::filesystem::path& path) {
    return calibration_from_json(read_json(path));
}

void write_calibration(const std::filesystem::path& path, std::span<const Camera> cameras) {
    write_json(path, calibration_to_json(cameras));
}

ordered_json annotation_to_json(const AnnotatedFrame& frame) {
    ordered_json j;
    j["frame"] = frame.frame;
    j["objects"] = ordered_json::array();
    for (const auto& o : frame.objects) j["objects"].push_back(object_to_json(o));
    return j;
}

AnnotatedFrame annotation_from_json(const json& j) {
    AnnotatedFrame f;
    f.frame = field<int>(j, "frame");
    if (!j.contains("objects") || !j["objects"].is_array())
        throw FormatError("annotation: missing \"objects\" array");
    for (const json& o : j["objects"]) f.objects.push_back(object_from_json(o));
    return f;
}

std::vector<AnnotatedFrame> read_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::vector<AnnotatedFrame> frames;
    try {
        const json doc = json::parse(text);
        if (doc.is_array()) {
            for (const json& f : doc) frames.push_back(annotation_from_json(f));
        } else {
            frames.push_back(annotation_from_json(doc));
        }
        return frames;
    } catch (const json::parse_error&) {
        // Fall through to JSON lines.
    }
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        frames.push_back(annotation_from_json(parse_json(line, path.string())));
    }
    return frames;
}

void write_annotation(const std::filesystem::path& path, const AnnotatedFrame& frame) {
    write_json(path, annotation_to_json(frame));
}

void write_annotations(const std::filesystem::path& path, std::span<const AnnotatedFrame> frames) {
    ordered_json doc = ordered_json::array();
    for (const auto& f : frames) doc.push_back(annotation_to_json(f));
    write_json(path, doc);
}

void write_detections(std::ostream& out, std::span<const FrameDetection> dets) {
    for (const auto& fd : dets) {
        const Detection& d = fd.detection;
        ordered_json j;
        j["frame"] = fd.frame;
        j["id"] = fd.id;
        j["center"] = {d.x, d.y};
        j["dims"] = {d.l, d.w, d.h};
        j["yaw"] = d.yaw;
        j["score"] = d.score;
        out << j.dump() << '\n';
    }
}

std::vector<FrameDetection> read_detections(std::istream& in) {
    std::vector<FrameDetection> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const json j = parse_json(line, "detections");
        FrameDetection fd;
        fd.frame = j.value("frame", 0);
        const GroundTruthObject o = object_from_json(j);
        fd.id = o.id;
        fd.detection = {o.x, o.y, o.l, o.w, o.h, o.yaw, field<double>(j, "score")};
        if (!(fd.detection.score >= 0.0 && fd.detection.score <= 1.0))
            throw FormatError("detections: score must lie in [0, 1]");
        out.push_back(fd);
    }
    return out;
}

std::vector<FrameDetection> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    return read_detections(in);
}

ordered_json metrics_to_json(const MetricsReport& report, const MatchConfig& cfg) {
    ordered_json j;
    j["distance_threshold"] = cfg.distance_threshold;
    j["moda"] = report.clear.moda;
    j["modp"] = report.clear.modp;
    j["precision"] = report.clear.precision;
    j["recall"] = report.clear.recall;
    j["tp"] = report.clear.tp;
    j["fp"] = report.clear.fp;
    j["fn"] = report.clear.fn;
    j["gt"] = report.clear.gt;
    j["interpolation"] = cfg.interpolation == ApInterpolation::eleven_point  ? "11"
                         : cfg.interpolation == ApInterpolation::forty_point ? "40"
                                                                             : "all";
    ordered_json per = ordered_json::array();
    for (const auto& r : report.per_threshold) {
        ordered_json t;
        t["iou_threshold"] = r.iou_threshold;
        t["ap3d"] = r.ap;
        t["aos"] = r.aos;
        t["os"] = r.os;
        t["tp"] = r.tp;
        t["fp"] = r.fp;
        per.push_back(t);
    }
    j["per_threshold"] = per;
    j["os"] = report.os;
    return j;
}

void write_pr_curve_csv(std::ostream& out, const MetricsReport& report) {
    out << "iou_threshold,rank,score,precision,recall,orientation_precision\n";
    for (const auto& r : report.per_threshold)
        for (std::size_t k = 0; k < r.curve.size(); ++k) {
            const PrPoint& p = r.curve[k];
            out << r.iou_threshold << ',' << k + 1 << ',' << p.score << ',' << p.precision << ','
                << p.recall << ',' << p.orientation_precision << '\n';
        }
}

ordered_json grid_to_json(const VoxelGridSpec& g) {
    ordered_json j;
    j["origin"] = {g.origin.x, g.origin.y, g.origin.z};
    j["size"] = {g.nx, g.ny, g.nz};
    j["voxel"] = {g.voxel_l, g.voxel_w, g.voxel_h};
    return j;
}

VoxelGridSpec grid_from_json(const json& j) {
    const auto o = field<std::vector<double>>(j, "origin");
    const auto n = field<std::vector<int>>(j, "size");
    const auto v = field<std::vector<double>>(j, "voxel");
    if (o.size() != 3 || n.size() != 3 || v.size() != 3)
        throw FormatError("grid: origin, size and voxel need 3 entries each");
    VoxelGridSpec g{{o[0], o[1], o[2]}, n[0], n[1], n[2], v[0], v[1], v[2]};
    g.validate();
    return g;
}

ordered_json target_meta_to_json(const TargetMeta& meta) {
    ordered_json j;
    j["frame"] = meta.frame;
    j["grid"] = grid_to_json(meta.grid);
    j["mean_dims"] = {meta.mean.l, meta.mean.w, meta.mean.h};
    j["units_per_meter"] = meta.scale.units_per_meter;
    j["gamma"] = meta.scale.gamma;
    return j;
}

TargetMeta target_meta_from_json(const json& j) {
    TargetMeta m;
    m.frame = field<int>(j, "frame");
    if (!j.contains("grid")) throw FormatError("target meta: missing grid");
    m.grid = grid_from_json(j["grid"]);
    const auto d = field<std::vector<double>>(j, "mean_dims");
    if (d.size() != 3) throw FormatError("target meta: mean_dims needs 3 entries");
    m.mean = {d[0], d[1], d[2]};
    m.mean.validate();
    m.scale = {field<double>(j, "units_per_meter"), field<double>(j, "gamma")};
    m.scale.validate();
    return m;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), path.string());
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace vfa
