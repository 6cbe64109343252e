#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vfa/decoding.hpp"
#include "vfa/error.hpp"
#include "vfa/metrics.hpp"
#include "vfa/pipeline.hpp"
#include "vfa/scenegen.hpp"
#include "vfa/voxel.hpp"

namespace py = pybind11;
using namespace vfa;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

FloatArray to_array(const std::vector<float>& data, std::vector<py::ssize_t> shape) {
    FloatArray a(shape);
    std::copy(data.begin(), data.end(), a.mutable_data());
    return a;
}

FeatureMap map_from_array(const FloatArray& a) {
    if (a.ndim() != 3) throw ShapeMismatch("feature map must be a (C, H, W) array");
    FeatureMap m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), m.data.begin());
    return m;
}

FloatArray ground_to_array(const GroundFeature& g) {
    return to_array(g.data, {g.channels, g.height, g.width});
}

GroundFeature ground_from_array(const FloatArray& a) {
    if (a.ndim() != 3) throw ShapeMismatch("BEV map must be a (C, H, W) array");
    GroundFeature g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), g.data.begin());
    return g;
}

ConfidenceMode parse_mode(const std::string& s) {
    if (s == "point") return ConfidenceMode::point;
    if (s == "gaussian") return ConfidenceMode::gaussian;
    if (s == "oriented") return ConfidenceMode::oriented_gaussian;
    throw InvalidArgument("mode must be point, gaussian or oriented");
}

}  // namespace

PYBIND11_MODULE(pyvfa, m) {
    m.doc() = "Voxelized multi-view feature aggregation";
    static py::exception<Error> error(m, "Error", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::class_<Camera>(m, "Camera")
        .def(py::init([](int id, double fx, double fy, double cx, double cy, const Mat3& R, const Vec3& t,
                         int width, int height, double skew) {
                 return Camera(id, Intrinsics{fx, fy, cx, cy, skew}, Extrinsics(R, t), width, height);
             }),
             py::arg("id"), py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("R"), py::arg("t"),
             py::arg("width"), py::arg("height"), py::arg("skew") = 0.0)
        .def_static(
            "look_at",
            [](int id, double f, const Vec3& eye, const Vec3& target, int width, int height) {
                return Camera(id, Intrinsics{f, f, (width - 1) / 2.0, (height - 1) / 2.0},
                              Extrinsics::look_at(eye, target), width, height);
            },
            py::arg("id"), py::arg("focal"), py::arg("eye"), py::arg("target"), py::arg("width"), py::arg("height"))
        .def_property_readonly("id", &Camera::id)
        .def_property_readonly("width", &Camera::image_width)
        .def_property_readonly("height", &Camera::image_height)
        .def_property_readonly("projection", &Camera::projection)
        .def(
            "project",
            [](const Camera& c, double x, double y, double z) -> std::optional<std::pair<double, double>> {
                const auto q = project_point(c, {x, y, z});
                if (!q) return std::nullopt;
                return std::make_pair(q->u, q->v);
            },
            "Pixel (u, v) of a world point, None behind the camera")
        .def(
            "backproject",
            [](const Camera& c, double u, double v, double plane) -> std::optional<std::array<double, 3>> {
                const auto p = backproject_to_plane(c, {u, v}, plane);
                if (!p) return std::nullopt;
                return std::array<double, 3>{p->x, p->y, p->z};
            },
            py::arg("u"), py::arg("v"), py::arg("plane_height") = 0.0)
        .def("ground_homography", &ground_homography, py::arg("plane_height") = 0.0);

    py::class_<VoxelGridSpec>(m, "Grid")
        .def(py::init([](std::array<double, 3> origin, int nx, int ny, int nz, double l, double w, double h) {
                 VoxelGridSpec g{WorldPoint{origin[0], origin[1], origin[2]}, nx, ny, nz, l, w, h};
                 g.validate();
                 return g;
             }),
             py::arg("origin"), py::arg("nx"), py::arg("ny"), py::arg("nz"), py::arg("voxel_l"),
             py::arg("voxel_w"), py::arg("voxel_h"))
        .def_static("multiviewc", &VoxelGridSpec::multiviewc)
        .def_readonly("nx", &VoxelGridSpec::nx)
        .def_readonly("ny", &VoxelGridSpec::ny)
        .def_readonly("nz", &VoxelGridSpec::nz)
        .def_readonly("voxel_l", &VoxelGridSpec::voxel_l)
        .def_readonly("voxel_w", &VoxelGridSpec::voxel_w)
        .def_readonly("voxel_h", &VoxelGridSpec::voxel_h);

    py::class_<ProjectionTable>(m, "ProjectionTable")
        .def_property_readonly("stride", &ProjectionTable::stride)
        .def_property_readonly("camera_count", &ProjectionTable::camera_count)
        .def(
            "boxes",
            [](const ProjectionTable& t) {
                const auto nv = static_cast<py::ssize_t>(t.grid().voxel_count());
                const auto nc = static_cast<py::ssize_t>(t.camera_count());
                py::array_t<std::int32_t> a({nc, nv, py::ssize_t{5}});
                auto r = a.mutable_unchecked<3>();
                for (py::ssize_t c = 0; c < nc; ++c)
                    for (py::ssize_t v = 0; v < nv; ++v) {
                        const VoxelBox2D& b = t.box(c, v);
                        r(c, v, 0) = b.u_min;
                        r(c, v, 1) = b.v_min;
                        r(c, v, 2) = b.u_max;
                        r(c, v, 3) = b.v_max;
                        r(c, v, 4) = b.valid;
                    }
                return a;
            },
            "(cameras, voxels, 5) array of u_min, v_min, u_max, v_max, valid");

    m.def(
        "build_projection_table",
        [](const VoxelGridSpec& g, const std::vector<Camera>& cams, int stride) {
            return build_projection_table(g, cams, stride);
        },
        py::arg("grid"), py::arg("cameras"), py::arg("stride") = 1);

    m.def(
        "aggregate_features",
        [](const ProjectionTable& t, const std::vector<FloatArray>& arrays) {
            std::vector<FeatureMap> maps;
            for (const auto& a : arrays) maps.push_back(map_from_array(a));
            std::vector<FloatArray> out;
            for (const auto& v : aggregate_features(t, maps)) out.push_back(to_array(v.data, {v.channels, v.nz, v.ny, v.nx}));
            return out;
        },
        py::arg("table"), py::arg("feature_maps"), "Per-camera (C, nz, ny, nx) voxel features");

    py::class_<GroundTruthObject>(m, "Object")
        .def(py::init([](int id, double x, double y, double l, double w, double h, double yaw) {
                 return GroundTruthObject{id, x, y, l, w, h, yaw};
             }),
             py::arg("id"), py::arg("x"), py::arg("y"), py::arg("l"), py::arg("w"), py::arg("h"), py::arg("yaw"))
        .def_readwrite("id", &GroundTruthObject::id)
        .def_readwrite("x", &GroundTruthObject::x)
        .def_readwrite("y", &GroundTruthObject::y)
        .def_readwrite("l", &GroundTruthObject::l)
        .def_readwrite("w", &GroundTruthObject::w)
        .def_readwrite("h", &GroundTruthObject::h)
        .def_readwrite("yaw", &GroundTruthObject::yaw)
        .def("__repr__", [](const GroundTruthObject& o) {
            return "Object(id=" + std::to_string(o.id) + ", x=" + std::to_string(o.x) + ", y=" + std::to_string(o.y) + ")";
        });

    py::class_<Detection>(m, "Detection")
        .def(py::init([](double x, double y, double l, double w, double h, double yaw, double score) {
                 return Detection{x, y, l, w, h, yaw, score};
             }),
             py::arg("x"), py::arg("y"), py::arg("l"), py::arg("w"), py::arg("h"), py::arg("yaw"), py::arg("score"))
        .def_readwrite("x", &Detection::x)
        .def_readwrite("y", &Detection::y)
        .def_readwrite("l", &Detection::l)
        .def_readwrite("w", &Detection::w)
        .def_readwrite("h", &Detection::h)
        .def_readwrite("yaw", &Detection::yaw)
        .def_readwrite("score", &Detection::score);

    py::class_<Scene>(m, "Scene")
        .def_readonly("cameras", &Scene::cameras)
        .def_readonly("objects", &Scene::objects)
        .def_readonly("frame", &Scene::frame);

    m.def(
        "generate_scene",
        [](std::uint64_t seed, int n_objects, int n_cameras, double extent) {
            SceneConfig sc;
            sc.seed = seed;
            sc.n_objects = n_objects;
            sc.n_cameras = n_cameras;
            sc.extent_x = sc.extent_y = extent;
            return generate_scene(sc);
        },
        py::arg("seed") = 0, py::arg("n_objects") = 15, py::arg("n_cameras") = 7, py::arg("extent") = 39.0);

    m.def(
        "render_feature_views",
        [](const Scene& s, int channels, int stride, double noise) {
            RenderConfig rc{channels, stride, noise, 0};
            std::vector<FloatArray> out;
            for (const auto& f : render_feature_views(s, rc)) out.push_back(to_array(f.data, {f.channels, f.height, f.width}));
            return out;
        },
        py::arg("scene"), py::arg("channels") = 16, py::arg("stride") = 4, py::arg("noise") = 0.02);

    m.def(
        "encode_targets",
        [](const std::vector<GroundTruthObject>& objs, const VoxelGridSpec& g, std::array<double, 3> mean,
           const std::string& mode, double alpha) {
            EncodeOptions opt;
            opt.mode = parse_mode(mode);
            opt.alpha = alpha;
            const TargetMaps t = encode_targets(objs, g, {mean[0], mean[1], mean[2]}, opt);
            py::dict d;
            d["confidence"] = ground_to_array(t.confidence);
            d["offset"] = ground_to_array(t.offset);
            d["dimension"] = ground_to_array(t.dimension);
            d["orientation"] = ground_to_array(t.orientation);
            d["mask"] = ground_to_array(t.mask);
            return d;
        },
        py::arg("objects"), py::arg("grid"), py::arg("mean_dims"), py::arg("mode") = "oriented",
        py::arg("alpha") = kDefaultAlpha);

    m.def(
        "decode",
        [](const py::dict& maps, const VoxelGridSpec& g, std::array<double, 3> mean, double threshold, int nms_radius) {
            TargetMaps t;
            t.confidence = ground_from_array(maps["confidence"].cast<FloatArray>());
            t.offset = ground_from_array(maps["offset"].cast<FloatArray>());
            t.dimension = ground_from_array(maps["dimension"].cast<FloatArray>());
            t.orientation = ground_from_array(maps["orientation"].cast<FloatArray>());
            const MeanDims md{mean[0], mean[1], mean[2]};
            DecoderConfig cfg = nms_radius > 0 ? DecoderConfig{} : DecoderConfig::defaults_for(md, g);
            if (nms_radius > 0) cfg.nms_radius = nms_radius;
            cfg.score_threshold = threshold;
            return decode(t, g, md, BevScale::for_grid(g), cfg);
        },
        py::arg("maps"), py::arg("grid"), py::arg("mean_dims"), py::arg("threshold") = 0.4,
        py::arg("nms_radius") = 0);

    m.def("encode_csl", &encode_csl, py::arg("theta"), py::arg("bins") = kCslBins, py::arg("radius") = kCslRadius);
    m.def(
        "decode_csl", [](const std::vector<float>& bins, int radius) { return decode_csl(bins, radius); },
        py::arg("bins"), py::arg("radius") = kCslRadius);

    m.def(
        "rotated_iou_3d",
        [](const Detection& a, const Detection& b) { return rotated_iou_3d(Box3D::from(a), Box3D::from(b)); },
        py::arg("a"), py::arg("b"));

    m.def(
        "evaluate",
        [](const std::vector<std::vector<Detection>>& dets, const std::vector<std::vector<GroundTruthObject>>& gts,
           double distance, std::vector<double> iou_thresholds) {
            MatchConfig cfg;
            cfg.distance_threshold = distance;
            cfg.iou_thresholds = std::move(iou_thresholds);
            const MetricsReport r = evaluate(dets, gts, cfg);
            py::dict d;
            d["moda"] = r.clear.moda;
            d["modp"] = r.clear.modp;
            d["precision"] = r.clear.precision;
            d["recall"] = r.clear.recall;
            d["tp"] = r.clear.tp;
            d["fp"] = r.clear.fp;
            d["fn"] = r.clear.fn;
            py::list per;
            for (const auto& t : r.per_threshold) {
                py::dict x;
                x["iou_threshold"] = t.iou_threshold;
                x["ap3d"] = t.ap;
                x["aos"] = t.aos;
                x["os"] = t.os;
                per.append(x);
            }
            d["per_threshold"] = per;
            d["os"] = r.os;
            return d;
        },
        py::arg("detections"), py::arg("ground_truth"), py::arg("distance") = 0.5,
        py::arg("iou_thresholds") = std::vector<double>{0.25, 0.5});
}
