#include "vfa/voxel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "vfa/error.hpp"
#include "vfa/parallel.hpp"

namespace vfa {

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

void VoxelGridSpec::validate() const {
    if (nx < 1 || ny < 1 || nz < 1) throw InvalidArgument("grid: voxel counts must be >= 1");
    if (!(voxel_l > 0.0) || !(voxel_w > 0.0) || !(voxel_h > 0.0))
        throw InvalidArgument("grid: voxel edge lengths must be positive");
    if (!std::isfinite(origin.x) || !std::isfinite(origin.y) || !std::isfinite(origin.z))
        throw InvalidArgument("grid: non-finite origin");
}

WorldPoint VoxelGridSpec::corner(int ix, int iy, int iz, int k) const {
    return {origin.x + (ix + (k & 1)) * voxel_l, origin.y + (iy + ((k >> 1) & 1)) * voxel_w,
            origin.z + (iz + ((k >> 2) & 1)) * voxel_h};
}

WorldPoint VoxelGridSpec::voxel_center(int ix, int iy, int iz) const {
    return {origin.x + (ix + 0.5) * voxel_l, origin.y + (iy + 0.5) * voxel_w,
            origin.z + (iz + 0.5) * voxel_h};
}

WorldPoint VoxelGridSpec::cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * voxel_l, origin.y + (iy + 0.5) * voxel_w, origin.z};
}

bool VoxelGridSpec::cell_of(double x, double y, int& ix, int& iy) const {
    const double fx = std::floor((x - origin.x) / voxel_l);
    const double fy = std::floor((y - origin.y) / voxel_w);
    if (fx < 0 || fy < 0 || fx >= nx || fy >= ny) return false;
    ix = static_cast<int>(fx);
    iy = static_cast<int>(fy);
    return true;
}

VoxelGridSpec VoxelGridSpec::multiviewc() {
    return {WorldPoint{0.0, 0.0, 0.0}, 156, 156, 5, 0.25, 0.25, 0.32};
}

VoxelGridSpec VoxelGridSpec::multiviewx_style(double extent_x, double extent_y) {
    VoxelGridSpec g{WorldPoint{0.0, 0.0, 0.0},
                    static_cast<int>(std::lround(extent_x / 0.1)),
                    static_cast<int>(std::lround(extent_y / 0.1)),
                    8,
                    0.1,
                    0.1,
                    0.2};
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// Projection table
// ---------------------------------------------------------------------------

VoxelBox2D rasterize_box(double u_min, double v_min, double u_max, double v_max,
                         int image_width, int image_height) {
    VoxelBox2D box;
    if (u_max < 0.0 || v_max < 0.0 || u_min > image_width - 1.0 || v_min > image_height - 1.0)
        return box;
    const double lo_u = std::max(0.0, std::floor(u_min));
    const double lo_v = std::max(0.0, std::floor(v_min));
    const double hi_u = std::min(image_width - 1.0, std::ceil(u_max));
    const double hi_v = std::min(image_height - 1.0, std::ceil(v_max));
    if (lo_u > hi_u || lo_v > hi_v) return box;
    box.u_min = static_cast<std::uint16_t>(lo_u);
    box.v_min = static_cast<std::uint16_t>(lo_v);
    box.u_max = static_cast<std::uint16_t>(hi_u);
    box.v_max = static_cast<std::uint16_t>(hi_v);
    box.valid = true;
    return box;
}

ProjectionTable::ProjectionTable(VoxelGridSpec grid, std::vector<ImageSize> images, int stride,
                                 std::vector<VoxelBox2D> entries)
    : grid_(grid), images_(std::move(images)), stride_(stride), entries_(std::move(entries)) {
    grid_.validate();
    if (stride_ < 1) throw InvalidArgument("projection table: stride must be >= 1");
    if (entries_.size() != images_.size() * grid_.voxel_count())
        throw ShapeMismatch("projection table: entry count != cameras x voxels");
}

VoxelBox2D ProjectionTable::feature_box(std::size_t camera, std::size_t voxel) const {
    const VoxelBox2D& b = box(camera, voxel);
    if (!b.valid || stride_ == 1) return b;
    const ImageSize& img = images_[camera];
    const int fw = img.width / stride_;
    const int fh = img.height / stride_;
    const auto ceil_div = [s = stride_](int v) { return (v + s - 1) / s; };
    VoxelBox2D f;
    f.u_min = static_cast<std::uint16_t>(std::min(b.u_min / stride_, fw - 1));
    f.v_min = static_cast<std::uint16_t>(std::min(b.v_min / stride_, fh - 1));
    f.u_max = static_cast<std::uint16_t>(std::min(ceil_div(b.u_max), fw - 1));
    f.v_max = static_cast<std::uint16_t>(std::min(ceil_div(b.v_max), fh - 1));
    f.valid = true;
    return f;
}

ProjectionTable build_projection_table(const VoxelGridSpec& grid,
                                       std::span<const Camera> cameras, int stride) {
    grid.validate();
    if (stride < 1) throw InvalidArgument("projection table: stride must be >= 1");
    const std::size_t nvox = grid.voxel_count();
    std::vector<ImageSize> images;
    for (const Camera& cam : cameras) {
        if (cam.image_width() > 65535 || cam.image_height() > 65535)
            throw InvalidArgument("projection table: image larger than 65535 pixels");
        images.push_back({cam.image_width(), cam.image_height()});
    }
    std::vector<VoxelBox2D> entries(cameras.size() * nvox);

    // Corners are shared between neighbouring voxels: project the lattice
    // once per camera, then reduce 8 corners per voxel.
    const int cx = grid.nx + 1;
    const int cy = grid.ny + 1;
    const int cz = grid.nz + 1;
    const std::size_t ncorner = static_cast<std::size_t>(cx) * cy * cz;
    std::vector<ImagePoint> px(ncorner);
    std::vector<unsigned char> in_front(ncorner);

    for (std::size_t c = 0; c < cameras.size(); ++c) {
        const Camera& cam = cameras[c];
        parallel_for(ncorner, [&](std::size_t i) {
            const int ix = static_cast<int>(i % cx);
            const int iy = static_cast<int>((i / cx) % cy);
            const int iz = static_cast<int>(i / (static_cast<std::size_t>(cx) * cy));
            const WorldPoint p{grid.origin.x + ix * grid.voxel_l, grid.origin.y + iy * grid.voxel_w,
                               grid.origin.z + iz * grid.voxel_h};
            const auto q = project_point(cam, p);
            in_front[i] = q.has_value();
            px[i] = q.value_or(ImagePoint{});
        });
        VoxelBox2D* out = entries.data() + c * nvox;
        parallel_for(nvox, [&](std::size_t v) {
            const int ix = static_cast<int>(v % grid.nx);
            const int iy = static_cast<int>((v / grid.nx) % grid.ny);
            const int iz = static_cast<int>(v / grid.cell_count());
            double u0 = std::numeric_limits<double>::infinity();
            double v0 = u0;
            double u1 = -u0;
            double v1 = -u0;
            for (int k = 0; k < 8; ++k) {
                const std::size_t ci =
                    (static_cast<std::size_t>(iz + ((k >> 2) & 1)) * cy + iy + ((k >> 1) & 1)) * cx +
                    ix + (k & 1);
                if (!in_front[ci]) {
                    out[v] = VoxelBox2D{};
                    return;
                }
                u0 = std::min(u0, px[ci].u);
                v0 = std::min(v0, px[ci].v);
                u1 = std::max(u1, px[ci].u);
                v1 = std::max(v1, px[ci].v);
            }
            out[v] = rasterize_box(u0, v0, u1, v1, cam.image_width(), cam.image_height());
        });
    }
    return ProjectionTable(grid, std::move(images), stride, std::move(entries));
}

namespace {

constexpr std::array<char, 8> kTableMagic = {'V', 'F', 'A', 'P', 'T', 'B', 'L', '\0'};
constexpr std::uint32_t kTableVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    in.read(bytes.data(), sizeof(T));
    if (!in) throw FormatError("projection table: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

void save_projection_table(const std::filesystem::path& path, const ProjectionTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("projection table: cannot open " + path.string());
    out.write(kTableMagic.data(), kTableMagic.size());
    put<std::uint32_t>(out, kTableVersion);
    const VoxelGridSpec& g = table.grid();
    put<double>(out, g.origin.x);
    put<double>(out, g.origin.y);
    put<double>(out, g.origin.z);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nx));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ny));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nz));
    put<double>(out, g.voxel_l);
    put<double>(out, g.voxel_w);
    put<double>(out, g.voxel_h);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(table.stride()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(table.camera_count()));
    for (std::size_t c = 0; c < table.camera_count(); ++c) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(table.image_size(c).width));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(table.image_size(c).height));
    }
    for (const VoxelBox2D& b : table.entries()) {
        put<std::uint16_t>(out, b.u_min);
        put<std::uint16_t>(out, b.v_min);
        put<std::uint16_t>(out, b.u_max);
        put<std::uint16_t>(out, b.v_max);
        put<std::uint8_t>(out, b.valid ? 1 : 0);
    }
    if (!out) throw FormatError("projection table: write failed");
}

ProjectionTable load_projection_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("projection table: cannot open " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kTableMagic) throw FormatError("projection table: bad magic");
    if (const auto version = get<std::uint32_t>(in); version != kTableVersion)
        throw FormatError("projection table: unsupported version " + std::to_string(version));
    VoxelGridSpec g;
    g.origin.x = get<double>(in);
    g.origin.y = get<double>(in);
    g.origin.z = get<double>(in);
    g.nx = static_cast<int>(get<std::uint32_t>(in));
    g.ny = static_cast<int>(get<std::uint32_t>(in));
    g.nz = static_cast<int>(get<std::uint32_t>(in));
    g.voxel_l = get<double>(in);
    g.voxel_w = get<double>(in);
    g.voxel_h = get<double>(in);
    g.validate();
    const int stride = static_cast<int>(get<std::uint32_t>(in));
    const std::uint32_t ncam = get<std::uint32_t>(in);
    std::vector<ImageSize> images(ncam);
    for (auto& img : images) {
        img.width = static_cast<int>(get<std::uint32_t>(in));
        img.height = static_cast<int>(get<std::uint32_t>(in));
    }
    std::vector<VoxelBox2D> entries(static_cast<std::size_t>(ncam) * g.voxel_count());
    for (auto& b : entries) {
        b.u_min = get<std::uint16_t>(in);
        b.v_min = get<std::uint16_t>(in);
        b.u_max = get<std::uint16_t>(in);
        b.v_max = get<std::uint16_t>(in);
        const auto flag = get<std::uint8_t>(in);
        if (flag > 1) throw FormatError("projection table: bad validity byte");
        b.valid = flag == 1;
    }
    return ProjectionTable(g, std::move(images), stride, std::move(entries));
}

// ---------------------------------------------------------------------------
// Feature containers
// ---------------------------------------------------------------------------

FeatureMap::FeatureMap(int c, int h, int w)
    : channels(c), height(h), width(w),
      data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w),
           0.0f) {
    if (c < 1 || h < 1 || w < 1) throw InvalidArgument("feature map: dimensions must be >= 1");
}

Tensor FeatureMap::to_tensor() const {
    return Tensor({static_cast<std::size_t>(channels), static_cast<std::size_t>(height),
                   static_cast<std::size_t>(width)},
                  data);
}

FeatureMap FeatureMap::from_tensor(const Tensor& t) {
    if (t.shape.size() != 3) throw ShapeMismatch("feature map: expected a [C][H][W] tensor");
    FeatureMap m(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]),
                 static_cast<int>(t.shape[2]));
    m.data = t.data;
    for (float v : m.data)
        if (!std::isfinite(v)) throw InvalidArgument("feature map: non-finite value");
    return m;
}

VoxelFeature::VoxelFeature(int c, int z, int y, int x)
    : channels(c), nz(z), ny(y), nx(x),
      data(static_cast<std::size_t>(c) * static_cast<std::size_t>(z) * static_cast<std::size_t>(y) *
               static_cast<std::size_t>(x),
           0.0f) {}

GroundFeature::GroundFeature(int c, int h, int w)
    : channels(c), height(h), width(w),
      data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w),
           0.0f) {}

Tensor GroundFeature::to_tensor() const {
    return Tensor({static_cast<std::size_t>(channels), static_cast<std::size_t>(height),
                   static_cast<std::size_t>(width)},
                  data);
}

GroundFeature GroundFeature::from_tensor(const Tensor& t) {
    if (t.shape.size() != 3) throw ShapeMismatch("ground feature: expected a [C][H][W] tensor");
    GroundFeature g(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]),
                    static_cast<int>(t.shape[2]));
    g.data = t.data;
    return g;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace {

// Summed-area table with one row/column of zero padding, per channel.
class IntegralImage {
public:
    explicit IntegralImage(const FeatureMap& map)
        : w_(map.width + 1), h_(map.height + 1),
          sums_(static_cast<std::size_t>(map.channels) * w_ * h_, 0.0) {
        for (int c = 0; c < map.channels; ++c) {
            double* s = sums_.data() + static_cast<std::size_t>(c) * w_ * h_;
            for (int y = 0; y < map.height; ++y) {
                double row = 0.0;
                for (int x = 0; x < map.width; ++x) {
                    row += map.at(c, y, x);
                    s[(y + 1) * w_ + x + 1] = s[y * w_ + x + 1] + row;
                }
            }
        }
    }

    // Sum over the inclusive box.
    double box_sum(int c, const VoxelBox2D& b) const {
        const double* s = sums_.data() + static_cast<std::size_t>(c) * w_ * h_;
        const int x0 = b.u_min;
        const int y0 = b.v_min;
        const int x1 = b.u_max + 1;
        const int y1 = b.v_max + 1;
        return s[y1 * w_ + x1] - s[y0 * w_ + x1] - s[y1 * w_ + x0] + s[y0 * w_ + x0];
    }

private:
    std::size_t w_;
    std::size_t h_;
    std::vector<double> sums_;
};

}  // namespace

std::vector<VoxelFeature> aggregate_features(const ProjectionTable& table,
                                             std::span<const FeatureMap> maps) {
    if (maps.size() != table.camera_count())
        throw ShapeMismatch("aggregate: " + std::to_string(maps.size()) + " feature maps for " +
                            std::to_string(table.camera_count()) + " cameras");
    const VoxelGridSpec& g = table.grid();
    const int s = table.stride();
    std::vector<VoxelFeature> out;
    out.reserve(maps.size());
    for (std::size_t c = 0; c < maps.size(); ++c) {
        const FeatureMap& m = maps[c];
        const ImageSize& img = table.image_size(c);
        if (m.width * s != img.width || m.height * s != img.height)
            throw ShapeMismatch("aggregate: camera " + std::to_string(c) + " feature map is " +
                                std::to_string(m.width) + "x" + std::to_string(m.height) +
                                ", expected image size / stride " + std::to_string(s));
        if (c > 0 && m.channels != maps[0].channels)
            throw ShapeMismatch("aggregate: feature maps disagree on channel count");
        const IntegralImage sat(m);
        VoxelFeature vf(m.channels, g.nz, g.ny, g.nx);
        parallel_for(g.voxel_count(), [&](std::size_t v) {
            const VoxelBox2D fb = table.feature_box(c, v);
            if (!fb.valid) return;
            const double inv = 1.0 / static_cast<double>(fb.pixel_count());
            for (int ch = 0; ch < m.channels; ++ch)
                vf.at(ch, v) = static_cast<float>(sat.box_sum(ch, fb) * inv);
        });
        out.push_back(std::move(vf));
    }
    return out;
}

GroundFeature collapse_to_bev(std::span<const VoxelFeature> voxels, CollapseMode mode) {
    if (voxels.empty()) throw ShapeMismatch("collapse: no voxel features");
    const VoxelFeature& first = voxels.front();
    for (const VoxelFeature& v : voxels)
        if (v.channels != first.channels || v.nz != first.nz || v.ny != first.ny ||
            v.nx != first.nx)
            throw ShapeMismatch("collapse: per-camera voxel features differ in shape");
    const int n = static_cast<int>(voxels.size());
    const int C = first.channels;
    const int nz = first.nz;
    const std::size_t cells = static_cast<std::size_t>(first.ny) * first.nx;

    if (mode == CollapseMode::concat) {
        GroundFeature out(n * nz * C, first.ny, first.nx);
        for (int cam = 0; cam < n; ++cam)
            for (int z = 0; z < nz; ++z)
                for (int c = 0; c < C; ++c) {
                    const float* src = voxels[cam].data.data() +
                                       static_cast<std::size_t>(c) * first.voxel_count() +
                                       static_cast<std::size_t>(z) * cells;
                    float* dst = out.data.data() +
                                 static_cast<std::size_t>((cam * nz + z) * C + c) * cells;
                    std::copy(src, src + cells, dst);
                }
        return out;
    }

    GroundFeature out(n * C, first.ny, first.nx);
    for (int cam = 0; cam < n; ++cam)
        for (int c = 0; c < C; ++c) {
            float* dst = out.data.data() + static_cast<std::size_t>(cam * C + c) * cells;
            const float* base =
                voxels[cam].data.data() + static_cast<std::size_t>(c) * first.voxel_count();
            for (std::size_t cell = 0; cell < cells; ++cell) {
                double acc = mode == CollapseMode::max ? -std::numeric_limits<double>::infinity()
                                                       : 0.0;
                for (int z = 0; z < nz; ++z) {
                    const double val = base[static_cast<std::size_t>(z) * cells + cell];
                    acc = mode == CollapseMode::max ? std::max(acc, val) : acc + val;
                }
                dst[cell] = static_cast<float>(mode == CollapseMode::max ? acc : acc / nz);
            }
        }
    return out;
}

double sample_bilinear(const FeatureMap& map, int channel, double x, double y) {
    if (!(x >= 0.0) || !(y >= 0.0) || x > map.width - 1.0 || y > map.height - 1.0) return 0.0;
    const int x0 = std::min(static_cast<int>(x), map.width - 1);
    const int y0 = std::min(static_cast<int>(y), map.height - 1);
    const int x1 = std::min(x0 + 1, map.width - 1);
    const int y1 = std::min(y0 + 1, map.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * map.at(channel, y0, x0) + fx * map.at(channel, y0, x1);
    const double bottom = (1.0 - fx) * map.at(channel, y1, x0) + fx * map.at(channel, y1, x1);
    return (1.0 - fy) * top + fy * bottom;
}

GroundFeature homography_aggregate(std::span<const Camera> cameras,
                                   std::span<const FeatureMap> maps,
                                   std::span<const double> heights, const VoxelGridSpec& bev,
                                   int stride) {
    bev.validate();
    if (cameras.size() != maps.size() || cameras.empty())
        throw ShapeMismatch("homography aggregate: need one feature map per camera");
    if (heights.empty()) throw InvalidArgument("homography aggregate: no plane heights");
    if (stride < 1) throw InvalidArgument("homography aggregate: stride must be >= 1");
    const int C = maps[0].channels;
    const int nh = static_cast<int>(heights.size());
    const int n = static_cast<int>(cameras.size());
    for (int cam = 0; cam < n; ++cam) {
        const FeatureMap& m = maps[cam];
        if (m.channels != C || m.width * stride != cameras[cam].image_width() ||
            m.height * stride != cameras[cam].image_height())
            throw ShapeMismatch("homography aggregate: camera " + std::to_string(cam) +
                                " feature map does not match image size / stride");
    }
    GroundFeature out(n * nh * C, bev.ny, bev.nx);
    const double half = 0.5 * (stride - 1);
    for (int cam = 0; cam < n; ++cam) {
        for (int k = 0; k < nh; ++k) {
            const Mat3 H = ground_homography(cameras[cam], heights[k]);
            parallel_for(bev.cell_count(), [&](std::size_t cell) {
                const int ix = static_cast<int>(cell % bev.nx);
                const int iy = static_cast<int>(cell / bev.nx);
                const WorldPoint p = bev.cell_center(ix, iy);
                const Vec3 q = H * Vec3(p.x, p.y, 1.0);
                if (q.z() <= kDepthEpsilon) return;
                const double fu = (q.x() / q.z() - half) / stride;
                const double fv = (q.y() / q.z() - half) / stride;
                for (int c = 0; c < C; ++c)
                    out.at((cam * nh + k) * C + c, iy, ix) =
                        static_cast<float>(sample_bilinear(maps[cam], c, fu, fv));
            });
        }
    }
    return out;
}

}  // namespace vfa
