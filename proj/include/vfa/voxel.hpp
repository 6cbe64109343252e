#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vfa/geometry.hpp"
#include "vfa/tensor.hpp"

namespace vfa {

// Axis-aligned voxel grid standing on the ground. Voxels are indexed
// (iz * ny + iy) * nx + ix; BEV cells are (iy, ix).
struct VoxelGridSpec {
    WorldPoint origin;  // min corner
    int nx = 1;
    int ny = 1;
    int nz = 1;
    double voxel_l = 1.0;  // along x
    double voxel_w = 1.0;  // along y
    double voxel_h = 1.0;  // along z

    void validate() const;
    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    }
    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(iz) * ny + iy) * nx + ix;
    }
    double extent_x() const { return nx * voxel_l; }
    double extent_y() const { return ny * voxel_w; }
    double extent_z() const { return nz * voxel_h; }

    // Corner k in [0, 8): bit 0 selects +x, bit 1 +y, bit 2 +z.
    WorldPoint corner(int ix, int iy, int iz, int k) const;
    WorldPoint voxel_center(int ix, int iy, int iz) const;
    // Ground-level center of BEV cell (ix, iy).
    WorldPoint cell_center(int ix, int iy) const;
    // BEV cell holding a ground position; false when outside the grid.
    bool cell_of(double x, double y, int& ix, int& iy) const;

    // 39 m x 39 m farm at 156 x 156 x 5, voxel 0.25 x 0.25 x 0.32 m.
    static VoxelGridSpec multiviewc();
    // 0.1 x 0.1 x 0.2 m voxels with 8 layers over the given floor extent.
    static VoxelGridSpec multiviewx_style(double extent_x = 25.0, double extent_y = 16.0);

    bool operator==(const VoxelGridSpec&) const = default;
};

struct VoxelBox2D {
    std::uint16_t u_min = 0;
    std::uint16_t v_min = 0;
    std::uint16_t u_max = 0;
    std::uint16_t v_max = 0;
    bool valid = false;

    std::size_t pixel_count() const {
        return valid ? static_cast<std::size_t>(u_max - u_min + 1) *
                           static_cast<std::size_t>(v_max - v_min + 1)
                     : 0;
    }
    bool operator==(const VoxelBox2D&) const = default;
};

// Rasterizes a continuous pixel bounding box onto the inclusive lattice
// [floor(min), ceil(max)] clipped to the image. Invalid when the box misses
// the image entirely.
VoxelBox2D rasterize_box(double u_min, double v_min, double u_max, double v_max,
                         int image_width, int image_height);

struct ImageSize {
    int width = 0;
    int height = 0;
    bool operator==(const ImageSize&) const = default;
};

// Per (camera, voxel) pixel boxes in full-resolution image pixels. `stride`
// declares the downsampling of the feature maps this table pools from.
class ProjectionTable {
public:
    ProjectionTable(VoxelGridSpec grid, std::vector<ImageSize> images, int stride,
                    std::vector<VoxelBox2D> entries);

    const VoxelGridSpec& grid() const { return grid_; }
    int stride() const { return stride_; }
    std::size_t camera_count() const { return images_.size(); }
    const ImageSize& image_size(std::size_t camera) const { return images_[camera]; }
    const VoxelBox2D& box(std::size_t camera, std::size_t voxel) const {
        return entries_[camera * grid_.voxel_count() + voxel];
    }
    std::span<const VoxelBox2D> entries() const { return entries_; }
    // Box in feature-map pixels: floor(min / s), ceil(max / s), clipped.
    VoxelBox2D feature_box(std::size_t camera, std::size_t voxel) const;

    bool operator==(const ProjectionTable&) const = default;

private:
    VoxelGridSpec grid_;
    std::vector<ImageSize> images_;
    int stride_;
    std::vector<VoxelBox2D> entries_;
};

ProjectionTable build_projection_table(const VoxelGridSpec& grid,
                                       std::span<const Camera> cameras, int stride = 1);

// Binary cache: magic "VFAPTBL", version, grid, stride, image sizes, then
// per entry 4 x uint16 (u_min, v_min, u_max, v_max) and one validity byte.
void save_projection_table(const std::filesystem::path& path, const ProjectionTable& table);
ProjectionTable load_projection_table(const std::filesystem::path& path);

// Per-view feature map [C][H][W].
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w);

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    Tensor to_tensor() const;
    static FeatureMap from_tensor(const Tensor& t);
};

// One camera's voxel features [C][nz][ny][nx].
struct VoxelFeature {
    int channels = 0;
    int nz = 0;
    int ny = 0;
    int nx = 0;
    std::vector<float> data;

    VoxelFeature() = default;
    VoxelFeature(int c, int z, int y, int x);

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nz) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nx);
    }
    float& at(int c, std::size_t voxel) { return data[c * voxel_count() + voxel]; }
    float at(int c, std::size_t voxel) const { return data[c * voxel_count() + voxel]; }
};

// BEV features [C_g][H_g = ny][W_g = nx].
struct GroundFeature {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    GroundFeature() = default;
    GroundFeature(int c, int h, int w);

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    Tensor to_tensor() const;
    static GroundFeature from_tensor(const Tensor& t);
};

// Average-pools each voxel's feature box, per camera. Invalid boxes give
// zero vectors. Throws ShapeMismatch when a map is not image_size / stride.
std::vector<VoxelFeature> aggregate_features(const ProjectionTable& table,
                                             std::span<const FeatureMap> maps);

enum class CollapseMode { concat, mean, max };

// concat: channel index (camera * nz + layer) * C + c.
// mean / max: reduce over layers, channel index camera * C + c.
GroundFeature collapse_to_bev(std::span<const VoxelFeature> voxels, CollapseMode mode);

// Multi-height homography baseline: for every BEV cell center and plane
// height, bilinearly samples each view at the homography-projected pixel.
// Channel index (camera * heights + k) * C + c.
GroundFeature homography_aggregate(std::span<const Camera> cameras,
                                   std::span<const FeatureMap> maps,
                                   std::span<const double> heights, const VoxelGridSpec& bev,
                                   int stride = 1);

// Bilinear sample at feature coordinates; zero outside the map.
double sample_bilinear(const FeatureMap& map, int channel, double x, double y);

}  // namespace vfa
