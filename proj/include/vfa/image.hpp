#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vfa/voxel.hpp"

namespace vfa {

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});
    void set(int x, int y, std::array<std::uint8_t, 3> c);
};

// Fixed viridis-like palette, t clamped to [0, 1].
std::array<std::uint8_t, 3> palette(double t);

// One channel of a BEV map, scaled by its maximum (zero maps stay dark).
// Row 0 of the image is the largest y, so north is up. `scale` replicates
// each cell into a scale x scale block.
RgbImage heatmap(const GroundFeature& map, int channel = 0, int scale = 2);

// Bars for each value on a shared zero baseline, tallest bar at full height.
RgbImage bar_chart(std::span<const double> values, int bar_width = 40, int height = 200);

void write_ppm(std::ostream& out, const RgbImage& img);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

}  // namespace vfa
