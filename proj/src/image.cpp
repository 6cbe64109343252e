#include "vfa/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vfa/error.hpp"

namespace vfa {

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 9> kStops{{
    {68, 1, 84},
    {71, 44, 122},
    {59, 81, 139},
    {44, 113, 142},
    {33, 144, 141},
    {39, 173, 129},
    {92, 200, 99},
    {170, 220, 50},
    {253, 231, 37},
}};

}  // namespace

RgbImage::RgbImage(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw InvalidArgument("image: size must be positive");
    rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < rgb.size(); i += 3)
        std::copy(fill.begin(), fill.end(), rgb.begin() + static_cast<std::ptrdiff_t>(i));
}

void RgbImage::set(int x, int y, std::array<std::uint8_t, 3> c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[i] = c[0];
    rgb[i + 1] = c[1];
    rgb[i + 2] = c[2];
}

std::array<std::uint8_t, 3> palette(double t) {
    if (!std::isfinite(t)) t = 0.0;
    t = std::clamp(t, 0.0, 1.0) * (kStops.size() - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(t), kStops.size() - 2);
    const double f = t - static_cast<double>(k);
    std::array<std::uint8_t, 3> out{};
    for (int c = 0; c < 3; ++c)
        out[c] = static_cast<std::uint8_t>(std::lround((1.0 - f) * kStops[k][c] + f * kStops[k + 1][c]));
    return out;
}

RgbImage heatmap(const GroundFeature& map, int channel, int scale) {
    if (channel < 0 || channel >= map.channels) throw InvalidArgument("heatmap: channel out of range");
    if (scale < 1) throw InvalidArgument("heatmap: scale must be >= 1");
    float peak = 0.0f;
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) peak = std::max(peak, map.at(channel, y, x));
    RgbImage img(map.width * scale, map.height * scale);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) {
            const double t = peak > 0.0f ? map.at(channel, y, x) / peak : 0.0;
            const auto c = palette(t);
            const int row = map.height - 1 - y;
            for (int dy = 0; dy < scale; ++dy)
                for (int dx = 0; dx < scale; ++dx) img.set(x * scale + dx, row * scale + dy, c);
        }
    return img;
}

RgbImage bar_chart(std::span<const double> values, int bar_width, int height) {
    if (values.empty()) throw InvalidArgument("bar_chart: no values");
    if (bar_width < 2 || height < 2) throw InvalidArgument("bar_chart: bad size");
    const int gap = std::max(1, bar_width / 4);
    const int width = static_cast<int>(values.size()) * (bar_width + gap) + gap;
    RgbImage img(width, height, {255, 255, 255});
    double top = 0.0;
    for (double v : values) top = std::max(top, std::abs(v));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double frac = top > 0.0 ? std::max(0.0, values[i]) / top : 0.0;
        const int bar = static_cast<int>(std::lround(frac * (height - 1)));
        const auto c = palette(values.size() > 1 ? static_cast<double>(i) / (values.size() - 1) : 0.5);
        const int x0 = gap + static_cast<int>(i) * (bar_width + gap);
        for (int y = height - bar; y < height; ++y)
            for (int x = x0; x < x0 + bar_width; ++x) img.set(x, y, c);
    }
    for (int x = 0; x < width; ++x) img.set(x, height - 1, {0, 0, 0});
    return img;
}

void write_ppm(std::ostream& out, const RgbImage& img) {
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    write_ppm(out, img);
}

}  // namespace vfa
