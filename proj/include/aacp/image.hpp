#pragma once

// 8-bit RGB images and binary PPM/PGM round-trip IO.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace aacp {

struct Image {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // H*W*3, row-major, interleaved RGB

    Image() = default;
    Image(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h * w * 3), 0) {}

    std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::uint8_t at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    bool operator==(const Image&) const = default;
};

struct Heatmap {
    int height = 0;
    int width = 0;
    std::vector<double> values;  // row-major, [0,1]

    Heatmap() = default;
    Heatmap(int h, int w) : height(h), width(w), values(static_cast<std::size_t>(h * w), 0.0) {}

    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Binary (P6) PPM, 8-bit channels. Writing then reading is bit-exact.
void save_ppm(const Image& img, const std::filesystem::path& path);
Image load_ppm(const std::filesystem::path& path);

// Binary (P5) PGM; heatmap values are quantized to 8 bits on save.
void save_pgm(const Heatmap& map, const std::filesystem::path& path);

// Blends a nearest-upsampled heatmap over an image for visual inspection:
// hot pixels shift toward red, cold ones keep the underlying color.
Image overlay_heatmap(const Image& img, const Heatmap& map, double alpha = 0.5);

}  // namespace aacp
