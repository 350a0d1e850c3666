#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "platescan/geometry.hpp"

namespace platescan {

// Single-channel intensity raster, values in [0, 255], row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const GrayImage&) const = default;
};

// 8-bit interleaved RGB raster.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // r,g,b per pixel
};

// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const RgbImage& rgb);

// Bilinear resampling with half-pixel centers and edge clamping.
// Same-size calls return a bit-identical copy.
GrayImage resize(const GrayImage& img, int new_width, int new_height);

// Bounds-checked sub-image copy.
GrayImage crop(const GrayImage& img, const BoundingBox& rect);

}  // namespace platescan
