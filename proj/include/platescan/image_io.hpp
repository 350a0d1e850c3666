#pragma once

#include <string>
#include <utility>

#include "platescan/image.hpp"

namespace platescan {

// PNG/JPEG decode. Color files go through to_grayscale; grayscale files load
// as-is.
GrayImage load_gray(const std::string& path);
RgbImage load_rgb(const std::string& path);

// Values are clamped to [0, 255] and rounded to 8 bits.
void save_png(const GrayImage& img, const std::string& path);

// (width, height) of an image file.
std::pair<int, int> image_dimensions(const std::string& path);

}  // namespace platescan
