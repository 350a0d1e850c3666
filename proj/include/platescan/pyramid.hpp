#pragma once

#include <vector>

#include "platescan/image.hpp"

namespace platescan {

struct PyramidLevel {
    GrayImage image;
    double scale = 1.0;  // original size / this level's size; > 1 means downscaled
    int level_index = 0;
};

struct Pyramid {
    std::vector<PyramidLevel> levels;  // ordered by strictly increasing scale
    double step = 1.0;
    int requested_levels = 0;
    int dropped_levels = 0;  // levels too small to fit the detection window
};

// Ladder index whose scale is exactly 1.0. Roughly 30% of the ladder sits
// above the original resolution (upscaled), matching an 11-level ladder with
// 3 upscale and 7 downscale rungs.
int pyramid_anchor_level(int num_levels);

// Level k gets dimensions floor(original / step^(k - anchor)). Levels smaller
// than the window are dropped and counted; if nothing fits, throws.
Pyramid build_pyramid(const GrayImage& img, double step, int num_levels, int window_w,
                      int window_h);

}  // namespace platescan
