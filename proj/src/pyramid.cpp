#include "platescan/pyramid.hpp"

#include <cmath>
#include <string>

#include "platescan/errors.hpp"

namespace platescan {

int pyramid_anchor_level(int num_levels) {
    return static_cast<int>(std::llround(0.3 * (num_levels - 1)));
}

Pyramid build_pyramid(const GrayImage& img, double step, int num_levels, int window_w,
                      int window_h) {
    if (step <= 1.0) throw DataError("build_pyramid: step must exceed 1.0");
    if (num_levels < 1) throw DataError("build_pyramid: need at least one level");
    if (window_w < 3 || window_h < 3) throw DataError("build_pyramid: window too small");

    Pyramid pyr;
    pyr.step = step;
    pyr.requested_levels = num_levels;

    const int anchor = pyramid_anchor_level(num_levels);
    for (int k = 0; k < num_levels; ++k) {
        const double scale = std::pow(step, k - anchor);
        const int w = static_cast<int>(std::floor(img.width / scale));
        const int h = static_cast<int>(std::floor(img.height / scale));
        if (w < window_w || h < window_h) {
            ++pyr.dropped_levels;
            continue;
        }
        PyramidLevel level;
        level.scale = scale;
        level.level_index = static_cast<int>(pyr.levels.size());
        level.image = (k == anchor) ? img : resize(img, w, h);
        pyr.levels.push_back(std::move(level));
    }

    if (pyr.levels.empty())
        throw DataError("build_pyramid: no level fits the " + std::to_string(window_w) + "x" +
                        std::to_string(window_h) + " window; image is " +
                        std::to_string(img.width) + "x" + std::to_string(img.height) +
                        " and the largest level would be " +
                        std::to_string(static_cast<int>(std::floor(img.width * std::pow(step, anchor)))) +
                        "x" +
                        std::to_string(static_cast<int>(std::floor(img.height * std::pow(step, anchor)))));
    return pyr;
}

}  // namespace platescan
