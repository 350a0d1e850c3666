#pragma once

#include <cstdint>
#include <vector>

#include "platescan/geometry.hpp"
#include "platescan/image.hpp"

namespace platescan {

// Desk-scale scene generator: filtered-noise background, 1..max_plates
// plate-like targets (bright rectangle, dark frame, seven character-stroke
// glyphs) and optional distractors that imitate the classic failure modes
// (headlight-like blobs, text-like stripe patches).
struct SceneSpec {
    int width = 320;
    int height = 192;
    int min_plates = 1;
    int max_plates = 1;
    double min_plate_width = 65.0;
    double max_plate_width = 160.0;
    double aspect_mean = 3.1;
    double aspect_std = 0.19;
    int stripe_distractors = 2;
    int blob_distractors = 2;
    int margin = 8;  // minimum gap between a plate and the image border

    void validate() const;  // throws DataError
};

struct SyntheticScene {
    GrayImage image;  // integral intensities in [0, 255]
    std::vector<BoundingBox> plates;  // exact rendered placements
};

SyntheticScene generate_scene(const SceneSpec& spec, std::uint64_t seed);

}  // namespace platescan
