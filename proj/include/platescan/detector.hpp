#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "platescan/geometry.hpp"
#include "platescan/hog.hpp"
#include "platescan/image.hpp"
#include "platescan/pyramid.hpp"
#include "platescan/svm.hpp"

namespace platescan {

struct Detection {
    BoundingBox box;  // original-image frame
    double score = 0.0;
    int level_index = 0;
};

struct PyramidConfig {
    double step = 1.1;
    int num_levels = 11;
};

struct ScanConfig {
    int window_w = 108;
    int window_h = 36;
    int stride = 9;          // pixels between adjacent windows
    int pad_x = 9;           // background pixels per horizontal side inside the window
    int pad_y = 3;           // background pixels per vertical side
    PyramidConfig pyramid;
    double nms_overlap = 0.3;
    int threads = 0;  // 0 = hardware concurrency

    void validate(const HogConfig& hog) const;  // throws DataError
};

struct ScanResult {
    // sorted by descending score, ties by (level, y, x)
    std::vector<Detection> detections;
    std::vector<long long> windows_per_level;
    int dropped_levels = 0;
    std::vector<std::string> warnings;

    long long windows_total() const;
};

// Scores every stride-aligned window at every pyramid level; positions whose
// score clears model.threshold become detections in original coordinates.
// Any level/row parallelization yields the identical sorted list.
ScanResult scan(const GrayImage& img, const LinearModel& model, const HogConfig& hog,
                const ScanConfig& cfg);

// Greedy: keep the highest-scoring remaining detection, discard others whose
// pairwise match against it exceeds `overlap`. Input must be sorted by
// descending score; output preserves acceptance order.
std::vector<Detection> non_max_suppression(std::vector<Detection> dets, double overlap);

// Multiply coordinates and extents by the level's scale, rounding to the
// nearest pixel.
BoundingBox map_to_original(const BoundingBox& box_at_level, const PyramidLevel& level);
BoundingBox map_to_original(const BoundingBox& box_at_level, double scale);

// Shrinks a detection by the scale-adjusted window padding so the reported
// box matches the plate core.
BoundingBox strip_padding(const BoundingBox& det_box, const ScanConfig& cfg);

// Sequential scan that hands the caller every window clearing min_score along
// with its descriptor. Used for hard-negative mining and descriptor dumps.
using WindowVisitor = std::function<void(int level_index, double scale,
                                         const BoundingBox& box_at_level, double window_score,
                                         std::span<const double> descriptor)>;
void scan_windows(const GrayImage& img, const LinearModel& model, const HogConfig& hog,
                  const ScanConfig& cfg, double min_score, const WindowVisitor& visit);

// ---- detection CSV: image_id,x,y,w,h,score,level ---------------------------

struct NamedDetections {
    std::string image_id;
    std::vector<Detection> detections;
};

void write_detections_csv(std::ostream& out, const std::vector<NamedDetections>& rows);
// Groups rows by image id in order of first appearance. The level column is
// optional so third-party detection files can be ingested.
std::vector<NamedDetections> read_detections_csv(std::istream& in);

}  // namespace platescan
