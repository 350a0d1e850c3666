#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "platescan/detector.hpp"
#include "platescan/geometry.hpp"

namespace platescan {

// Matching degree between two rectangles: intersection area over union area.
double match_pair(const BoundingBox& r, const BoundingBox& r0);

// Best match of r against a set; 0 for an empty set.
double best_match(const BoundingBox& r, std::span<const BoundingBox> rects);

struct ImageTally {
    int gt_total = 0;
    int gt_matched = 0;
    int det_total = 0;
    int det_matched = 0;
    int false_positives = 0;
};

struct EvalResult {
    double recall = 0.0;     // NaN when there is no ground truth anywhere
    double precision = 1.0;  // defined as 1 when there are no detections
    double fppi = 0.0;
    int images = 0;
    int gt_total = 0;
    int det_total = 0;
    std::vector<ImageTally> per_image;
};

// Binary matching at threshold t: a ground-truth box counts as recalled when
// some detection overlaps it with matching degree >= t; a detection counts as
// correct when it overlaps some ground-truth box likewise. one_to_one makes
// matches exclusive (greedy by descending overlap).
EvalResult evaluate(const std::vector<std::vector<BoundingBox>>& detections,
                    const std::vector<std::vector<BoundingBox>>& ground_truth,
                    double match_threshold, bool one_to_one = false);

struct Curve {
    std::vector<std::pair<double, double>> points;  // strictly increasing x
};

// Sweeps the score threshold over all observed detection scores and emits
// (FPPI, detection rate) pairs.
Curve det_curve(const std::vector<std::vector<Detection>>& detections,
                const std::vector<std::vector<BoundingBox>>& ground_truth,
                double match_threshold);

// Runs evaluate at every threshold of the grid; returns (precision, recall)
// curves over the matching degree.
std::pair<Curve, Curve> matching_degree_sweep(
    const std::vector<std::vector<BoundingBox>>& detections,
    const std::vector<std::vector<BoundingBox>>& ground_truth, std::span<const double> t_grid);

void write_curve_csv(std::ostream& out, const Curve& curve, const char* x_name,
                     const char* y_name);

}  // namespace platescan
