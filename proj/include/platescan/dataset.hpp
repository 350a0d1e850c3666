#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "platescan/detector.hpp"
#include "platescan/geometry.hpp"
#include "platescan/image.hpp"
#include "platescan/svm.hpp"

namespace platescan {

struct AnnotatedImage {
    std::string image_path;
    std::vector<BoundingBox> plates;  // may be empty (pure-negative image)
    int width = 0;                    // filled by manifest validation / generators
    int height = 0;
};

struct DatasetManifest {
    enum class Split { none, train, test };
    std::vector<AnnotatedImage> entries;
    Split split_tag = Split::none;
};

struct PlateStats {
    double width_mean = 0, width_std = 0;
    double height_mean = 0, height_std = 0;
    double aspect_mean = 0, aspect_std = 0;  // per-plate w/h
    int count = 0;
};

// Manifest format: one record per line, tab-separated; image path first, then
// zero or more plates as "x,y,w,h". validate_images opens each image and
// rejects out-of-bounds boxes.
DatasetManifest load_manifest(const std::string& path, bool validate_images = true);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// Alternate ground-truth layout: one sidecar text file per image (same stem,
// .txt) holding "x y w h" lines.
DatasetManifest manifest_from_sidecars(const std::string& image_dir, bool validate_images = true);

// Sample mean and standard deviation (n-1 denominator) of plate widths,
// heights and aspects.
PlateStats plate_statistics(const DatasetManifest& manifest);

// Uniformly random window-sized boxes with zero intersection against every
// plate. Rejection sampling with a bounded number of attempts per box, then a
// deterministic fallback over all legal placements; a partial list plus a
// warning when the image is too covered.
std::vector<BoundingBox> sample_negatives(const AnnotatedImage& entry, int window_w, int window_h,
                                          int count, std::uint64_t seed,
                                          std::vector<std::string>* warnings = nullptr);

// Seeded shuffle then partition; round(fraction * n) entries go to train.
std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           double train_fraction,
                                                           std::uint64_t seed);

// Crops the plate's padded context and rescales it to exactly the scan
// window: the plate core maps to (window - 2*pad), centered. Returns nothing
// when the context box cannot be made to fit inside the image.
std::optional<GrayImage> extract_positive_window(const GrayImage& img, const BoundingBox& plate,
                                                 const ScanConfig& cfg);

using ImageLoader = std::function<GrayImage(const AnnotatedImage&)>;

// One bootstrapping round: scans every training image with the current model,
// collects false-positive windows (score >= model threshold, stripped box
// matching no ground truth at match_threshold) and keeps the top `budget` by
// score across the whole set.
FeatureMatrix bootstrap_round(const LinearModel& model, const std::vector<AnnotatedImage>& entries,
                              const ImageLoader& load, const HogConfig& hog, const ScanConfig& cfg,
                              int budget, double match_threshold);

}  // namespace platescan
