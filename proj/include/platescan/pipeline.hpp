#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "platescan/dataset.hpp"
#include "platescan/detector.hpp"
#include "platescan/eval.hpp"
#include "platescan/svm.hpp"

namespace platescan {

struct PipelineConfig {
    HogConfig hog;
    ScanConfig scan;
    SvmTrainConfig svm;
    std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    int cv_folds = 5;
    int negatives_per_image = 20;
    int bootstrap_budget = 1000;
    double fppi_target = 1.0;
    double match_threshold = 0.5;
    std::uint64_t seed = 7;

    void validate() const;
};

struct TrainSummary {
    int positives = 0;
    int negatives = 0;
    int hard_negatives = 0;
    double chosen_c = 0.0;
    double threshold = 0.0;
    double pre_bootstrap_threshold = 0.0;
    double calibration_fppi = 0.0;
    TrainTrace trace;      // final model
    TrainTrace pre_trace;  // pre-bootstrap model
    std::vector<std::string> warnings;
};

struct TrainedDetector {
    LinearModel model;          // bootstrapped, threshold calibrated
    LinearModel pre_bootstrap;  // before hard negatives, threshold calibrated
    TrainSummary summary;
};

ImageLoader file_image_loader();

// Full training protocol: positive extraction, negative sampling, optional
// C cross-validation, initial training, one bootstrapping round, retraining,
// FPPI threshold calibration.
TrainedDetector train_detector(const std::vector<AnnotatedImage>& entries,
                               const PipelineConfig& cfg, const ImageLoader& load);

// scan + NMS + padding strip per entry; rows align with entries
std::vector<std::vector<Detection>> detect_images(const std::vector<AnnotatedImage>& entries,
                                                  const LinearModel& model,
                                                  const PipelineConfig& cfg,
                                                  const ImageLoader& load);

std::vector<std::vector<BoundingBox>> ground_truth_of(const std::vector<AnnotatedImage>& entries);
std::vector<std::vector<BoundingBox>> boxes_of(const std::vector<std::vector<Detection>>& dets);

struct ProtocolResult {
    std::string label;
    double recall = 0.0;
    double precision = 0.0;
    double fppi = 0.0;
    int folds = 0;
    bool ok = false;
    std::string error;
};

// k-fold protocol for one parameter configuration: per fold, train on the
// remainder, detect + evaluate on the held-out fold at the configured match
// threshold; metrics are averaged over folds.
ProtocolResult run_protocol(const std::string& label, const std::vector<AnnotatedImage>& entries,
                            const PipelineConfig& cfg, int folds, const ImageLoader& load);

}  // namespace platescan
