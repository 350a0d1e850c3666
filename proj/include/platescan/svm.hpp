#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "platescan/geometry.hpp"
#include "platescan/hog.hpp"

namespace platescan {

struct Detection;  // detector.hpp

// Linear window scorer: score(x) = dot(weights, x) + bias; detections require
// score >= threshold.
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    double threshold = 0.0;

    // feature setup the model was trained with, echoed in the model file
    HogConfig hog;
    int window_w = 108;
    int window_h = 36;
};

struct SvmTrainConfig {
    double c = 1.0;          // regularization parameter C > 0
    int max_epochs = 1000;
    double tolerance = 1e-3;  // stop when the projected-gradient range falls below this
    std::uint64_t seed = 1;   // example shuffling
};

struct TrainTrace {
    std::vector<double> dual_objective;  // one entry per epoch, non-decreasing
    int epochs = 0;
    bool converged = false;
};

// Row-major float feature storage; the solver accumulates in double.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t dim) : dim_(dim) {}

    void push_back(std::span<const double> row);
    void push_back(std::span<const float> row);
    void append(const FeatureMatrix& other);

    std::span<const float> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    std::size_t rows() const { return dim_ ? data_.size() / dim_ : 0; }
    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

// L1-hinge linear SVM solved by dual coordinate descent with seeded shuffling.
// The bias is a constant-1 feature folded into the weight vector during
// optimization and split out afterwards. Threshold starts at 0.
LinearModel train_svm(const FeatureMatrix& positives, const FeatureMatrix& negatives,
                      const SvmTrainConfig& cfg, TrainTrace* trace = nullptr);

double score(const LinearModel& model, std::span<const double> descriptor);
double score(const LinearModel& model, std::span<const float> descriptor);

// Mean fold accuracy over a stratified k-fold split; ties break toward
// smaller C.
double cross_validate(int folds, const FeatureMatrix& positives, const FeatureMatrix& negatives,
                      std::span<const double> c_grid, const SvmTrainConfig& cfg);

struct CalibrationResult {
    double threshold = 0.0;
    double achieved_fppi = 0.0;
    bool saturated = false;  // even the top score exceeds the target -> +inf threshold
    std::string note;
};

// Smallest threshold (evaluated at observed detection scores only) whose mean
// false-positive count per image stays within target_fppi. A false positive
// is a detection whose best match against that image's ground truth falls
// below match_threshold.
CalibrationResult calibrate_threshold(const std::vector<std::vector<Detection>>& detections,
                                      const std::vector<std::vector<BoundingBox>>& ground_truth,
                                      double target_fppi, double match_threshold);

// Versioned text model file; load(save(m)) is bit-exact.
void save_model(const LinearModel& model, const std::string& path);
LinearModel load_model(const std::string& path);

}  // namespace platescan
