#include "platescan/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "platescan/errors.hpp"
#include "platescan/image_io.hpp"
#include "platescan/rng.hpp"

namespace platescan {

void PipelineConfig::validate() const {
    scan.validate(hog);
    if (negatives_per_image < 0) throw DataError("PipelineConfig: negatives_per_image < 0");
    if (bootstrap_budget < 0) throw DataError("PipelineConfig: bootstrap_budget < 0");
    if (fppi_target < 0.0) throw DataError("PipelineConfig: fppi_target < 0");
    if (match_threshold < 0.0 || match_threshold > 1.0)
        throw DataError("PipelineConfig: match_threshold must be in [0, 1]");
    if (c_grid.empty()) throw DataError("PipelineConfig: empty C grid");
    for (double c : c_grid)
        if (!(c > 0.0)) throw DataError("PipelineConfig: C values must be positive");
    if (cv_folds < 2) throw DataError("PipelineConfig: cv_folds must be >= 2");
}

ImageLoader file_image_loader() {
    return [](const AnnotatedImage& entry) { return load_gray(entry.image_path); };
}

std::vector<std::vector<BoundingBox>> ground_truth_of(const std::vector<AnnotatedImage>& entries) {
    std::vector<std::vector<BoundingBox>> gt;
    gt.reserve(entries.size());
    for (const AnnotatedImage& e : entries) gt.push_back(e.plates);
    return gt;
}

std::vector<std::vector<BoundingBox>> boxes_of(const std::vector<std::vector<Detection>>& dets) {
    std::vector<std::vector<BoundingBox>> out;
    out.reserve(dets.size());
    for (const std::vector<Detection>& row : dets) {
        std::vector<BoundingBox> boxes;
        boxes.reserve(row.size());
        for (const Detection& d : row) boxes.push_back(d.box);
        out.push_back(std::move(boxes));
    }
    return out;
}

namespace {

// post-NMS detections with the padding stripped, for one image
std::vector<Detection> detect_one(const GrayImage& img, const LinearModel& model,
                                  const PipelineConfig& cfg,
                                  std::vector<std::string>* warnings) {
    ScanResult sr = scan(img, model, cfg.hog, cfg.scan);
    if (warnings)
        warnings->insert(warnings->end(), sr.warnings.begin(), sr.warnings.end());
    std::vector<Detection> kept = non_max_suppression(std::move(sr.detections),
                                                      cfg.scan.nms_overlap);
    std::vector<Detection> out;
    out.reserve(kept.size());
    for (Detection& d : kept) {
        try {
            d.box = strip_padding(d.box, cfg.scan);
            out.push_back(d);
        } catch (const DataError& e) {
            if (warnings) warnings->push_back(e.what());
        }
    }
    return out;
}

// scan the training split with an uncalibrated copy of the model and pick the
// smallest threshold honoring the FPPI target
double calibrate_on(const std::vector<AnnotatedImage>& entries, LinearModel model,
                    const PipelineConfig& cfg, const ImageLoader& load, TrainSummary& summary) {
    model.threshold = 0.0;  // observe everything down to the decision boundary
    std::vector<std::vector<Detection>> dets;
    dets.reserve(entries.size());
    for (const AnnotatedImage& e : entries)
        dets.push_back(detect_one(load(e), model, cfg, &summary.warnings));

    const CalibrationResult cal =
        calibrate_threshold(dets, ground_truth_of(entries), cfg.fppi_target, cfg.match_threshold);
    summary.calibration_fppi = cal.achieved_fppi;
    if (!cal.note.empty()) summary.warnings.push_back("calibration: " + cal.note);
    if (std::isinf(cal.threshold) && cal.threshold < 0.0) {
        // no detections scored above the decision boundary; keep the boundary
        summary.warnings.push_back("calibration: no observed scores, keeping threshold 0");
        return 0.0;
    }
    return cal.threshold;
}

}  // namespace

TrainedDetector train_detector(const std::vector<AnnotatedImage>& entries,
                               const PipelineConfig& cfg, const ImageLoader& load) {
    cfg.validate();
    if (entries.empty()) throw DataError("train_detector: empty manifest");

    const int dim = descriptor_length(cfg.scan.window_w, cfg.scan.window_h, cfg.hog);
    TrainedDetector out;
    TrainSummary& summary = out.summary;

    // positives: every plate, rescaled so its padded context fills the window
    FeatureMatrix positives(static_cast<std::size_t>(dim));
    FeatureMatrix negatives(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const AnnotatedImage& entry = entries[i];
        const GrayImage img = load(entry);
        for (const BoundingBox& plate : entry.plates) {
            const std::optional<GrayImage> window = extract_positive_window(img, plate, cfg.scan);
            if (!window) {
                summary.warnings.push_back("positive skipped (context crop does not fit): " +
                                           entry.image_path);
                continue;
            }
            positives.push_back(compute_window_descriptor(*window, cfg.hog).values);
        }
        AnnotatedImage sized = entry;
        sized.width = img.width;
        sized.height = img.height;
        for (const BoundingBox& neg :
             sample_negatives(sized, cfg.scan.window_w, cfg.scan.window_h,
                              cfg.negatives_per_image, mix_seed(cfg.seed, i),
                              &summary.warnings))
            negatives.push_back(compute_window_descriptor(crop(img, neg), cfg.hog).values);
    }
    if (positives.rows() == 0) throw DataError("train_detector: no positive examples");
    if (negatives.rows() == 0) throw DataError("train_detector: no negative examples");
    summary.positives = static_cast<int>(positives.rows());
    summary.negatives = static_cast<int>(negatives.rows());

    // C selection
    SvmTrainConfig svm_cfg = cfg.svm;
    svm_cfg.seed = mix_seed(cfg.seed, 0x73766d);
    if (cfg.c_grid.size() == 1) {
        svm_cfg.c = cfg.c_grid.front();
    } else if (positives.rows() >= static_cast<std::size_t>(cfg.cv_folds) &&
               negatives.rows() >= static_cast<std::size_t>(cfg.cv_folds)) {
        svm_cfg.c = cross_validate(cfg.cv_folds, positives, negatives, cfg.c_grid, svm_cfg);
    } else {
        svm_cfg.c = cfg.c_grid[cfg.c_grid.size() / 2];
        summary.warnings.push_back("too few examples for cross-validation, using C = " +
                                   std::to_string(svm_cfg.c));
    }
    summary.chosen_c = svm_cfg.c;

    auto finish_model = [&](LinearModel& m) {
        m.hog = cfg.hog;
        m.window_w = cfg.scan.window_w;
        m.window_h = cfg.scan.window_h;
    };

    // initial model
    LinearModel first = train_svm(positives, negatives, svm_cfg, &summary.pre_trace);
    finish_model(first);

    // one bootstrapping round: highest-scoring false positives re-enter training
    FeatureMatrix hard = bootstrap_round(first, entries, load, cfg.hog, cfg.scan,
                                         cfg.bootstrap_budget, cfg.match_threshold);
    summary.hard_negatives = static_cast<int>(hard.rows());

    LinearModel final_model;
    if (hard.rows() > 0) {
        negatives.append(hard);
        final_model = train_svm(positives, negatives, svm_cfg, &summary.trace);
    } else {
        final_model = first;
        summary.trace = summary.pre_trace;
    }
    finish_model(final_model);

    // calibrate both models so their FPPI can be compared on equal footing
    out.pre_bootstrap = first;
    out.pre_bootstrap.threshold = calibrate_on(entries, first, cfg, load, summary);
    summary.pre_bootstrap_threshold = out.pre_bootstrap.threshold;

    out.model = final_model;
    out.model.threshold = calibrate_on(entries, final_model, cfg, load, summary);
    summary.threshold = out.model.threshold;
    return out;
}

std::vector<std::vector<Detection>> detect_images(const std::vector<AnnotatedImage>& entries,
                                                  const LinearModel& model,
                                                  const PipelineConfig& cfg,
                                                  const ImageLoader& load) {
    cfg.validate();
    std::vector<std::vector<Detection>> out;
    out.reserve(entries.size());
    for (const AnnotatedImage& e : entries) out.push_back(detect_one(load(e), model, cfg, nullptr));
    return out;
}

ProtocolResult run_protocol(const std::string& label, const std::vector<AnnotatedImage>& entries,
                            const PipelineConfig& cfg, int folds, const ImageLoader& load) {
    ProtocolResult row;
    row.label = label;
    row.folds = folds;
    try {
        cfg.validate();
        if (folds < 2) throw DataError("run_protocol: need at least 2 folds");
        if (entries.size() < static_cast<std::size_t>(folds))
            throw DataError("run_protocol: fewer images than folds");

        // fold assignment depends only on the seed, never on the grid point
        std::vector<std::size_t> idx(entries.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(mix_seed(cfg.seed, 0x666f6c64));
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform(i)]);

        double recall_sum = 0.0, precision_sum = 0.0, fppi_sum = 0.0;
        for (int f = 0; f < folds; ++f) {
            std::vector<AnnotatedImage> train, held_out;
            for (std::size_t r = 0; r < idx.size(); ++r)
                (static_cast<int>(r % folds) == f ? held_out : train).push_back(entries[idx[r]]);

            const TrainedDetector trained = train_detector(train, cfg, load);
            const std::vector<std::vector<Detection>> dets =
                detect_images(held_out, trained.model, cfg, load);
            const EvalResult ev =
                evaluate(boxes_of(dets), ground_truth_of(held_out), cfg.match_threshold);
            recall_sum += ev.recall;
            precision_sum += ev.precision;
            fppi_sum += ev.fppi;
        }
        row.recall = recall_sum / folds;
        row.precision = precision_sum / folds;
        row.fppi = fppi_sum / folds;
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

}  // namespace platescan
