#include "platescan/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "platescan/detector.hpp"
#include "platescan/errors.hpp"
#include "platescan/eval.hpp"
#include "platescan/rng.hpp"

namespace platescan {

void FeatureMatrix::push_back(std::span<const double> row) {
    if (dim_ == 0) dim_ = row.size();
    if (row.size() != dim_)
        throw DataError("FeatureMatrix: row of length " + std::to_string(row.size()) +
                        " into matrix of dim " + std::to_string(dim_));
    for (double v : row) data_.push_back(static_cast<float>(v));
}

void FeatureMatrix::push_back(std::span<const float> row) {
    if (dim_ == 0) dim_ = row.size();
    if (row.size() != dim_)
        throw DataError("FeatureMatrix: row of length " + std::to_string(row.size()) +
                        " into matrix of dim " + std::to_string(dim_));
    data_.insert(data_.end(), row.begin(), row.end());
}

void FeatureMatrix::append(const FeatureMatrix& other) {
    if (other.rows() == 0) return;
    if (dim_ == 0) dim_ = other.dim();
    if (other.dim() != dim_) throw DataError("FeatureMatrix: appending mismatched dimensions");
    for (std::size_t i = 0; i < other.rows(); ++i) push_back(other.row(i));
}

namespace {

double dot_aug(std::span<const double> w, std::span<const float> x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * x[k];
    return s + w[x.size()];  // constant-1 bias feature
}

}  // namespace

LinearModel train_svm(const FeatureMatrix& positives, const FeatureMatrix& negatives,
                      const SvmTrainConfig& cfg, TrainTrace* trace) {
    if (positives.rows() == 0) throw DataError("train_svm: no positive examples");
    if (negatives.rows() == 0) throw DataError("train_svm: no negative examples");
    if (positives.dim() != negatives.dim())
        throw DataError("train_svm: descriptor dimensions differ (" +
                        std::to_string(positives.dim()) + " vs " +
                        std::to_string(negatives.dim()) + ")");
    if (!(cfg.c > 0.0)) throw DataError("train_svm: C must be positive");
    if (cfg.max_epochs < 1) throw DataError("train_svm: max_epochs must be >= 1");
    if (!(cfg.tolerance > 0.0)) throw DataError("train_svm: tolerance must be positive");

    const std::size_t dim = positives.dim();
    const std::size_t np = positives.rows();
    const std::size_t n = np + negatives.rows();

    auto example = [&](std::size_t i) -> std::span<const float> {
        return i < np ? positives.row(i) : negatives.row(i - np);
    };
    auto label = [&](std::size_t i) -> double { return i < np ? 1.0 : -1.0; };

    std::vector<double> q_ii(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (float v : example(i)) s += static_cast<double>(v) * v;
        q_ii[i] = s + 1.0;  // bias feature contributes 1
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(dim + 1, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Rng rng(cfg.seed);
    double prev_objective = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int epoch = 0;

    for (; epoch < cfg.max_epochs; ++epoch) {
        // Fisher-Yates with our own rng so runs are reproducible
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = rng.uniform(i);
            std::swap(order[i - 1], order[j]);
        }

        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();

        for (std::size_t idx : order) {
            const double y = label(idx);
            const std::span<const float> x = example(idx);
            const double g = y * dot_aug(w, x) - 1.0;

            double pg = g;
            if (alpha[idx] <= 0.0 && g > 0.0) pg = 0.0;
            if (alpha[idx] >= cfg.c && g < 0.0) pg = 0.0;
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);

            if (pg != 0.0) {
                const double a_new =
                    std::min(std::max(alpha[idx] - g / q_ii[idx], 0.0), cfg.c);
                const double delta = (a_new - alpha[idx]) * y;
                if (delta != 0.0) {
                    for (std::size_t k = 0; k < dim; ++k) w[k] += delta * x[k];
                    w[dim] += delta;
                    alpha[idx] = a_new;
                }
            }
        }

        double wtw = 0.0;
        for (double v : w) wtw += v * v;
        const double objective = std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * wtw;
        if (objective < prev_objective - 1e-9 * std::max(1.0, std::abs(objective)))
            throw InternalError("train_svm: dual objective decreased between epochs (" +
                                std::to_string(prev_objective) + " -> " +
                                std::to_string(objective) + ")");
        prev_objective = objective;
        if (trace) trace->dual_objective.push_back(objective);

        if (pg_max - pg_min < cfg.tolerance) {
            converged = true;
            ++epoch;
            break;
        }
    }

    if (trace) {
        trace->epochs = epoch;
        trace->converged = converged;
    }

    LinearModel model;
    model.weights.assign(w.begin(), w.begin() + dim);
    model.bias = w[dim];
    model.threshold = 0.0;
    return model;
}

double score(const LinearModel& model, std::span<const double> descriptor) {
    if (descriptor.size() != model.weights.size())
        throw DataError("score: descriptor length " + std::to_string(descriptor.size()) +
                        " does not match model dimension " + std::to_string(model.weights.size()));
    double s = 0.0;
    for (std::size_t k = 0; k < descriptor.size(); ++k) s += model.weights[k] * descriptor[k];
    return s + model.bias;
}

double score(const LinearModel& model, std::span<const float> descriptor) {
    if (descriptor.size() != model.weights.size())
        throw DataError("score: descriptor length " + std::to_string(descriptor.size()) +
                        " does not match model dimension " + std::to_string(model.weights.size()));
    double s = 0.0;
    for (std::size_t k = 0; k < descriptor.size(); ++k) s += model.weights[k] * descriptor[k];
    return s + model.bias;
}

double cross_validate(int folds, const FeatureMatrix& positives, const FeatureMatrix& negatives,
                      std::span<const double> c_grid, const SvmTrainConfig& cfg) {
    if (folds < 2) throw DataError("cross_validate: need at least 2 folds");
    if (c_grid.empty()) throw DataError("cross_validate: empty C grid");
    if (positives.rows() < static_cast<std::size_t>(folds) ||
        negatives.rows() < static_cast<std::size_t>(folds))
        throw DataError("cross_validate: a fold would get an empty class (" +
                        std::to_string(positives.rows()) + " positives, " +
                        std::to_string(negatives.rows()) + " negatives, " +
                        std::to_string(folds) + " folds)");

    // stratified fold assignment from a seeded shuffle per class
    auto fold_of = [&](std::size_t count, std::uint64_t salt) {
        std::vector<std::size_t> idx(count);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(mix_seed(cfg.seed, salt));
        for (std::size_t i = count; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform(i)]);
        std::vector<int> fold(count);
        for (std::size_t r = 0; r < count; ++r) fold[idx[r]] = static_cast<int>(r % folds);
        return fold;
    };
    const std::vector<int> pos_fold = fold_of(positives.rows(), 0x706f73);
    const std::vector<int> neg_fold = fold_of(negatives.rows(), 0x6e6567);

    std::vector<double> cs(c_grid.begin(), c_grid.end());
    std::sort(cs.begin(), cs.end());

    double best_c = cs.front();
    double best_acc = -1.0;
    for (double c : cs) {
        SvmTrainConfig fold_cfg = cfg;
        fold_cfg.c = c;
        double acc_sum = 0.0;
        for (int f = 0; f < folds; ++f) {
            FeatureMatrix train_pos(positives.dim()), train_neg(negatives.dim());
            for (std::size_t i = 0; i < positives.rows(); ++i)
                if (pos_fold[i] != f) train_pos.push_back(positives.row(i));
            for (std::size_t i = 0; i < negatives.rows(); ++i)
                if (neg_fold[i] != f) train_neg.push_back(negatives.row(i));

            const LinearModel m = train_svm(train_pos, train_neg, fold_cfg);
            long correct = 0, total = 0;
            for (std::size_t i = 0; i < positives.rows(); ++i)
                if (pos_fold[i] == f) {
                    ++total;
                    if (score(m, positives.row(i)) > 0.0) ++correct;
                }
            for (std::size_t i = 0; i < negatives.rows(); ++i)
                if (neg_fold[i] == f) {
                    ++total;
                    if (score(m, negatives.row(i)) <= 0.0) ++correct;
                }
            acc_sum += static_cast<double>(correct) / total;
        }
        const double acc = acc_sum / folds;
        if (acc > best_acc) {  // strict: ties keep the smaller C
            best_acc = acc;
            best_c = c;
        }
    }
    return best_c;
}

CalibrationResult calibrate_threshold(const std::vector<std::vector<Detection>>& detections,
                                      const std::vector<std::vector<BoundingBox>>& ground_truth,
                                      double target_fppi, double match_threshold) {
    if (detections.empty()) throw DataError("calibrate_threshold: no validation images");
    if (detections.size() != ground_truth.size())
        throw DataError("calibrate_threshold: detections and ground truth differ in image count");
    if (target_fppi < 0.0) throw DataError("calibrate_threshold: target_fppi must be >= 0");

    const std::size_t images = detections.size();
    std::vector<double> all_scores;
    std::vector<double> fp_scores;
    for (std::size_t i = 0; i < images; ++i) {
        for (const Detection& d : detections[i]) {
            all_scores.push_back(d.score);
            if (best_match(d.box, ground_truth[i]) < match_threshold) fp_scores.push_back(d.score);
        }
    }

    CalibrationResult res;
    if (all_scores.empty()) {
        res.threshold = -std::numeric_limits<double>::infinity();
        res.achieved_fppi = 0.0;
        res.note = "no detections observed; threshold unconstrained";
        return res;
    }

    std::sort(fp_scores.begin(), fp_scores.end(), std::greater<>());
    const double budget = target_fppi * static_cast<double>(images);
    auto fp_count_at = [&](double t) {
        // false positives kept at threshold t, i.e. fp scores >= t
        return static_cast<std::size_t>(
            std::upper_bound(fp_scores.begin(), fp_scores.end(), t, std::greater<>()) -
            fp_scores.begin());
    };

    if (static_cast<double>(fp_scores.size()) <= budget + 1e-12) {
        res.threshold = *std::min_element(all_scores.begin(), all_scores.end());
        res.achieved_fppi = static_cast<double>(fp_scores.size()) / images;
        return res;
    }

    std::sort(all_scores.begin(), all_scores.end());
    for (double t : all_scores) {
        const std::size_t fp = fp_count_at(t);
        if (static_cast<double>(fp) <= budget + 1e-12) {
            res.threshold = t;
            res.achieved_fppi = static_cast<double>(fp) / images;
            return res;
        }
    }

    res.threshold = std::numeric_limits<double>::infinity();
    res.achieved_fppi = 0.0;
    res.saturated = true;
    res.note = "no observed score meets the FPPI target; threshold saturated to +inf";
    return res;
}

// ---- model file ------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// strtod handles "inf"/"nan", which stream extraction may not
double parse_double(const std::string& tok, const std::string& what) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw DataError("load_model: malformed " + what + ": '" + tok + "'");
    return v;
}

}  // namespace

void save_model(const LinearModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_model: cannot open " + path);
    out << "platescan-model v1\n";
    out << "dim " << model.weights.size() << "\n";
    out << "norm " << (model.hog.norm == BlockNorm::L1 ? "l1" : "l2") << "\n";
    out << "hog cell " << model.hog.cell_size << " block " << model.hog.block_size << " stride "
        << model.hog.block_stride << " bins " << model.hog.num_bins << " eps "
        << fmt_double(model.hog.epsilon) << " window " << model.window_w << " " << model.window_h
        << "\n";
    for (double w : model.weights) out << fmt_double(w) << "\n";
    out << "bias " << fmt_double(model.bias) << "\n";
    out << "threshold " << fmt_double(model.threshold) << "\n";
    if (!out) throw DataError("save_model: write failed for " + path);
}

LinearModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_model: cannot open " + path);

    std::string line;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw DataError("load_model: truncated file, expected " +
                                                     std::string(what) + " in " + path);
        return line;
    };

    if (next_line("header") != "platescan-model v1")
        throw DataError("load_model: unrecognized header in " + path);

    LinearModel model;
    std::size_t dim = 0;
    {
        std::istringstream ss(next_line("dim"));
        std::string key;
        if (!(ss >> key >> dim) || key != "dim")
            throw DataError("load_model: malformed dim line in " + path);
    }
    {
        std::istringstream ss(next_line("norm"));
        std::string key, val;
        if (!(ss >> key >> val) || key != "norm" || (val != "l1" && val != "l2"))
            throw DataError("load_model: malformed norm line in " + path);
        model.hog.norm = (val == "l1") ? BlockNorm::L1 : BlockNorm::L2;
    }
    {
        std::istringstream ss(next_line("hog"));
        std::string hog, cell, block, stride, bins, eps, eps_val, window;
        if (!(ss >> hog >> cell >> model.hog.cell_size >> block >> model.hog.block_size >> stride >>
              model.hog.block_stride >> bins >> model.hog.num_bins >> eps >> eps_val >> window >>
              model.window_w >> model.window_h) ||
            hog != "hog")
            throw DataError("load_model: malformed hog line in " + path);
        model.hog.epsilon = parse_double(eps_val, "epsilon");
    }

    model.weights.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        model.weights[i] = parse_double(next_line("weight"), "weight " + std::to_string(i));
    {
        std::istringstream ss(next_line("bias"));
        std::string key, val;
        if (!(ss >> key >> val) || key != "bias")
            throw DataError("load_model: malformed bias line in " + path);
        model.bias = parse_double(val, "bias");
    }
    {
        std::istringstream ss(next_line("threshold"));
        std::string key, val;
        if (!(ss >> key >> val) || key != "threshold")
            throw DataError("load_model: malformed threshold line in " + path);
        model.threshold = parse_double(val, "threshold");
    }
    return model;
}

}  // namespace platescan
