#include "platescan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "platescan/errors.hpp"

namespace platescan {

double match_pair(const BoundingBox& r, const BoundingBox& r0) {
    const long long inter = intersection_area(r, r0);
    const long long uni = r.area() + r0.area() - inter;
    if (uni <= 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double best_match(const BoundingBox& r, std::span<const BoundingBox> rects) {
    double best = 0.0;
    for (const BoundingBox& r0 : rects) best = std::max(best, match_pair(r, r0));
    return best;
}

namespace {

// A zero threshold still requires actual overlap; otherwise disjoint boxes
// (and empty sets, whose best match is 0) would count as matches.
inline bool matched(double m, double t) { return t > 0.0 ? m >= t : m > 0.0; }

}  // namespace

EvalResult evaluate(const std::vector<std::vector<BoundingBox>>& detections,
                    const std::vector<std::vector<BoundingBox>>& ground_truth,
                    double match_threshold, bool one_to_one) {
    if (detections.size() != ground_truth.size())
        throw DataError("evaluate: detections and ground truth differ in image count");
    if (match_threshold < 0.0 || match_threshold > 1.0)
        throw DataError("evaluate: match threshold must be in [0, 1]");
    if (detections.empty()) throw DataError("evaluate: no images");

    EvalResult res;
    res.images = static_cast<int>(detections.size());
    res.per_image.resize(detections.size());

    for (std::size_t i = 0; i < detections.size(); ++i) {
        const std::vector<BoundingBox>& dets = detections[i];
        const std::vector<BoundingBox>& gts = ground_truth[i];
        ImageTally& tally = res.per_image[i];
        tally.gt_total = static_cast<int>(gts.size());
        tally.det_total = static_cast<int>(dets.size());

        if (!one_to_one) {
            for (const BoundingBox& gt : gts)
                if (matched(best_match(gt, dets), match_threshold)) ++tally.gt_matched;
            for (const BoundingBox& det : dets)
                if (matched(best_match(det, gts), match_threshold)) ++tally.det_matched;
        } else {
            // greedy exclusive matching by descending overlap
            struct Pair {
                double m;
                std::size_t det, gt;
            };
            std::vector<Pair> pairs;
            for (std::size_t di = 0; di < dets.size(); ++di)
                for (std::size_t gi = 0; gi < gts.size(); ++gi) {
                    const double m = match_pair(dets[di], gts[gi]);
                    if (matched(m, match_threshold)) pairs.push_back({m, di, gi});
                }
            std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
                if (a.m != b.m) return a.m > b.m;
                if (a.det != b.det) return a.det < b.det;
                return a.gt < b.gt;
            });
            std::vector<bool> det_used(dets.size(), false), gt_used(gts.size(), false);
            for (const Pair& p : pairs) {
                if (det_used[p.det] || gt_used[p.gt]) continue;
                det_used[p.det] = true;
                gt_used[p.gt] = true;
                ++tally.det_matched;
                ++tally.gt_matched;
            }
        }
        tally.false_positives = tally.det_total - tally.det_matched;

        res.gt_total += tally.gt_total;
        res.det_total += tally.det_total;
    }

    int gt_matched = 0, det_matched = 0, fp = 0;
    for (const ImageTally& t : res.per_image) {
        gt_matched += t.gt_matched;
        det_matched += t.det_matched;
        fp += t.false_positives;
    }
    res.recall = res.gt_total > 0 ? static_cast<double>(gt_matched) / res.gt_total
                                  : std::numeric_limits<double>::quiet_NaN();
    res.precision = res.det_total > 0 ? static_cast<double>(det_matched) / res.det_total : 1.0;
    res.fppi = static_cast<double>(fp) / res.images;
    return res;
}

Curve det_curve(const std::vector<std::vector<Detection>>& detections,
                const std::vector<std::vector<BoundingBox>>& ground_truth,
                double match_threshold) {
    if (detections.size() != ground_truth.size())
        throw DataError("det_curve: detections and ground truth differ in image count");
    if (detections.empty()) throw DataError("det_curve: no images");

    const double n_images = static_cast<double>(detections.size());
    int gt_total = 0;
    for (const std::vector<BoundingBox>& g : ground_truth) gt_total += static_cast<int>(g.size());

    // A detection's true/false-positive status does not depend on the score
    // cutoff; a ground truth is recalled at cutoff tau when its best matching
    // detection scores at least tau.
    std::vector<double> fp_scores;
    std::vector<double> gt_best_scores;
    std::vector<double> thresholds;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const std::vector<BoundingBox>& gts = ground_truth[i];
        for (const Detection& d : detections[i]) {
            thresholds.push_back(d.score);
            if (!matched(best_match(d.box, gts), match_threshold)) fp_scores.push_back(d.score);
        }
        for (const BoundingBox& gt : gts) {
            double best = -std::numeric_limits<double>::infinity();
            for (const Detection& d : detections[i])
                if (matched(match_pair(d.box, gt), match_threshold))
                    best = std::max(best, d.score);
            gt_best_scores.push_back(best);
        }
    }

    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), std::numeric_limits<double>::infinity());

    Curve curve;
    for (double tau : thresholds) {
        std::size_t fp = 0;
        for (double s : fp_scores)
            if (s >= tau) ++fp;
        std::size_t recalled = 0;
        for (double s : gt_best_scores)
            if (s >= tau) ++recalled;
        const double x = static_cast<double>(fp) / n_images;
        const double y = gt_total > 0 ? static_cast<double>(recalled) / gt_total : 0.0;
        if (!curve.points.empty() && curve.points.back().first == x)
            curve.points.back().second = std::max(curve.points.back().second, y);
        else
            curve.points.emplace_back(x, y);
    }
    return curve;
}

std::pair<Curve, Curve> matching_degree_sweep(
    const std::vector<std::vector<BoundingBox>>& detections,
    const std::vector<std::vector<BoundingBox>>& ground_truth, std::span<const double> t_grid) {
    if (t_grid.empty()) throw DataError("matching_degree_sweep: empty threshold grid");
    std::vector<double> ts(t_grid.begin(), t_grid.end());
    if (!std::is_sorted(ts.begin(), ts.end()))
        throw DataError("matching_degree_sweep: t_grid must be sorted ascending");
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    Curve precision, recall;
    for (double t : ts) {
        const EvalResult r = evaluate(detections, ground_truth, t);
        precision.points.emplace_back(t, r.precision);
        recall.points.emplace_back(t, r.recall);
    }
    return {precision, recall};
}

void write_curve_csv(std::ostream& out, const Curve& curve, const char* x_name,
                     const char* y_name) {
    out << x_name << ',' << y_name << "\n";
    char buf[80];
    for (const auto& [x, y] : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g", x, y);
        out << buf << "\n";
    }
}

}  // namespace platescan
