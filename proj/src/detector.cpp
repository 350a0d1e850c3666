#include "platescan/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "platescan/errors.hpp"
#include "platescan/eval.hpp"

namespace platescan {

void ScanConfig::validate(const HogConfig& hog) const {
    hog.validate();
    if (stride < 1) throw DataError("ScanConfig: stride must be >= 1");
    if (window_w < hog.cell_size || window_h < hog.cell_size)
        throw DataError("ScanConfig: window smaller than one cell");
    descriptor_length(window_w, window_h, hog);  // rejects misaligned windows
    if (pyramid.num_levels < 1) throw DataError("ScanConfig: need at least one pyramid level");
    if (pyramid.step <= 1.0) throw DataError("ScanConfig: pyramid step must exceed 1.0");
    if (nms_overlap < 0.0 || nms_overlap > 1.0)
        throw DataError("ScanConfig: nms_overlap must be in [0, 1]");
    if (threads < 0) throw DataError("ScanConfig: threads must be >= 0");
    if (window_w <= 2 * std::abs(pad_x) || window_h <= 2 * std::abs(pad_y))
        throw DataError("ScanConfig: padding leaves no plate core inside the window");
}

long long ScanResult::windows_total() const {
    return std::accumulate(windows_per_level.begin(), windows_per_level.end(), 0LL);
}

namespace {

bool detection_order(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.level_index != b.level_index) return a.level_index < b.level_index;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    return a.box.x < b.box.x;
}

// clamp a mapped box into the original image bounds
BoundingBox clamp_into(BoundingBox box, int img_w, int img_h) {
    box.w = std::min(box.w, img_w);
    box.h = std::min(box.h, img_h);
    box.x = std::clamp(box.x, 0, img_w - box.w);
    box.y = std::clamp(box.y, 0, img_h - box.h);
    return box;
}

}  // namespace

ScanResult scan(const GrayImage& img, const LinearModel& model, const HogConfig& hog,
                const ScanConfig& cfg) {
    cfg.validate(hog);
    const int dim = descriptor_length(cfg.window_w, cfg.window_h, hog);
    if (model.weights.size() != static_cast<std::size_t>(dim))
        throw DataError("scan: model dimension " + std::to_string(model.weights.size()) +
                        " does not match descriptor length " + std::to_string(dim));

    ScanResult result;
    Pyramid pyr;
    try {
        pyr = build_pyramid(img, cfg.pyramid.step, cfg.pyramid.num_levels, cfg.window_w,
                            cfg.window_h);
    } catch (const DataError& e) {
        result.warnings.push_back(std::string("scan: ") + e.what());
        return result;
    }
    result.dropped_levels = pyr.dropped_levels;
    if (pyr.dropped_levels > 0)
        result.warnings.push_back("scan: dropped " + std::to_string(pyr.dropped_levels) +
                                  " pyramid level(s) smaller than the window");

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    for (const PyramidLevel& level : pyr.levels) {
        const GrayImage& li = level.image;
        const GradientField grad = compute_gradients(li);
        const IntegralOrientationHistogram ih = build_integral_histogram(grad, hog.num_bins);

        const int nx = (li.width - cfg.window_w) / cfg.stride + 1;
        const int ny = (li.height - cfg.window_h) / cfg.stride + 1;
        result.windows_per_level.push_back(static_cast<long long>(nx) * ny);

        // one output slot per window row keeps the merge order fixed no
        // matter which thread finishes first
        std::vector<std::vector<Detection>> rows(ny);
        std::atomic<int> next_row{0};
        auto worker = [&]() {
            std::vector<double> descriptor(dim);
            for (;;) {
                const int r = next_row.fetch_add(1);
                if (r >= ny) break;
                const int y = r * cfg.stride;
                std::vector<Detection>& out = rows[r];
                for (int ix = 0; ix < nx; ++ix) {
                    const int x = ix * cfg.stride;
                    const BoundingBox window{x, y, cfg.window_w, cfg.window_h};
                    extract_descriptor_into(ih, window, hog, descriptor);
                    const double s = score(model, descriptor);
                    if (s >= model.threshold) {
                        Detection d;
                        d.box = clamp_into(map_to_original(window, level.scale), img.width,
                                           img.height);
                        d.score = s;
                        d.level_index = level.level_index;
                        out.push_back(d);
                    }
                }
            }
        };

        if (threads == 1 || ny <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            const int n = std::min(threads, ny);
            pool.reserve(n);
            for (int t = 0; t < n; ++t) pool.emplace_back(worker);
            for (std::thread& t : pool) t.join();
        }
        for (std::vector<Detection>& r : rows)
            result.detections.insert(result.detections.end(), r.begin(), r.end());
    }

    std::sort(result.detections.begin(), result.detections.end(), detection_order);
    return result;
}

std::vector<Detection> non_max_suppression(std::vector<Detection> dets, double overlap) {
    std::stable_sort(dets.begin(), dets.end(), detection_order);  // idempotent on sorted input
    std::vector<Detection> kept;
    kept.reserve(dets.size());
    for (const Detection& d : dets) {
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (match_pair(d.box, k.box) > overlap) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

BoundingBox map_to_original(const BoundingBox& box_at_level, double scale) {
    BoundingBox out;
    out.x = static_cast<int>(std::llround(box_at_level.x * scale));
    out.y = static_cast<int>(std::llround(box_at_level.y * scale));
    out.w = static_cast<int>(std::llround(box_at_level.w * scale));
    out.h = static_cast<int>(std::llround(box_at_level.h * scale));
    return out;
}

BoundingBox map_to_original(const BoundingBox& box_at_level, const PyramidLevel& level) {
    return map_to_original(box_at_level, level.scale);
}

BoundingBox strip_padding(const BoundingBox& det_box, const ScanConfig& cfg) {
    const double sx = static_cast<double>(det_box.w) / cfg.window_w;
    const double sy = static_cast<double>(det_box.h) / cfg.window_h;
    const int px = static_cast<int>(std::llround(cfg.pad_x * sx));
    const int py = static_cast<int>(std::llround(cfg.pad_y * sy));

    BoundingBox out;
    out.x = det_box.x + px;
    out.y = det_box.y + py;
    out.w = det_box.w - 2 * px;
    out.h = det_box.h - 2 * py;
    if (out.w <= 0 || out.h <= 0)
        throw DataError("strip_padding: box " + std::to_string(det_box.w) + "x" +
                        std::to_string(det_box.h) + " smaller than the scaled padding");
    return out;
}

void scan_windows(const GrayImage& img, const LinearModel& model, const HogConfig& hog,
                  const ScanConfig& cfg, double min_score, const WindowVisitor& visit) {
    cfg.validate(hog);
    const int dim = descriptor_length(cfg.window_w, cfg.window_h, hog);
    if (model.weights.size() != static_cast<std::size_t>(dim))
        throw DataError("scan_windows: model dimension does not match descriptor length");

    Pyramid pyr;
    try {
        pyr = build_pyramid(img, cfg.pyramid.step, cfg.pyramid.num_levels, cfg.window_w,
                            cfg.window_h);
    } catch (const DataError&) {
        return;
    }

    std::vector<double> descriptor(dim);
    for (const PyramidLevel& level : pyr.levels) {
        const GrayImage& li = level.image;
        const GradientField grad = compute_gradients(li);
        const IntegralOrientationHistogram ih = build_integral_histogram(grad, hog.num_bins);
        for (int y = 0; y + cfg.window_h <= li.height; y += cfg.stride) {
            for (int x = 0; x + cfg.window_w <= li.width; x += cfg.stride) {
                const BoundingBox window{x, y, cfg.window_w, cfg.window_h};
                extract_descriptor_into(ih, window, hog, descriptor);
                const double s = score(model, descriptor);
                if (s >= min_score) visit(level.level_index, level.scale, window, s, descriptor);
            }
        }
    }
}

// ---- detection CSV ----------------------------------------------------------

void write_detections_csv(std::ostream& out, const std::vector<NamedDetections>& rows) {
    out << "image_id,x,y,w,h,score,level\n";
    char buf[64];
    for (const NamedDetections& r : rows) {
        for (const Detection& d : r.detections) {
            std::snprintf(buf, sizeof(buf), "%.17g", d.score);
            out << r.image_id << ',' << d.box.x << ',' << d.box.y << ',' << d.box.w << ','
                << d.box.h << ',' << buf << ',' << d.level_index << "\n";
        }
    }
}

namespace {

bool parse_int_strict(const std::string& s, int& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (*end != '\0' || end == s.c_str()) return false;
    out = static_cast<int>(v);
    return true;
}

bool parse_double_strict(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return *end == '\0' && end != s.c_str();
}

}  // namespace

std::vector<NamedDetections> read_detections_csv(std::istream& in) {
    std::vector<NamedDetections> rows;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("image_id,", 0) == 0) continue;  // header
        }

        // numeric fields split from the right, so image ids may contain commas
        std::vector<std::string> tail;
        std::string rest = line;
        for (int i = 0; i < 6 && !rest.empty(); ++i) {
            const std::size_t pos = rest.rfind(',');
            if (pos == std::string::npos) break;
            tail.insert(tail.begin(), rest.substr(pos + 1));
            rest.resize(pos);
        }

        // try image_id,x,y,w,h,score,level first, then the level-less layout
        Detection d;
        std::string id;
        bool ok = false;
        if (tail.size() == 6) {
            ok = parse_int_strict(tail[0], d.box.x) && parse_int_strict(tail[1], d.box.y) &&
                 parse_int_strict(tail[2], d.box.w) && parse_int_strict(tail[3], d.box.h) &&
                 parse_double_strict(tail[4], d.score) && parse_int_strict(tail[5], d.level_index);
            id = rest;
        }
        if (!ok && tail.size() >= 5) {
            const std::size_t base = tail.size() - 5;
            d.level_index = 0;
            ok = parse_int_strict(tail[base + 0], d.box.x) &&
                 parse_int_strict(tail[base + 1], d.box.y) &&
                 parse_int_strict(tail[base + 2], d.box.w) &&
                 parse_int_strict(tail[base + 3], d.box.h) &&
                 parse_double_strict(tail[base + 4], d.score);
            id = rest;
            for (std::size_t i = 0; i < base; ++i) id += "," + tail[i];
        }
        if (!ok)
            throw DataError("detections csv line " + std::to_string(lineno) +
                            ": expected image_id,x,y,w,h,score[,level]");

        auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const NamedDetections& r) { return r.image_id == id; });
        if (it == rows.end()) {
            rows.push_back(NamedDetections{id, {}});
            it = rows.end() - 1;
        }
        it->detections.push_back(d);
    }
    return rows;
}

}  // namespace platescan
