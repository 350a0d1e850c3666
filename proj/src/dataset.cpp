#include "platescan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "platescan/errors.hpp"
#include "platescan/eval.hpp"
#include "platescan/image_io.hpp"
#include "platescan/rng.hpp"

namespace fs = std::filesystem;

namespace platescan {

namespace {

BoundingBox parse_plate_field(const std::string& field, const std::string& path,
                              std::size_t lineno) {
    BoundingBox box;
    char c1, c2, c3;
    std::istringstream ss(field);
    if (!(ss >> box.x >> c1 >> box.y >> c2 >> box.w >> c3 >> box.h) || c1 != ',' || c2 != ',' ||
        c3 != ',' || !ss.eof())
        throw DataError(path + ":" + std::to_string(lineno) + ": malformed plate field '" + field +
                        "', expected x,y,w,h");
    return box;
}

void validate_entry(AnnotatedImage& entry, const std::string& path, std::size_t lineno) {
    int w = 0, h = 0;
    try {
        std::tie(w, h) = image_dimensions(entry.image_path);
    } catch (const DataError& e) {
        throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    entry.width = w;
    entry.height = h;
    for (const BoundingBox& b : entry.plates) {
        if (b.w <= 0 || b.h <= 0 || b.x < 0 || b.y < 0 || b.x2() > w || b.y2() > h)
            throw DataError(path + ":" + std::to_string(lineno) + ": box " + std::to_string(b.x) +
                            "," + std::to_string(b.y) + "," + std::to_string(b.w) + "," +
                            std::to_string(b.h) + " outside image " + std::to_string(w) + "x" +
                            std::to_string(h));
    }
}

}  // namespace

DatasetManifest load_manifest(const std::string& path, bool validate_images) {
    std::ifstream in(path);
    if (!in) throw DataError("load_manifest: cannot open " + path);

    DatasetManifest manifest;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }

        AnnotatedImage entry;
        entry.image_path = fields[0];
        if (entry.image_path.empty())
            throw DataError(path + ":" + std::to_string(lineno) + ": empty image path");
        if (!seen.insert(entry.image_path).second)
            throw DataError(path + ":" + std::to_string(lineno) + ": duplicate image path '" +
                            entry.image_path + "'");
        for (std::size_t i = 1; i < fields.size(); ++i) {
            if (fields[i].empty()) continue;
            entry.plates.push_back(parse_plate_field(fields[i], path, lineno));
        }
        if (validate_images) validate_entry(entry, path, lineno);
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_manifest: cannot open " + path);
    for (const AnnotatedImage& entry : manifest.entries) {
        out << entry.image_path;
        for (const BoundingBox& b : entry.plates)
            out << '\t' << b.x << ',' << b.y << ',' << b.w << ',' << b.h;
        out << '\n';
    }
    if (!out) throw DataError("save_manifest: write failed for " + path);
}

DatasetManifest manifest_from_sidecars(const std::string& image_dir, bool validate_images) {
    if (!fs::is_directory(image_dir))
        throw DataError("manifest_from_sidecars: not a directory: " + image_dir);

    std::vector<fs::path> images;
    for (const auto& e : fs::directory_iterator(image_dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") images.push_back(e.path());
    }
    std::sort(images.begin(), images.end());

    DatasetManifest manifest;
    for (const fs::path& img : images) {
        AnnotatedImage entry;
        entry.image_path = img.string();

        fs::path sidecar = img;
        sidecar.replace_extension(".txt");
        if (fs::exists(sidecar)) {
            std::ifstream in(sidecar);
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                BoundingBox b;
                std::istringstream ss(line);
                if (!(ss >> b.x >> b.y >> b.w >> b.h))
                    throw DataError(sidecar.string() + ":" + std::to_string(lineno) +
                                    ": expected 'x y w h'");
                entry.plates.push_back(b);
            }
        }
        if (validate_images) validate_entry(entry, entry.image_path, 0);
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

PlateStats plate_statistics(const DatasetManifest& manifest) {
    std::vector<double> widths, heights, aspects;
    for (const AnnotatedImage& entry : manifest.entries) {
        for (const BoundingBox& b : entry.plates) {
            widths.push_back(b.w);
            heights.push_back(b.h);
            aspects.push_back(static_cast<double>(b.w) / b.h);
        }
    }
    if (widths.empty()) throw DataError("plate_statistics: manifest contains no plates");

    auto mean_std = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        if (v.size() < 2) return std::pair<double, double>{mean, 0.0};
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::pair<double, double>{mean, std::sqrt(ss / (v.size() - 1))};
    };

    PlateStats stats;
    stats.count = static_cast<int>(widths.size());
    std::tie(stats.width_mean, stats.width_std) = mean_std(widths);
    std::tie(stats.height_mean, stats.height_std) = mean_std(heights);
    std::tie(stats.aspect_mean, stats.aspect_std) = mean_std(aspects);
    return stats;
}

std::vector<BoundingBox> sample_negatives(const AnnotatedImage& entry, int window_w, int window_h,
                                          int count, std::uint64_t seed,
                                          std::vector<std::string>* warnings) {
    if (entry.width < window_w || entry.height < window_h)
        throw DataError("sample_negatives: image " + std::to_string(entry.width) + "x" +
                        std::to_string(entry.height) + " smaller than the window");
    if (count < 0) throw DataError("sample_negatives: negative count");

    const int max_x = entry.width - window_w;
    const int max_y = entry.height - window_h;
    auto clear_of_plates = [&](const BoundingBox& box) {
        for (const BoundingBox& p : entry.plates)
            if (intersection_area(box, p) > 0) return false;
        return true;
    };

    Rng rng(mix_seed(seed, 0x6e6567));
    std::vector<BoundingBox> out;
    constexpr int kAttemptsPerBox = 200;
    for (int i = 0; i < count; ++i) {
        bool placed = false;
        for (int a = 0; a < kAttemptsPerBox; ++a) {
            BoundingBox box{rng.uniform_int(0, max_x), rng.uniform_int(0, max_y), window_w,
                            window_h};
            if (clear_of_plates(box)) {
                out.push_back(box);
                placed = true;
                break;
            }
        }
        if (!placed) break;  // too covered; switch to enumeration below
    }

    if (static_cast<int>(out.size()) < count) {
        // enumerate every legal stride-1 placement once and draw from it
        std::vector<BoundingBox> legal;
        for (int y = 0; y <= max_y; ++y)
            for (int x = 0; x <= max_x; ++x) {
                BoundingBox box{x, y, window_w, window_h};
                if (clear_of_plates(box)) legal.push_back(box);
            }
        while (static_cast<int>(out.size()) < count && !legal.empty()) {
            const std::size_t pick = static_cast<std::size_t>(rng.uniform(legal.size()));
            out.push_back(legal[pick]);
        }
        if (static_cast<int>(out.size()) < count && warnings)
            warnings->push_back("sample_negatives: " + entry.image_path + ": only " +
                                std::to_string(out.size()) + " of " + std::to_string(count) +
                                " negatives could be placed clear of the plates");
    }
    return out;
}

std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           double train_fraction,
                                                           std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DataError("split_manifest: fraction must be strictly between 0 and 1");

    const std::size_t n = manifest.entries.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0x73706c69));
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform(i)]);

    const std::size_t train_n =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(train_fraction * n)));
    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < train_n; ++i) in_train[idx[i]] = true;

    DatasetManifest train, test;
    train.split_tag = DatasetManifest::Split::train;
    test.split_tag = DatasetManifest::Split::test;
    for (std::size_t i = 0; i < n; ++i)
        (in_train[i] ? train : test).entries.push_back(manifest.entries[i]);
    return {std::move(train), std::move(test)};
}

std::optional<GrayImage> extract_positive_window(const GrayImage& img, const BoundingBox& plate,
                                                 const ScanConfig& cfg) {
    if (plate.w <= 0 || plate.h <= 0) return std::nullopt;
    const int core_w = cfg.window_w - 2 * cfg.pad_x;
    const int core_h = cfg.window_h - 2 * cfg.pad_y;
    if (core_w <= 0 || core_h <= 0) return std::nullopt;

    // plate width anchors the scale; the crop is centered on the plate
    const double scale = static_cast<double>(core_w) / plate.w;
    const double src_w = cfg.window_w / scale;
    const double src_h = cfg.window_h / scale;
    const double cx = plate.x + plate.w / 2.0;
    const double cy = plate.y + plate.h / 2.0;

    BoundingBox src;
    src.w = static_cast<int>(std::llround(src_w));
    src.h = static_cast<int>(std::llround(src_h));
    if (src.w < 3 || src.h < 3) return std::nullopt;
    if (src.w > img.width || src.h > img.height) return std::nullopt;
    src.x = static_cast<int>(std::llround(cx - src_w / 2.0));
    src.y = static_cast<int>(std::llround(cy - src_h / 2.0));
    src.x = std::clamp(src.x, 0, img.width - src.w);
    src.y = std::clamp(src.y, 0, img.height - src.h);

    return resize(crop(img, src), cfg.window_w, cfg.window_h);
}

FeatureMatrix bootstrap_round(const LinearModel& model, const std::vector<AnnotatedImage>& entries,
                              const ImageLoader& load, const HogConfig& hog, const ScanConfig& cfg,
                              int budget, double match_threshold) {
    const int dim = descriptor_length(cfg.window_w, cfg.window_h, hog);
    FeatureMatrix hard(static_cast<std::size_t>(dim));
    if (budget <= 0) return hard;

    struct Candidate {
        double score;
        std::size_t entry;
        int level;
        int y, x;
        std::vector<float> descriptor;

        bool operator<(const Candidate& b) const {  // best-first total order
            if (score != b.score) return score > b.score;
            if (entry != b.entry) return entry < b.entry;
            if (level != b.level) return level < b.level;
            if (y != b.y) return y < b.y;
            return x < b.x;
        }
    };
    // bounded: only the current top-`budget` candidates keep their descriptors
    std::set<Candidate> top;

    for (std::size_t i = 0; i < entries.size(); ++i) {
        const GrayImage img = load(entries[i]);
        const std::vector<BoundingBox>& gt = entries[i].plates;
        scan_windows(img, model, hog, cfg, model.threshold,
                     [&](int level, double scale, const BoundingBox& box_at_level, double s,
                         std::span<const double> descriptor) {
                         // the stripped core box is what evaluation compares
                         // against ground truth, so match on it here too
                         BoundingBox orig = map_to_original(box_at_level, scale);
                         BoundingBox core;
                         try {
                             core = strip_padding(orig, cfg);
                         } catch (const DataError&) {
                             core = orig;
                         }
                         if (best_match(core, gt) >= match_threshold) return;

                         Candidate c;
                         c.score = s;
                         c.entry = i;
                         c.level = level;
                         c.y = box_at_level.y;
                         c.x = box_at_level.x;
                         if (static_cast<int>(top.size()) >= budget) {
                             if (!(c < *std::prev(top.end()))) return;
                             top.erase(std::prev(top.end()));
                         }
                         c.descriptor.assign(descriptor.begin(), descriptor.end());
                         top.insert(std::move(c));
                     });
    }

    for (const Candidate& c : top)
        hard.push_back(std::span<const float>(c.descriptor.data(), c.descriptor.size()));
    return hard;
}

}  // namespace platescan
