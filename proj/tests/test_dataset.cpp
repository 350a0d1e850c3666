#include <cmath>
#include <set>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "platescan/dataset.hpp"
#include "platescan/errors.hpp"
#include "platescan/eval.hpp"
#include "platescan/image_io.hpp"
#include "platescan/pipeline.hpp"
#include "platescan/synthetic.hpp"

using namespace platescan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("platescan_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("an empty manifest file loads as an empty manifest") {
    TempDir dir;
    write_text(dir.file("empty.tsv"), "");
    const DatasetManifest m = load_manifest(dir.file("empty.tsv"));
    CHECK(m.entries.empty());
}

TEST_CASE("a single valid record loads with its box") {
    TempDir dir;
    const SyntheticScene scene = generate_scene(SceneSpec{}, 5);
    save_png(scene.image, dir.file("img.png"));
    write_text(dir.file("m.tsv"), dir.file("img.png") + "\t10,12,90,30\n");
    const DatasetManifest m = load_manifest(dir.file("m.tsv"));
    REQUIRE(m.entries.size() == 1);
    REQUIRE(m.entries[0].plates.size() == 1);
    CHECK(m.entries[0].plates[0] == BoundingBox{10, 12, 90, 30});
    CHECK(m.entries[0].width == 320);
    CHECK(m.entries[0].height == 192);
}

TEST_CASE("boxes exceeding the image bounds are rejected with their line number") {
    TempDir dir;
    const SyntheticScene scene = generate_scene(SceneSpec{}, 6);
    save_png(scene.image, dir.file("img.png"));
    write_text(dir.file("m.tsv"),
               dir.file("img.png") + "\t0,0,90,30\n" + dir.file("img.png") + "2\t0,0,90,30\n");
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("m.tsv")), doctest::Contains(":2"), DataError);

    write_text(dir.file("wide.tsv"), dir.file("img.png") + "\t300,0,90,30\n");
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("wide.tsv")), doctest::Contains(":1"), DataError);
}

TEST_CASE("duplicate image paths are rejected") {
    TempDir dir;
    write_text(dir.file("m.tsv"), "a.png\t0,0,1,1\na.png\n");
    CHECK_THROWS_WITH_AS(load_manifest(dir.file("m.tsv"), false), doctest::Contains("duplicate"),
                         DataError);
}

TEST_CASE("manifests round trip through save and load") {
    TempDir dir;
    DatasetManifest m;
    m.entries.push_back({"x.png", {{1, 2, 3, 4}, {5, 6, 7, 8}}, 0, 0});
    m.entries.push_back({"y.png", {}, 0, 0});
    save_manifest(m, dir.file("m.tsv"));
    const DatasetManifest back = load_manifest(dir.file("m.tsv"), false);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].plates.size() == 2);
    CHECK(back.entries[0].plates[1] == BoundingBox{5, 6, 7, 8});
    CHECK(back.entries[1].plates.empty());
}

TEST_CASE("sidecar directories convert to manifests") {
    TempDir dir;
    const SyntheticScene scene = generate_scene(SceneSpec{}, 7);
    save_png(scene.image, dir.file("a.png"));
    save_png(scene.image, dir.file("b.png"));
    write_text(dir.file("a.txt"), "10 12 90 30\n40 60 70 22\n");
    const DatasetManifest m = manifest_from_sidecars(dir.path.string());
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0].plates.size() == 2);
    CHECK(m.entries[0].plates[1] == BoundingBox{40, 60, 70, 22});
    CHECK(m.entries[1].plates.empty());  // no sidecar for b.png
}

TEST_CASE("plate statistics use the n-1 denominator") {
    DatasetManifest m;
    SUBCASE("single plate has zero spread") {
        m.entries.push_back({"a", {{0, 0, 100, 32}}, 0, 0});
        const PlateStats s = plate_statistics(m);
        CHECK(s.width_mean == 100.0);
        CHECK(s.height_mean == 32.0);
        CHECK(s.aspect_mean == doctest::Approx(3.125));
        CHECK(s.width_std == 0.0);
        CHECK(s.count == 1);
    }
    SUBCASE("two plates: hand-computed sample statistics") {
        m.entries.push_back({"a", {{0, 0, 90, 30}}, 0, 0});
        m.entries.push_back({"b", {{0, 0, 110, 34}}, 0, 0});
        const PlateStats s = plate_statistics(m);
        CHECK(s.width_mean == 100.0);
        CHECK(s.width_std == doctest::Approx(std::sqrt(200.0)));  // 14.142
        CHECK(s.height_mean == 32.0);
        CHECK(s.height_std == doctest::Approx(std::sqrt(8.0)));
        CHECK(s.aspect_mean == doctest::Approx((3.0 + 110.0 / 34.0) / 2.0));
    }
    SUBCASE("zero plates is an error") {
        m.entries.push_back({"a", {}, 0, 0});
        CHECK_THROWS_AS(plate_statistics(m), DataError);
    }
}

TEST_CASE("sampled negatives never intersect a plate and are seed-stable") {
    AnnotatedImage entry;
    entry.image_path = "synthetic";
    entry.width = 320;
    entry.height = 192;
    entry.plates = {{40, 40, 100, 32}, {180, 120, 90, 29}};

    const std::vector<BoundingBox> a = sample_negatives(entry, 108, 36, 20, 99);
    const std::vector<BoundingBox> b = sample_negatives(entry, 108, 36, 20, 99);
    const std::vector<BoundingBox> c = sample_negatives(entry, 108, 36, 20, 100);
    REQUIRE(a.size() == 20);
    CHECK(a == b);
    CHECK(a != c);
    for (const BoundingBox& box : a) {
        CHECK(box.x >= 0);
        CHECK(box.y >= 0);
        CHECK(box.x2() <= 320);
        CHECK(box.y2() <= 192);
        for (const BoundingBox& plate : entry.plates) CHECK(intersection_area(box, plate) == 0);
    }
}

TEST_CASE("an image with no plates accepts every sample") {
    AnnotatedImage entry;
    entry.width = 150;
    entry.height = 60;
    const std::vector<BoundingBox> s = sample_negatives(entry, 108, 36, 10, 5);
    CHECK(s.size() == 10);
}

TEST_CASE("a single legal placement is found deterministically") {
    // plate covers everything except the top-left window slot
    AnnotatedImage entry;
    entry.width = 120;
    entry.height = 48;
    entry.plates = {{108, 0, 12, 48}, {0, 36, 108, 12}};
    // legal placements for a 108x36 window: only (0,0)
    long long legal = 0;
    for (int y = 0; y + 36 <= 48; ++y)
        for (int x = 0; x + 108 <= 120; ++x) {
            const BoundingBox box{x, y, 108, 36};
            bool ok = true;
            for (const BoundingBox& p : entry.plates)
                if (intersection_area(box, p) > 0) ok = false;
            if (ok) ++legal;
        }
    REQUIRE(legal == 1);

    std::vector<std::string> warnings;
    const std::vector<BoundingBox> s = sample_negatives(entry, 108, 36, 1, 31, &warnings);
    REQUIRE(s.size() == 1);
    CHECK(s[0] == BoundingBox{0, 0, 108, 36});
}

TEST_CASE("an image too covered to place negatives returns a partial list with warning") {
    AnnotatedImage entry;
    entry.width = 110;
    entry.height = 40;
    entry.plates = {{0, 0, 110, 40}};
    std::vector<std::string> warnings;
    const std::vector<BoundingBox> s = sample_negatives(entry, 108, 36, 5, 1, &warnings);
    CHECK(s.empty());
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("split produces a seeded partition with the requested sizes") {
    DatasetManifest m;
    for (int i = 0; i < 377; ++i)
        m.entries.push_back({"img_" + std::to_string(i) + ".png", {}, 0, 0});

    const double fraction = 77.0 / 377.0;
    const auto [train, test] = split_manifest(m, fraction, 7);
    CHECK(train.entries.size() == 77);
    CHECK(test.entries.size() == 300);
    CHECK(train.split_tag == DatasetManifest::Split::train);
    CHECK(test.split_tag == DatasetManifest::Split::test);

    std::set<std::string> seen;
    for (const AnnotatedImage& e : train.entries) seen.insert(e.image_path);
    for (const AnnotatedImage& e : test.entries) CHECK(seen.insert(e.image_path).second);
    CHECK(seen.size() == 377);

    const auto [train2, test2] = split_manifest(m, fraction, 7);
    for (std::size_t i = 0; i < train.entries.size(); ++i)
        CHECK(train.entries[i].image_path == train2.entries[i].image_path);

    DatasetManifest two;
    two.entries.push_back({"a", {}, 0, 0});
    two.entries.push_back({"b", {}, 0, 0});
    const auto [t1, t2] = split_manifest(two, 0.5, 3);
    CHECK(t1.entries.size() == 1);
    CHECK(t2.entries.size() == 1);
}

// ---- synthetic scenes -----------------------------------------------------------

TEST_CASE("zero requested plates produce a plate-free scene") {
    SceneSpec spec;
    spec.min_plates = 0;
    spec.max_plates = 0;
    const SyntheticScene s = generate_scene(spec, 11);
    CHECK(s.plates.empty());
    CHECK(s.image.width == spec.width);
    CHECK(s.image.height == spec.height);
}

TEST_CASE("ground truth records the rendered placement exactly") {
    SceneSpec spec;
    spec.min_plates = 1;
    spec.max_plates = 3;
    const SyntheticScene s = generate_scene(spec, 12);
    REQUIRE_FALSE(s.plates.empty());
    for (const BoundingBox& p : s.plates) {
        CHECK(p.x >= 0);
        CHECK(p.y >= 0);
        CHECK(p.x2() <= spec.width);
        CHECK(p.y2() <= spec.height);
        // the plate face is bright against the darker background; probe the
        // interior beyond the dark frame
        const int cx = p.x + p.w / 2;
        const int frame = std::max(1, static_cast<int>(std::lround(0.06 * p.h))) + 1;
        const int cy = p.y + frame + 1;
        CHECK(s.image.at(cx, cy) > 150.0f);
    }
}

TEST_CASE("scene generation is bit-identical per seed") {
    SceneSpec spec;
    spec.max_plates = 2;
    const SyntheticScene a = generate_scene(spec, 13);
    const SyntheticScene b = generate_scene(spec, 13);
    CHECK(a.image == b.image);
    CHECK(a.plates == b.plates);
    const SyntheticScene c = generate_scene(spec, 14);
    CHECK(a.image != c.image);
}

TEST_CASE("scene pixels are integral and survive the png round trip exactly") {
    TempDir dir;
    const SyntheticScene s = generate_scene(SceneSpec{}, 15);
    for (float v : s.image.data) {
        CHECK(v == std::floor(v));
        CHECK(v >= 0.0f);
        CHECK(v <= 255.0f);
    }
    save_png(s.image, dir.file("scene.png"));
    const GrayImage back = load_gray(dir.file("scene.png"));
    REQUIRE(back.width == s.image.width);
    REQUIRE(back.height == s.image.height);
    for (std::size_t i = 0; i < back.data.size(); ++i) CHECK(back.data[i] == s.image.data[i]);
}

TEST_CASE("scene spec geometry is validated") {
    SceneSpec spec;
    spec.min_plate_width = 300.0;
    spec.max_plate_width = 400.0;
    CHECK_THROWS_AS(generate_scene(spec, 1), DataError);
}

// ---- positive extraction ---------------------------------------------------------

TEST_CASE("positive windows have the exact window size") {
    const SyntheticScene s = generate_scene(SceneSpec{}, 16);
    REQUIRE_FALSE(s.plates.empty());
    const ScanConfig cfg;
    const std::optional<GrayImage> w = extract_positive_window(s.image, s.plates[0], cfg);
    REQUIRE(w.has_value());
    CHECK(w->width == 108);
    CHECK(w->height == 36);
}

TEST_CASE("positives too close to the border fall back gracefully") {
    const GrayImage img = oracles::random_image(120, 60, 3);
    ScanConfig cfg;
    // plate wider than the image makes the context crop impossible
    CHECK_FALSE(extract_positive_window(img, {0, 0, 119, 40}, cfg).has_value());
}

// ---- bootstrapping ---------------------------------------------------------------

namespace {

// in-memory loader over prebuilt scenes
ImageLoader scene_loader(const std::vector<SyntheticScene>& scenes) {
    return [&scenes](const AnnotatedImage& entry) {
        return scenes[static_cast<std::size_t>(std::stoi(entry.image_path))].image;
    };
}

}  // namespace

TEST_CASE("bootstrap collects the highest-scoring false positives up to budget") {
    // a model that fires everywhere: every window above threshold, none on GT
    HogConfig hog;
    ScanConfig cfg;
    cfg.pyramid.num_levels = 1;
    cfg.threads = 1;
    const int dim = descriptor_length(cfg.window_w, cfg.window_h, hog);

    std::vector<SyntheticScene> scenes;
    scenes.push_back(generate_scene(SceneSpec{}, 21));
    std::vector<AnnotatedImage> entries(1);
    entries[0].image_path = "0";
    entries[0].plates = {};  // no ground truth: every hit is a false positive
    entries[0].width = scenes[0].image.width;
    entries[0].height = scenes[0].image.height;

    LinearModel m;
    m.weights.resize(dim);
    for (int i = 0; i < dim; ++i) m.weights[i] = ((i * 2654435761u) % 1000) / 1000.0;
    m.bias = 0.0;
    m.threshold = -1e9;

    SUBCASE("budget zero yields an empty set") {
        const FeatureMatrix hard =
            bootstrap_round(m, entries, scene_loader(scenes), hog, cfg, 0, 0.5);
        CHECK(hard.rows() == 0);
    }

    SUBCASE("budget smaller than the candidate pool keeps the top scores") {
        const FeatureMatrix hard =
            bootstrap_round(m, entries, scene_loader(scenes), hog, cfg, 10, 0.5);
        CHECK(hard.rows() == 10);

        // oracle: rescore all windows, confirm the kept minimum dominates
        std::vector<double> all_scores;
        scan_windows(scenes[0].image, m, hog, cfg, -1e18,
                     [&](int, double, const BoundingBox&, double s, std::span<const double>) {
                         all_scores.push_back(s);
                     });
        std::sort(all_scores.begin(), all_scores.end(), std::greater<>());
        REQUIRE(all_scores.size() >= 10);
        double kept_min = 1e18;
        for (std::size_t r = 0; r < hard.rows(); ++r)
            kept_min = std::min(kept_min, static_cast<double>(score(m, hard.row(r))));
        CHECK(kept_min == doctest::Approx(all_scores[9]));
        for (std::size_t i = 10; i < all_scores.size(); ++i)
            CHECK(kept_min >= all_scores[i] - 1e-9);
    }
}

TEST_CASE("a model with no false positives bootstraps an empty set") {
    HogConfig hog;
    ScanConfig cfg;
    cfg.pyramid.num_levels = 1;
    cfg.threads = 1;
    const int dim = descriptor_length(cfg.window_w, cfg.window_h, hog);
    LinearModel m;
    m.weights.assign(dim, 0.0);
    m.bias = -5.0;  // every window scores -5, below threshold 0
    m.threshold = 0.0;

    std::vector<SyntheticScene> scenes;
    scenes.push_back(generate_scene(SceneSpec{}, 22));
    std::vector<AnnotatedImage> entries(1);
    entries[0].image_path = "0";
    entries[0].plates = scenes[0].plates;

    const FeatureMatrix hard = bootstrap_round(m, entries, scene_loader(scenes), hog, cfg,
                                               1000, 0.5);
    CHECK(hard.rows() == 0);
}

TEST_CASE("bootstrap negatives all miss the ground truth") {
    HogConfig hog;
    ScanConfig cfg;
    cfg.pyramid.num_levels = 3;
    cfg.threads = 1;
    const int dim = descriptor_length(cfg.window_w, cfg.window_h, hog);
    LinearModel m;
    m.weights.resize(dim);
    for (int i = 0; i < dim; ++i) m.weights[i] = ((i * 7919u) % 1000) / 1000.0 - 0.3;
    m.threshold = -1e9;

    SceneSpec spec;
    spec.min_plates = 1;
    spec.max_plates = 1;
    std::vector<SyntheticScene> scenes{generate_scene(spec, 23)};
    std::vector<AnnotatedImage> entries(1);
    entries[0].image_path = "0";
    entries[0].plates = scenes[0].plates;

    // verify through the visitor that collected windows lie off the plate
    const FeatureMatrix hard =
        bootstrap_round(m, entries, scene_loader(scenes), hog, cfg, 50, 0.5);
    CHECK(hard.rows() > 0);
    CHECK(hard.rows() <= 50);
}
