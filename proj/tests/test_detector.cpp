#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "platescan/detector.hpp"
#include "platescan/errors.hpp"
#include "platescan/eval.hpp"

using namespace platescan;

namespace {

// a model that accepts everything: zero weights, bias above the threshold
LinearModel accept_all_model(int dim, double bias = 1.0) {
    LinearModel m;
    m.weights.assign(dim, 0.0);
    m.bias = bias;
    m.threshold = 0.0;
    return m;
}

ScanConfig single_level_config() {
    ScanConfig cfg;
    cfg.pyramid.num_levels = 1;
    cfg.threads = 1;
    return cfg;
}

Detection det(int x, int y, int w, int h, double s, int level = 0) {
    Detection d;
    d.box = {x, y, w, h};
    d.score = s;
    d.level_index = level;
    return d;
}

}  // namespace

TEST_CASE("a +inf threshold yields an empty detection list") {
    const HogConfig hog;
    ScanConfig cfg = single_level_config();
    LinearModel m = accept_all_model(descriptor_length(cfg.window_w, cfg.window_h, hog));
    m.threshold = std::numeric_limits<double>::infinity();
    const GrayImage img = oracles::random_image(200, 100, 3);
    const ScanResult r = scan(img, m, hog, cfg);
    CHECK(r.detections.empty());
    CHECK(r.windows_total() == 88);  // windows are still visited
}

TEST_CASE("an image equal to one window yields exactly one detection at the origin") {
    const HogConfig hog;
    ScanConfig cfg = single_level_config();
    const LinearModel m = accept_all_model(descriptor_length(cfg.window_w, cfg.window_h, hog));
    const GrayImage img = oracles::random_image(108, 36, 4);
    const ScanResult r = scan(img, m, hog, cfg);
    REQUIRE(r.detections.size() == 1);
    CHECK(r.detections[0].box == BoundingBox{0, 0, 108, 36});
    CHECK(r.detections[0].score == doctest::Approx(1.0));
    CHECK(r.windows_total() == 1);
}

TEST_CASE("window placements follow the closed-form count") {
    const HogConfig hog;
    ScanConfig cfg = single_level_config();
    const LinearModel m = accept_all_model(descriptor_length(cfg.window_w, cfg.window_h, hog));
    const GrayImage img = oracles::random_image(200, 100, 5);
    const ScanResult r = scan(img, m, hog, cfg);
    // floor((200-108)/9)+1 = 11, floor((100-36)/9)+1 = 8
    CHECK(r.windows_total() == 88);
    CHECK(r.windows_total() == oracles::count_placements(200, 100, 108, 36, 9));
    CHECK(static_cast<long long>(r.detections.size()) == r.windows_total());
}

TEST_CASE("window counts match independent enumeration across pyramid levels") {
    const HogConfig hog;
    ScanConfig cfg;
    cfg.pyramid.num_levels = 5;
    cfg.threads = 1;
    const LinearModel m = accept_all_model(descriptor_length(cfg.window_w, cfg.window_h, hog));
    const GrayImage img = oracles::random_image(320, 200, 6);
    const ScanResult r = scan(img, m, hog, cfg);
    const Pyramid pyr = build_pyramid(img, cfg.pyramid.step, cfg.pyramid.num_levels, 108, 36);
    REQUIRE(r.windows_per_level.size() == pyr.levels.size());
    for (std::size_t i = 0; i < pyr.levels.size(); ++i)
        CHECK(r.windows_per_level[i] ==
              oracles::count_placements(pyr.levels[i].image.width, pyr.levels[i].image.height,
                                        108, 36, cfg.stride));
}

TEST_CASE("images smaller than the window at every level warn and return empty") {
    const HogConfig hog;
    ScanConfig cfg = single_level_config();
    const LinearModel m = accept_all_model(descriptor_length(cfg.window_w, cfg.window_h, hog));
    const GrayImage img = oracles::random_image(50, 20, 7);
    const ScanResult r = scan(img, m, hog, cfg);
    CHECK(r.detections.empty());
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("scan validates the model dimension") {
    const HogConfig hog;
    const ScanConfig cfg = single_level_config();
    const LinearModel m = accept_all_model(100);
    const GrayImage img = oracles::random_image(200, 100, 8);
    CHECK_THROWS_AS(scan(img, m, hog, cfg), DataError);
}

TEST_CASE("every detection box lies inside the original image") {
    const HogConfig hog;
    ScanConfig cfg;
    cfg.pyramid.num_levels = 11;
    cfg.threads = 1;
    const LinearModel m = accept_all_model(descriptor_length(cfg.window_w, cfg.window_h, hog));
    const GrayImage img = oracles::random_image(300, 170, 9);
    const ScanResult r = scan(img, m, hog, cfg);
    REQUIRE_FALSE(r.detections.empty());
    for (const Detection& d : r.detections) {
        CHECK(d.box.x >= 0);
        CHECK(d.box.y >= 0);
        CHECK(d.box.x2() <= 300);
        CHECK(d.box.y2() <= 170);
    }
}

TEST_CASE("detections come out sorted by score with deterministic tie-breaks") {
    const HogConfig hog;
    ScanConfig cfg;
    cfg.pyramid.num_levels = 3;
    cfg.threads = 1;
    const LinearModel m = accept_all_model(descriptor_length(cfg.window_w, cfg.window_h, hog));
    const GrayImage img = oracles::random_image(250, 120, 10);
    const ScanResult r = scan(img, m, hog, cfg);
    for (std::size_t i = 1; i < r.detections.size(); ++i) {
        const Detection& a = r.detections[i - 1];
        const Detection& b = r.detections[i];
        const bool ordered =
            a.score > b.score ||
            (a.score == b.score &&
             (a.level_index < b.level_index ||
              (a.level_index == b.level_index &&
               (a.box.y < b.box.y || (a.box.y == b.box.y && a.box.x <= b.box.x)))));
        CHECK(ordered);
    }
}

TEST_CASE("single-threaded and multi-threaded scans are identical") {
    HogConfig hog;
    ScanConfig cfg;
    cfg.pyramid.num_levels = 7;
    // a non-trivial model so scores vary per window
    LinearModel m;
    const int dim = descriptor_length(cfg.window_w, cfg.window_h, hog);
    m.weights.resize(dim);
    for (int i = 0; i < dim; ++i) m.weights[i] = ((i * 2654435761u) % 1000) / 500.0 - 1.0;
    m.bias = 0.01;
    m.threshold = -std::numeric_limits<double>::infinity();

    const GrayImage img = oracles::random_image(260, 140, 11);
    cfg.threads = 1;
    const ScanResult a = scan(img, m, hog, cfg);
    cfg.threads = 4;
    const ScanResult b = scan(img, m, hog, cfg);

    REQUIRE(a.detections.size() == b.detections.size());
    for (std::size_t i = 0; i < a.detections.size(); ++i) {
        CHECK(a.detections[i].box == b.detections[i].box);
        CHECK(a.detections[i].score == b.detections[i].score);  // bit-identical
        CHECK(a.detections[i].level_index == b.detections[i].level_index);
    }
}

TEST_CASE("raising the model threshold never adds a detection") {
    HogConfig hog;
    ScanConfig cfg = single_level_config();
    LinearModel m;
    const int dim = descriptor_length(cfg.window_w, cfg.window_h, hog);
    m.weights.resize(dim);
    for (int i = 0; i < dim; ++i) m.weights[i] = ((i * 40503u) % 997) / 499.0 - 1.0;
    const GrayImage img = oracles::random_image(300, 150, 12);

    m.threshold = -1e9;
    const std::size_t all = scan(img, m, hog, cfg).detections.size();
    std::size_t prev = all;
    for (double t : {-0.5, 0.0, 0.5, 2.0}) {
        m.threshold = t;
        const std::size_t n = scan(img, m, hog, cfg).detections.size();
        CHECK(n <= prev);
        prev = n;
    }
}

// ---- nms ---------------------------------------------------------------------

TEST_CASE("nms keeps a single detection") {
    const std::vector<Detection> in{det(0, 0, 10, 10, 0.9)};
    const std::vector<Detection> out = non_max_suppression(in, 0.3);
    REQUIRE(out.size() == 1);
    CHECK(out[0].box == in[0].box);
}

TEST_CASE("nms keeps disjoint boxes regardless of score") {
    const std::vector<Detection> in{det(0, 0, 10, 10, 0.9), det(50, 50, 10, 10, 0.1)};
    CHECK(non_max_suppression(in, 0.0).size() == 2);
}

TEST_CASE("nms suppresses the lower-scoring overlapping box") {
    // m_p((0,0,10,10),(2,0,10,10)) = 80/120 = 2/3 > 0.3
    const Detection a = det(0, 0, 10, 10, 0.9);
    const Detection b = det(2, 0, 10, 10, 0.8);
    CHECK(oracles::pixel_iou(a.box, b.box) == doctest::Approx(2.0 / 3.0));
    const std::vector<Detection> out = non_max_suppression({a, b}, 0.3);
    REQUIRE(out.size() == 1);
    CHECK(out[0].box == a.box);
    CHECK(out[0].score == 0.9);
}

TEST_CASE("nms output is an antichain under the overlap threshold") {
    std::uint64_t state = 17;
    auto next = [&state](int n) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<int>((state >> 33) % n);
    };
    std::vector<Detection> dets;
    for (int i = 0; i < 120; ++i)
        dets.push_back(det(next(100), next(60), 10 + next(40), 8 + next(25),
                           next(1000) / 1000.0));
    std::sort(dets.begin(), dets.end(),
              [](const Detection& a, const Detection& b) { return a.score > b.score; });
    const double overlap = 0.3;
    const std::vector<Detection> out = non_max_suppression(dets, overlap);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j)
            CHECK(match_pair(out[i].box, out[j].box) <= overlap);
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i - 1].score >= out[i].score);
}

// ---- coordinate mapping -------------------------------------------------------

TEST_CASE("mapping at scale 1.0 is the identity") {
    PyramidLevel level;
    level.scale = 1.0;
    const BoundingBox b{17, 23, 108, 36};
    CHECK(map_to_original(b, level) == b);
}

TEST_CASE("mapping at scale 2.0 doubles everything") {
    CHECK(map_to_original(BoundingBox{10, 10, 108, 36}, 2.0) == BoundingBox{20, 20, 216, 72});
}

TEST_CASE("mapping rounds to the nearest pixel at fractional scales") {
    // round(9*1.1)=10, round(108*1.1)=119, round(36*1.1)=40
    CHECK(map_to_original(BoundingBox{9, 9, 108, 36}, 1.1) == BoundingBox{10, 10, 119, 40});
}

// ---- padding ------------------------------------------------------------------

TEST_CASE("stripping the default padding recovers the 90x30 core") {
    const ScanConfig cfg;
    CHECK(strip_padding({0, 0, 108, 36}, cfg) == BoundingBox{9, 3, 90, 30});
}

TEST_CASE("zero padding strips to the identity") {
    ScanConfig cfg;
    cfg.pad_x = 0;
    cfg.pad_y = 0;
    const BoundingBox b{5, 6, 108, 36};
    CHECK(strip_padding(b, cfg) == b);
}

TEST_CASE("padding scales with the detection size") {
    const ScanConfig cfg;
    // a scale-2.0 detection: padding doubles with it
    CHECK(strip_padding({0, 0, 216, 72}, cfg) == BoundingBox{18, 6, 180, 60});
}

TEST_CASE("stripping rejects boxes rounded away by their padding") {
    ScanConfig cfg;
    cfg.pad_x = 30;
    cfg.pad_y = 10;
    cfg.window_w = 108;
    cfg.window_h = 36;
    // 2x2 box: the scaled padding rounds to one pixel per side, leaving nothing
    CHECK_THROWS_AS(strip_padding({0, 0, 2, 2}, cfg), DataError);
}

// ---- detection csv ------------------------------------------------------------

TEST_CASE("detection csv round trips including ids with commas") {
    std::vector<NamedDetections> rows(2);
    rows[0].image_id = "imgs/a.png";
    rows[0].detections = {det(1, 2, 90, 30, 0.125, 3), det(7, 9, 99, 33, -1.5, 0)};
    rows[1].image_id = "weird,name.png";
    rows[1].detections = {det(0, 0, 10, 10, 2.0, 1)};

    std::stringstream ss;
    write_detections_csv(ss, rows);
    const std::vector<NamedDetections> back = read_detections_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].image_id == "imgs/a.png");
    REQUIRE(back[0].detections.size() == 2);
    CHECK(back[0].detections[0].box == BoundingBox{1, 2, 90, 30});
    CHECK(back[0].detections[0].score == 0.125);
    CHECK(back[0].detections[0].level_index == 3);
    CHECK(back[1].image_id == "weird,name.png");
    CHECK(back[1].detections[0].score == 2.0);
}

TEST_CASE("detection csv accepts third-party files without a level column") {
    std::stringstream ss;
    ss << "image_id,x,y,w,h,score\n";
    ss << "a.png,10,20,90,30,0.75\n";
    ss << "a.png,40,50,90,30,0.25\n";
    const std::vector<NamedDetections> rows = read_detections_csv(ss);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].detections.size() == 2);
    CHECK(rows[0].detections[1].box == BoundingBox{40, 50, 90, 30});
    CHECK(rows[0].detections[1].level_index == 0);
}

TEST_CASE("malformed detection csv lines are rejected with their line number") {
    std::stringstream ss;
    ss << "image_id,x,y,w,h,score,level\n";
    ss << "a.png,10,20\n";
    CHECK_THROWS_WITH_AS(read_detections_csv(ss), doctest::Contains("line 2"), DataError);
}
