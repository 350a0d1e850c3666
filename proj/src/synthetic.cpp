#include "platescan/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "platescan/errors.hpp"
#include "platescan/rng.hpp"

namespace platescan {

void SceneSpec::validate() const {
    if (width < 16 || height < 16) throw DataError("SceneSpec: scene too small");
    if (min_plates < 0 || max_plates < min_plates)
        throw DataError("SceneSpec: invalid plate count range");
    if (min_plate_width < 12.0 || max_plate_width < min_plate_width)
        throw DataError("SceneSpec: invalid plate width range");
    if (aspect_mean <= 0.0 || aspect_std < 0.0) throw DataError("SceneSpec: invalid aspect");
    if (margin < 0) throw DataError("SceneSpec: negative margin");
    const double max_h = max_plate_width / std::max(1.0, aspect_mean - 3.0 * aspect_std);
    if (max_plate_width + 2.0 * margin > width || max_h + 2.0 * margin > height)
        throw DataError("SceneSpec: largest plate cannot fit inside the scene");
}

namespace {

void fill_rect(GrayImage& img, const BoundingBox& r, float value) {
    const int x1 = std::max(0, r.x), y1 = std::max(0, r.y);
    const int x2 = std::min(img.width, r.x2()), y2 = std::min(img.height, r.y2());
    for (int y = y1; y < y2; ++y)
        for (int x = x1; x < x2; ++x) img.at(x, y) = value;
}

// value-noise layer: coarse random grid upsampled bilinearly
GrayImage noise_layer(int w, int h, int cell, double amplitude, Rng& rng) {
    const int gw = std::max(3, w / cell + 2);
    const int gh = std::max(3, h / cell + 2);
    GrayImage grid(gw, gh);
    for (float& v : grid.data) v = static_cast<float>(rng.uniform_real(-amplitude, amplitude));
    return resize(grid, w, h);
}

void render_plate(GrayImage& img, const BoundingBox& plate, Rng& rng) {
    const int w = plate.w, h = plate.h;
    const float base = static_cast<float>(rng.uniform_real(195.0, 235.0));
    const float ink = static_cast<float>(rng.uniform_real(20.0, 60.0));

    fill_rect(img, plate, base);

    // dark frame
    const int frame = std::max(1, static_cast<int>(std::lround(0.06 * h)));
    fill_rect(img, {plate.x, plate.y, w, frame}, ink);
    fill_rect(img, {plate.x, plate.y2() - frame, w, frame}, ink);
    fill_rect(img, {plate.x, plate.y, frame, h}, ink);
    fill_rect(img, {plate.x2() - frame, plate.y, frame, h}, ink);

    // seven glyphs: vertical strokes with seeded crossbars
    const int gy = plate.y + static_cast<int>(std::lround(0.22 * h));
    const int gh = std::max(2, static_cast<int>(std::lround(0.56 * h)));
    const double band_x = plate.x + 0.09 * w;
    const double pitch = (w - 0.18 * w) / 7.0;
    const int stroke = std::max(1, static_cast<int>(std::lround(0.035 * w)));

    for (int g = 0; g < 7; ++g) {
        const int slot_x = static_cast<int>(std::lround(band_x + g * pitch));
        const int slot_w = std::max(stroke + 1, static_cast<int>(std::lround(pitch * 0.72)));

        const int kind = rng.uniform_int(0, 3);
        const int sx = slot_x + rng.uniform_int(0, std::max(0, slot_w - stroke));
        fill_rect(img, {sx, gy, stroke, gh}, ink);
        if (kind == 1) {  // second vertical
            const int sx2 = slot_x + std::max(0, slot_w - stroke);
            fill_rect(img, {sx2, gy, stroke, gh}, ink);
        }
        if (kind >= 1) {  // crossbar top, middle or bottom
            const int which = rng.uniform_int(0, 2);
            const int by = which == 0 ? gy : which == 1 ? gy + gh / 2 : gy + gh - stroke;
            fill_rect(img, {slot_x, by, slot_w, stroke}, ink);
        }
    }
}

void render_stripes(GrayImage& img, const BoundingBox& r, Rng& rng) {
    const float base = static_cast<float>(rng.uniform_real(150.0, 205.0));
    const float bar = static_cast<float>(rng.uniform_real(20.0, 90.0));
    fill_rect(img, r, base);
    const int pitch = rng.uniform_int(3, 7);
    const int bw = std::max(1, static_cast<int>(std::lround(0.12 * r.h)));
    for (int x = r.x + pitch / 2; x + bw <= r.x2(); x += pitch)
        fill_rect(img, {x, r.y + 1, bw, std::max(1, r.h - 2)}, bar);
}

void render_blob(GrayImage& img, int cx, int cy, int rx, int ry, Rng& rng) {
    const float peak = static_cast<float>(rng.uniform_real(205.0, 250.0));
    const int x1 = std::max(0, cx - rx), x2 = std::min(img.width, cx + rx + 1);
    const int y1 = std::max(0, cy - ry), y2 = std::min(img.height, cy + ry + 1);
    for (int y = y1; y < y2; ++y) {
        for (int x = x1; x < x2; ++x) {
            const double dx = static_cast<double>(x - cx) / rx;
            const double dy = static_cast<double>(y - cy) / ry;
            const double d2 = dx * dx + dy * dy;
            if (d2 < 1.0) {
                const float t = static_cast<float>(1.0 - d2);
                img.at(x, y) = img.at(x, y) + t * (peak - img.at(x, y));
            }
        }
    }
}

BoundingBox inflate(const BoundingBox& b, int margin) {
    return {b.x - margin, b.y - margin, b.w + 2 * margin, b.h + 2 * margin};
}

bool clear_of(const BoundingBox& box, const std::vector<BoundingBox>& others, int margin) {
    for (const BoundingBox& o : others)
        if (intersection_area(box, inflate(o, margin)) > 0) return false;
    return true;
}

}  // namespace

SyntheticScene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(mix_seed(seed, 0x7363656e));

    SyntheticScene scene;
    scene.image = GrayImage(spec.width, spec.height);
    GrayImage& img = scene.image;

    // background: smooth base + two noise octaves + pixel grain
    const float base = static_cast<float>(rng.uniform_real(95.0, 140.0));
    const GrayImage coarse = noise_layer(spec.width, spec.height, 32, 30.0, rng);
    const GrayImage fine = noise_layer(spec.width, spec.height, 8, 12.0, rng);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = base + coarse.data[i] + fine.data[i] +
                      static_cast<float>(rng.uniform_real(-5.0, 5.0));

    // plates first so each gets the context margin its padded crop needs
    const int plate_count = rng.uniform_int(spec.min_plates, spec.max_plates);
    for (int p = 0; p < plate_count; ++p) {
        bool placed = false;
        for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
            const double pw = rng.uniform_real(spec.min_plate_width, spec.max_plate_width);
            double aspect = rng.normal(spec.aspect_mean, spec.aspect_std);
            aspect = std::clamp(aspect, spec.aspect_mean - 3.0 * spec.aspect_std,
                                spec.aspect_mean + 3.0 * spec.aspect_std);
            BoundingBox box;
            box.w = static_cast<int>(std::lround(pw));
            box.h = std::max(4, static_cast<int>(std::lround(pw / aspect)));

            // leave room for the padded training crop around the plate
            const int m = std::max({spec.margin, static_cast<int>(std::lround(0.13 * box.w)) + 1,
                                    static_cast<int>(std::lround(0.25 * box.h)) + 1});
            if (box.w + 2 * m > spec.width || box.h + 2 * m > spec.height) continue;
            box.x = rng.uniform_int(m, spec.width - m - box.w);
            box.y = rng.uniform_int(m, spec.height - m - box.h);
            if (!clear_of(box, scene.plates, 6)) continue;

            render_plate(img, box, rng);
            scene.plates.push_back(box);
            placed = true;
        }
    }

    for (int s = 0; s < spec.stripe_distractors; ++s) {
        for (int attempt = 0; attempt < 40; ++attempt) {
            BoundingBox r;
            r.w = rng.uniform_int(26, 80);
            r.h = rng.uniform_int(8, 26);
            if (r.w >= spec.width - 2 || r.h >= spec.height - 2) continue;
            r.x = rng.uniform_int(1, spec.width - 1 - r.w);
            r.y = rng.uniform_int(1, spec.height - 1 - r.h);
            if (!clear_of(r, scene.plates, 6)) continue;
            render_stripes(img, r, rng);
            break;
        }
    }

    for (int b = 0; b < spec.blob_distractors; ++b) {
        for (int attempt = 0; attempt < 40; ++attempt) {
            const int rx = rng.uniform_int(5, 16);
            const int ry = rng.uniform_int(4, 12);
            const int cx = rng.uniform_int(rx + 1, spec.width - rx - 2);
            const int cy = rng.uniform_int(ry + 1, spec.height - ry - 2);
            const BoundingBox r{cx - rx, cy - ry, 2 * rx + 1, 2 * ry + 1};
            if (!clear_of(r, scene.plates, 6)) continue;
            render_blob(img, cx, cy, rx, ry, rng);
            break;
        }
    }

    // quantize so the in-memory raster equals its PNG round trip
    for (float& v : img.data) v = std::clamp(std::round(v), 0.0f, 255.0f);
    return scene;
}

}  // namespace platescan
