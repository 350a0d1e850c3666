#pragma once

#include <algorithm>

namespace platescan {

// Axis-aligned rectangle: top-left corner plus extent, in pixels.
struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    int x2() const { return x + w; }
    int y2() const { return y + h; }

    bool operator==(const BoundingBox&) const = default;
};

inline long long intersection_area(const BoundingBox& a, const BoundingBox& b) {
    long long iw = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
    long long ih = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
    if (iw <= 0 || ih <= 0) return 0;
    return iw * ih;
}

}  // namespace platescan
