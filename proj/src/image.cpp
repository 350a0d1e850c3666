#include "platescan/image.hpp"

#include <cmath>
#include <string>

#include "platescan/errors.hpp"

namespace platescan {

GrayImage to_grayscale(const RgbImage& rgb) {
    if (rgb.width <= 0 || rgb.height <= 0)
        throw DataError("to_grayscale: zero-sized image (" + std::to_string(rgb.width) + "x" +
                        std::to_string(rgb.height) + ")");
    if (rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height * 3)
        throw DataError("to_grayscale: pixel buffer does not match dimensions");

    GrayImage out(rgb.width, rgb.height);
    const std::uint8_t* p = rgb.data.data();
    for (std::size_t i = 0; i < out.data.size(); ++i, p += 3) {
        out.data[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
    return out;
}

GrayImage resize(const GrayImage& img, int new_width, int new_height) {
    if (img.width <= 0 || img.height <= 0)
        throw DataError("resize: empty source image");
    if (new_width < 3 || new_height < 3)
        throw DataError("resize: target dimensions must be at least 3x3, got " +
                        std::to_string(new_width) + "x" + std::to_string(new_height));
    if (new_width == img.width && new_height == img.height) return img;

    GrayImage out(new_width, new_height);
    const double sx = static_cast<double>(img.width) / new_width;
    const double sy = static_cast<double>(img.height) / new_height;

    for (int y = 0; y < new_height; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        if (fy < 0.0) fy = 0.0;
        int y0 = static_cast<int>(fy);
        if (y0 > img.height - 2) y0 = img.height - 2;
        if (y0 < 0) y0 = 0;  // height == 1
        int y1 = (img.height > 1) ? y0 + 1 : y0;
        double wy = fy - y0;
        if (wy < 0.0) wy = 0.0;
        if (wy > 1.0) wy = 1.0;

        for (int x = 0; x < new_width; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            if (fx < 0.0) fx = 0.0;
            int x0 = static_cast<int>(fx);
            if (x0 > img.width - 2) x0 = img.width - 2;
            if (x0 < 0) x0 = 0;
            int x1 = (img.width > 1) ? x0 + 1 : x0;
            double wx = fx - x0;
            if (wx < 0.0) wx = 0.0;
            if (wx > 1.0) wx = 1.0;

            // lerp form keeps constant inputs exactly constant
            double a = img.at(x0, y0);
            double b = img.at(x1, y0);
            double c = img.at(x0, y1);
            double d = img.at(x1, y1);
            double top = a + wx * (b - a);
            double bot = c + wx * (d - c);
            out.at(x, y) = static_cast<float>(top + wy * (bot - top));
        }
    }
    return out;
}

GrayImage crop(const GrayImage& img, const BoundingBox& rect) {
    if (rect.w <= 0 || rect.h <= 0 || rect.x < 0 || rect.y < 0 || rect.x2() > img.width ||
        rect.y2() > img.height)
        throw DataError("crop: rectangle (" + std::to_string(rect.x) + "," + std::to_string(rect.y) +
                        "," + std::to_string(rect.w) + "," + std::to_string(rect.h) +
                        ") outside image " + std::to_string(img.width) + "x" +
                        std::to_string(img.height));
    GrayImage out(rect.w, rect.h);
    for (int y = 0; y < rect.h; ++y)
        for (int x = 0; x < rect.w; ++x) out.at(x, y) = img.at(rect.x + x, rect.y + y);
    return out;
}

}  // namespace platescan
