#include "platescan/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>

#include "platescan/errors.hpp"

namespace platescan {

namespace {

cv::Mat read_or_throw(const std::string& path, int flags) {
    cv::Mat m = cv::imread(path, flags);
    if (m.empty()) throw DataError("cannot read image: " + path);
    return m;
}

}  // namespace

RgbImage load_rgb(const std::string& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_COLOR);  // 8-bit BGR
    RgbImage out;
    out.width = m.cols;
    out.height = m.rows;
    out.data.resize(static_cast<std::size_t>(m.cols) * m.rows * 3);
    std::size_t k = 0;
    for (int y = 0; y < m.rows; ++y) {
        const cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < m.cols; ++x) {
            out.data[k++] = row[x][2];
            out.data[k++] = row[x][1];
            out.data[k++] = row[x][0];
        }
    }
    return out;
}

GrayImage load_gray(const std::string& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_UNCHANGED);
    if (m.channels() == 1) {
        if (m.depth() != CV_8U) m.convertTo(m, CV_8U);
        GrayImage out(m.cols, m.rows);
        for (int y = 0; y < m.rows; ++y) {
            const std::uint8_t* row = m.ptr<std::uint8_t>(y);
            for (int x = 0; x < m.cols; ++x) out.at(x, y) = static_cast<float>(row[x]);
        }
        return out;
    }
    return to_grayscale(load_rgb(path));
}

void save_png(const GrayImage& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0) throw DataError("save_png: empty image");
    cv::Mat m(img.height, img.width, CV_8UC1);
    for (int y = 0; y < img.height; ++y) {
        std::uint8_t* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width; ++x) {
            float v = std::lround(img.at(x, y));
            if (v < 0.0f) v = 0.0f;
            if (v > 255.0f) v = 255.0f;
            row[x] = static_cast<std::uint8_t>(v);
        }
    }
    if (!cv::imwrite(path, m)) throw DataError("cannot write image: " + path);
}

std::pair<int, int> image_dimensions(const std::string& path) {
    cv::Mat m = read_or_throw(path, cv::IMREAD_UNCHANGED);
    return {m.cols, m.rows};
}

}  // namespace platescan
