#include "platescan/hog.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "platescan/errors.hpp"

namespace platescan {

namespace {
constexpr double kPi = std::numbers::pi;
}

void HogConfig::validate() const {
    if (cell_size < 2) throw DataError("HogConfig: cell_size must be >= 2");
    if (block_size < 1) throw DataError("HogConfig: block_size must be >= 1");
    if (block_stride < 1 || block_stride > block_size)
        throw DataError("HogConfig: block_stride must be in [1, block_size]");
    if (num_bins < 2) throw DataError("HogConfig: num_bins must be >= 2");
    if (!(epsilon > 0.0)) throw DataError("HogConfig: epsilon must be positive");
}

GradientField compute_gradients(const GrayImage& img) {
    if (img.width < 3 || img.height < 3)
        throw DataError("compute_gradients: image must be at least 3x3, got " +
                        std::to_string(img.width) + "x" + std::to_string(img.height));

    const int w = img.width, h = img.height;
    GradientField g;
    g.width = w;
    g.height = h;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    g.dx.resize(n);
    g.dy.resize(n);
    g.magnitude.resize(n);
    g.orientation.resize(n);

    for (int y = 0; y < h; ++y) {
        for (int x = 1; x < w - 1; ++x)
            g.dx[g.index(x, y)] = static_cast<double>(img.at(x + 1, y)) - img.at(x - 1, y);
        g.dx[g.index(0, y)] = g.dx[g.index(1, y)];
        g.dx[g.index(w - 1, y)] = g.dx[g.index(w - 2, y)];
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 1; y < h - 1; ++y)
            g.dy[g.index(x, y)] = static_cast<double>(img.at(x, y + 1)) - img.at(x, y - 1);
        g.dy[g.index(x, 0)] = g.dy[g.index(x, 1)];
        g.dy[g.index(x, h - 1)] = g.dy[g.index(x, h - 2)];
    }

    for (std::size_t i = 0; i < n; ++i) {
        const double dx = g.dx[i], dy = g.dy[i];
        g.magnitude[i] = std::sqrt(dx * dx + dy * dy);
        double th = std::atan2(dy, dx);  // two-argument form disambiguates dx == 0
        if (th < 0.0) th += kPi;
        if (th >= kPi) th -= kPi;  // fold theta == pi onto 0
        g.orientation[i] = th;
    }
    return g;
}

int bin_index(double orientation, int num_bins) {
    int b = static_cast<int>(std::floor(orientation * num_bins / kPi));
    if (b < 0) b = 0;
    if (b >= num_bins) b = num_bins - 1;
    return b;
}

IntegralOrientationHistogram::IntegralOrientationHistogram(int width, int height, int num_bins)
    : width_(width),
      height_(height),
      bins_(num_bins),
      table_(static_cast<std::size_t>(width + 1) * (height + 1) * num_bins, 0.0) {}

void IntegralOrientationHistogram::cell_sums(int x1, int y1, int x2, int y2,
                                             std::span<double> out) const {
    const std::size_t stride = static_cast<std::size_t>(width_ + 1) * bins_;
    const double* r1 = table_.data() + static_cast<std::size_t>(y1) * stride;
    const double* r2 = table_.data() + static_cast<std::size_t>(y2) * stride;
    const double* a = r1 + static_cast<std::size_t>(x1) * bins_;
    const double* b = r1 + static_cast<std::size_t>(x2) * bins_;
    const double* c = r2 + static_cast<std::size_t>(x1) * bins_;
    const double* d = r2 + static_cast<std::size_t>(x2) * bins_;
    for (int k = 0; k < bins_; ++k) {
        const double v = d[k] - b[k] - c[k] + a[k];
        out[k] = v > 0.0 ? v : 0.0;  // cancellation can leave -1e-17 on empty cells
    }
}

IntegralOrientationHistogram build_integral_histogram(const GradientField& grad, int num_bins) {
    if (num_bins < 2) throw DataError("build_integral_histogram: num_bins must be >= 2");

    const int w = grad.width, h = grad.height;
    IntegralOrientationHistogram ih(w, h, num_bins);
    std::vector<double>& t = ih.raw();
    const std::size_t row_stride = static_cast<std::size_t>(w + 1) * num_bins;

    std::vector<double> row_acc(num_bins);
    for (int y = 0; y < h; ++y) {
        std::fill(row_acc.begin(), row_acc.end(), 0.0);
        const double* prev = t.data() + static_cast<std::size_t>(y) * row_stride;
        double* cur = t.data() + static_cast<std::size_t>(y + 1) * row_stride;
        for (int x = 0; x < w; ++x) {
            const std::size_t i = grad.index(x, y);
            row_acc[bin_index(grad.orientation[i], num_bins)] += grad.magnitude[i];
            const double* p = prev + static_cast<std::size_t>(x + 1) * num_bins;
            double* c = cur + static_cast<std::size_t>(x + 1) * num_bins;
            for (int b = 0; b < num_bins; ++b) c[b] = p[b] + row_acc[b];
        }
    }
    return ih;
}

std::vector<double> cell_histogram(const IntegralOrientationHistogram& ih,
                                   const BoundingBox& cell_rect) {
    if (cell_rect.w < 0 || cell_rect.h < 0 || cell_rect.x < 0 || cell_rect.y < 0 ||
        cell_rect.x2() > ih.width() || cell_rect.y2() > ih.height())
        throw DataError("cell_histogram: rectangle outside the raster");

    std::vector<double> out(ih.num_bins(), 0.0);
    if (cell_rect.w == 0 || cell_rect.h == 0) return out;  // empty rectangle
    ih.cell_sums(cell_rect.x, cell_rect.y, cell_rect.x2(), cell_rect.y2(), out);
    return out;
}

int descriptor_length(int window_w, int window_h, const HogConfig& cfg) {
    cfg.validate();
    if (window_w <= 0 || window_h <= 0) throw DataError("descriptor_length: empty window");
    if (window_w % cfg.cell_size != 0)
        throw DataError("descriptor_length: window width " + std::to_string(window_w) +
                        " is not a multiple of cell size " + std::to_string(cfg.cell_size));
    if (window_h % cfg.cell_size != 0)
        throw DataError("descriptor_length: window height " + std::to_string(window_h) +
                        " is not a multiple of cell size " + std::to_string(cfg.cell_size));

    const int ncx = window_w / cfg.cell_size;
    const int ncy = window_h / cfg.cell_size;
    if (ncx < cfg.block_size || ncy < cfg.block_size)
        throw DataError("descriptor_length: window smaller than one block");

    const int nbx = (ncx - cfg.block_size) / cfg.block_stride + 1;
    const int nby = (ncy - cfg.block_size) / cfg.block_stride + 1;
    return nbx * nby * cfg.block_size * cfg.block_size * cfg.num_bins;
}

void extract_descriptor_into(const IntegralOrientationHistogram& ih, const BoundingBox& window,
                             const HogConfig& cfg, std::span<double> out) {
    const int len = descriptor_length(window.w, window.h, cfg);
    if (static_cast<std::size_t>(len) != out.size())
        throw DataError("extract_descriptor: output size mismatch");
    if (window.x < 0 || window.y < 0 || window.x2() > ih.width() || window.y2() > ih.height())
        throw DataError("extract_descriptor: window outside the raster");
    if (cfg.num_bins != ih.num_bins())
        throw DataError("extract_descriptor: config bins do not match the integral histogram");

    const int cell = cfg.cell_size;
    const int bins = cfg.num_bins;
    const int ncx = window.w / cell;
    const int ncy = window.h / cell;
    const int nbx = (ncx - cfg.block_size) / cfg.block_stride + 1;
    const int nby = (ncy - cfg.block_size) / cfg.block_stride + 1;

    // one histogram per cell of this window, reused across overlapping blocks
    static thread_local std::vector<double> cells;
    cells.resize(static_cast<std::size_t>(ncx) * ncy * bins);
    for (int cy = 0; cy < ncy; ++cy) {
        const int y1 = window.y + cy * cell;
        for (int cx = 0; cx < ncx; ++cx) {
            const int x1 = window.x + cx * cell;
            ih.cell_sums(x1, y1, x1 + cell, y1 + cell,
                         std::span<double>(cells.data() + (static_cast<std::size_t>(cy) * ncx + cx) * bins,
                                           bins));
        }
    }

    const int block_values = cfg.block_size * cfg.block_size * bins;
    double* dst = out.data();
    for (int by = 0; by < nby; ++by) {
        for (int bx = 0; bx < nbx; ++bx) {
            double* block = dst;
            for (int iy = 0; iy < cfg.block_size; ++iy) {
                const int cy = by * cfg.block_stride + iy;
                for (int ix = 0; ix < cfg.block_size; ++ix) {
                    const int cx = bx * cfg.block_stride + ix;
                    const double* src =
                        cells.data() + (static_cast<std::size_t>(cy) * ncx + cx) * bins;
                    for (int b = 0; b < bins; ++b) *dst++ = src[b];
                }
            }
            if (cfg.norm == BlockNorm::L1) {
                double sum = 0.0;
                for (int k = 0; k < block_values; ++k) sum += block[k];  // votes are >= 0
                const double inv = 1.0 / (sum + cfg.epsilon);
                for (int k = 0; k < block_values; ++k) block[k] *= inv;
            } else {
                double sq = 0.0;
                for (int k = 0; k < block_values; ++k) sq += block[k] * block[k];
                const double inv = 1.0 / std::sqrt(sq + cfg.epsilon * cfg.epsilon);
                for (int k = 0; k < block_values; ++k) block[k] *= inv;
            }
        }
    }
}

HogDescriptor extract_descriptor(const IntegralOrientationHistogram& ih, const BoundingBox& window,
                                 const HogConfig& cfg) {
    HogDescriptor d;
    d.config = cfg;
    d.window_w = window.w;
    d.window_h = window.h;
    d.values.resize(descriptor_length(window.w, window.h, cfg));
    extract_descriptor_into(ih, window, cfg, d.values);
    return d;
}

HogDescriptor compute_window_descriptor(const GrayImage& window_img, const HogConfig& cfg) {
    const GradientField grad = compute_gradients(window_img);
    const IntegralOrientationHistogram ih = build_integral_histogram(grad, cfg.num_bins);
    return extract_descriptor(ih, BoundingBox{0, 0, window_img.width, window_img.height}, cfg);
}

}  // namespace platescan
