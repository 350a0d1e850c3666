#pragma once

#include <span>
#include <vector>

#include "platescan/geometry.hpp"
#include "platescan/image.hpp"

namespace platescan {

enum class BlockNorm { L1, L2 };

struct HogConfig {
    int cell_size = 4;     // pixels per cell side
    int block_size = 2;    // cells per block side
    int block_stride = 1;  // cells between adjacent blocks
    int num_bins = 9;      // orientation bins over [0, pi)
    BlockNorm norm = BlockNorm::L1;
    double epsilon = 1e-3;  // stabilizer in the block norm denominator

    void validate() const;  // throws DataError
    bool operator==(const HogConfig&) const = default;
};

// Per-pixel central differences, magnitude and unsigned orientation.
// The outermost row/column replicates its neighbor's difference, so every
// pixel stays votable.
struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<double> dx;
    std::vector<double> dy;
    std::vector<double> magnitude;    // >= 0
    std::vector<double> orientation;  // [0, pi)

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

// Per-bin cumulative magnitude tables of size (width+1) x (height+1); entry
// (x, y) holds the mass voted into that bin over the pixel rectangle
// [0,x) x [0,y). Any rectangle's histogram is four lookups per bin.
class IntegralOrientationHistogram {
public:
    IntegralOrientationHistogram(int width, int height, int num_bins);

    int width() const { return width_; }
    int height() const { return height_; }
    int num_bins() const { return bins_; }

    double table_value(int bin, int x, int y) const {
        return table_[(static_cast<std::size_t>(y) * (width_ + 1) + x) * bins_ + bin];
    }

    // Per-bin mass over [x1,x2) x [y1,y2); no bounds checks, out has num_bins slots.
    void cell_sums(int x1, int y1, int x2, int y2, std::span<double> out) const;

    std::vector<double>& raw() { return table_; }

private:
    int width_;
    int height_;
    int bins_;
    std::vector<double> table_;  // interleaved: ((y*(W+1))+x)*bins + b
};

struct HogDescriptor {
    std::vector<double> values;
    HogConfig config;
    int window_w = 0;
    int window_h = 0;
};

GradientField compute_gradients(const GrayImage& img);

// Hard assignment: floor(orientation * num_bins / pi), clamped to the last bin.
int bin_index(double orientation, int num_bins);

IntegralOrientationHistogram build_integral_histogram(const GradientField& grad, int num_bins);

// Bounds-checked rectangle query.
std::vector<double> cell_histogram(const IntegralOrientationHistogram& ih,
                                   const BoundingBox& cell_rect);

// Number of descriptor components for a window: nbx * nby * block^2 * bins,
// nbx = (cells_x - block) / stride + 1. Window must be a whole multiple of
// the cell size in both dimensions.
int descriptor_length(int window_w, int window_h, const HogConfig& cfg);

// Blocks tile the window's cell grid with the configured stride; each block's
// concatenated cell histograms are normalized (L1: v/(|v|1 + eps),
// L2: v/sqrt(|v|2^2 + eps^2)) and appended in row-major block order,
// row-major cell order within a block, ascending bin order.
HogDescriptor extract_descriptor(const IntegralOrientationHistogram& ih,
                                 const BoundingBox& window, const HogConfig& cfg);

// Scratch-buffer variant used by the scanner; writes descriptor_length values.
void extract_descriptor_into(const IntegralOrientationHistogram& ih, const BoundingBox& window,
                             const HogConfig& cfg, std::span<double> out);

// Gradients + integral histogram + whole-image window in one call.
HogDescriptor compute_window_descriptor(const GrayImage& window_img, const HogConfig& cfg);

}  // namespace platescan
