#pragma once

#include <string>
#include <vector>

#include "vms/image.hpp"
#include "vms/map_grid.hpp"
#include "vms/tensor_io.hpp"

namespace vms {

// Pixel range [x0, x1) x [y0, y1) covered by one descriptor cell.
struct CellExtent {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool operator==(const CellExtent&) const = default;
};

// gx x gy grid of per-cell histograms of length `bins`, stored cell-major
// (row of cells, then column, then bin).
struct SpatialDescriptor {
  std::string name;
  int grid_x = 0;
  int grid_y = 0;
  int bins = 0;
  std::vector<double> values;
  // Empty for ingested descriptors whose pixel layout is unknown.
  std::vector<CellExtent> extents;

  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(grid_x) * grid_y; }
  const double* cell(int cx, int cy) const {
    return values.data() + (static_cast<std::size_t>(cy) * grid_x + cx) * bins;
  }
  bool operator==(const SpatialDescriptor&) const = default;
};

struct PixelHistogramOptions {
  int grid_x = 4;
  int grid_y = 4;
  int bins_per_channel = 8;
};

// Per-cell concatenation of the R, G and B marginal histograms, normalized
// so that each cell sums to 1.
SpatialDescriptor pixel_histogram(const RgbImage& image, const PixelHistogramOptions& options = {});

// Raw counts before normalization; each channel's counts sum to the cell's
// pixel count.
SpatialDescriptor pixel_histogram_counts(const RgbImage& image, const PixelHistogramOptions& options = {});

struct HogOptions {
  int cell = 8;         // pixels per cell side
  int block = 2;        // cells per block side
  int orientations = 9; // unsigned bins over [0, 180)
  double clip = 0.2;    // L2-Hys clipping
};

// Rectangular HoG on the luma channel with a one-cell block stride. The
// descriptor grid is the block grid: ((W/cell) - block + 1) x ((H/cell) -
// block + 1) cells of block*block*orientations values.
SpatialDescriptor hog_descriptor(const GrayImage& image, const HogOptions& options = {});
SpatialDescriptor hog_descriptor(const RgbImage& image, const HogOptions& options = {});

// Wraps a (gy, gx, h) tensor. Rejects any other rank and negative entries.
SpatialDescriptor load_descriptor(const Tensor& tensor, std::string name);
Tensor descriptor_tensor(const SpatialDescriptor& d);

struct PooledFeature {
  std::vector<double> values;
  // Set when the weighted mass was zero; `values` are then all zero.
  bool all_zero = false;
};

// Multiplies every cell's histogram by the mean of `weights` over that cell
// (weights area-averaged to the descriptor grid), concatenates and
// L1-normalizes. A null weight map means weight 1 everywhere.
PooledFeature pool_weighted(const SpatialDescriptor& d, const MapGrid* weights);

}  // namespace vms
