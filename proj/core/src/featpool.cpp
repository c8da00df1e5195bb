#include "vms/featpool.hpp"

#include <cmath>

#include "vms/errors.hpp"

namespace vms {
namespace {

std::vector<CellExtent> tile(int width, int height, int gx, int gy) {
  if (gx <= 0 || gy <= 0) throw ValidationError("descriptor grid must be positive");
  if (width < gx || height < gy) throw ValidationError("image is smaller than the descriptor grid");
  std::vector<CellExtent> cells;
  cells.reserve(static_cast<std::size_t>(gx) * gy);
  for (int cy = 0; cy < gy; ++cy) {
    for (int cx = 0; cx < gx; ++cx) {
      cells.push_back({static_cast<int>(static_cast<long>(cx) * width / gx),
                       static_cast<int>(static_cast<long>(cy) * height / gy),
                       static_cast<int>(static_cast<long>(cx + 1) * width / gx),
                       static_cast<int>(static_cast<long>(cy + 1) * height / gy)});
    }
  }
  return cells;
}

}  // namespace

SpatialDescriptor pixel_histogram_counts(const RgbImage& image, const PixelHistogramOptions& options) {
  if (image.empty()) throw ValidationError("pixel_histogram: empty image");
  if (options.bins_per_channel <= 0 || options.bins_per_channel > 256) {
    throw ValidationError("bins_per_channel must lie in [1, 256]");
  }
  SpatialDescriptor d;
  d.name = "pixels";
  d.grid_x = options.grid_x;
  d.grid_y = options.grid_y;
  d.bins = 3 * options.bins_per_channel;
  d.extents = tile(image.width, image.height, options.grid_x, options.grid_y);
  d.values.assign(d.cell_count() * d.bins, 0.0);
  const int nb = options.bins_per_channel;
  for (std::size_t c = 0; c < d.extents.size(); ++c) {
    const auto& e = d.extents[c];
    double* h = d.values.data() + c * d.bins;
    for (int y = e.y0; y < e.y1; ++y) {
      for (int x = e.x0; x < e.x1; ++x) {
        for (int ch = 0; ch < 3; ++ch) h[ch * nb + image.at(x, y, ch) * nb / 256] += 1.0;
      }
    }
  }
  return d;
}

SpatialDescriptor pixel_histogram(const RgbImage& image, const PixelHistogramOptions& options) {
  auto d = pixel_histogram_counts(image, options);
  for (std::size_t c = 0; c < d.extents.size(); ++c) {
    const auto& e = d.extents[c];
    const double inv = 1.0 / (3.0 * (e.x1 - e.x0) * (e.y1 - e.y0));
    double* h = d.values.data() + c * d.bins;
    for (int b = 0; b < d.bins; ++b) h[b] *= inv;
  }
  return d;
}

SpatialDescriptor load_descriptor(const Tensor& tensor, std::string name) {
  validate_tensor(tensor);
  if (tensor.dims.size() != 3) {
    throw ValidationError("descriptor tensor must have dims (gy, gx, h), got ndim " +
                          std::to_string(tensor.dims.size()));
  }
  SpatialDescriptor d;
  d.name = std::move(name);
  d.grid_y = static_cast<int>(tensor.dims[0]);
  d.grid_x = static_cast<int>(tensor.dims[1]);
  d.bins = static_cast<int>(tensor.dims[2]);
  d.values.reserve(tensor.data.size());
  for (float v : tensor.data) {
    if (v < 0) throw ValidationError("negative descriptor entry in '" + d.name + "'");
    d.values.push_back(v);
  }
  return d;
}

Tensor descriptor_tensor(const SpatialDescriptor& d) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(d.grid_y), static_cast<std::uint32_t>(d.grid_x),
            static_cast<std::uint32_t>(d.bins)};
  t.data.assign(d.values.begin(), d.values.end());
  return t;
}

PooledFeature pool_weighted(const SpatialDescriptor& d, const MapGrid* weights) {
  if (d.values.size() != d.cell_count() * d.bins || d.values.empty()) {
    throw ValidationError("descriptor '" + d.name + "' has inconsistent layout");
  }
  PooledFeature out;
  out.values = d.values;
  if (weights) {
    const MapGrid w = resize_map(*weights, GridDims{d.grid_x, d.grid_y});
    if (w.size() != d.cell_count()) throw ValidationError("weight grid does not match descriptor grid");
    const auto wv = w.values();
    for (std::size_t c = 0; c < d.cell_count(); ++c) {
      for (int b = 0; b < d.bins; ++b) out.values[c * d.bins + b] *= wv[c];
    }
  }
  double mass = 0.0;
  for (double v : out.values) mass += v;
  if (mass > 0) {
    const double inv = 1.0 / mass;
    for (double& v : out.values) v *= inv;
  } else {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    out.all_zero = true;
  }
  return out;
}

}  // namespace vms
