#include <algorithm>
#include <cmath>

#include "vms/errors.hpp"
#include "vms/featpool.hpp"

namespace vms {
namespace {

void l2_hys(double* v, int n, double clip) {
  auto normalize = [&] {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) ss += v[i] * v[i];
    if (ss <= 0.0) return false;
    const double inv = 1.0 / std::sqrt(ss);
    for (int i = 0; i < n; ++i) v[i] *= inv;
    return true;
  };
  if (!normalize()) return;
  for (int i = 0; i < n; ++i) v[i] = std::min(v[i], clip);
  normalize();
}

}  // namespace

SpatialDescriptor hog_descriptor(const GrayImage& image, const HogOptions& options) {
  if (options.cell <= 0 || options.block <= 0 || options.orientations <= 0) {
    throw ValidationError("HoG cell, block and orientation counts must be positive");
  }
  const int ncx = image.width / options.cell;
  const int ncy = image.height / options.cell;
  if (ncx < options.block || ncy < options.block) {
    throw ValidationError("image smaller than one HoG block");
  }
  const int nb = options.orientations;
  const double bin_width = 180.0 / nb;

  std::vector<double> cells(static_cast<std::size_t>(ncx) * ncy * nb, 0.0);
  const int w = image.width;
  const int h = image.height;
  for (int y = 0; y < ncy * options.cell; ++y) {
    for (int x = 0; x < ncx * options.cell; ++x) {
      const double gx = image.at(std::min(x + 1, w - 1), y) - image.at(std::max(x - 1, 0), y);
      const double gy = image.at(x, std::min(y + 1, h - 1)) - image.at(x, std::max(y - 1, 0));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double deg = std::atan2(gy, gx) * (180.0 / M_PI);
      if (deg < 0) deg += 180.0;
      if (deg >= 180.0) deg -= 180.0;
      // Bin k is centred on k * bin_width; votes split linearly between the
      // two nearest centres, wrapping at 180 degrees.
      const double pos = deg / bin_width;
      const int b0 = static_cast<int>(std::floor(pos)) % nb;
      const int b1 = (b0 + 1) % nb;
      const double frac = pos - std::floor(pos);
      double* hist = cells.data() + (static_cast<std::size_t>(y / options.cell) * ncx + x / options.cell) * nb;
      hist[b0] += mag * (1.0 - frac);
      hist[b1] += mag * frac;
    }
  }

  SpatialDescriptor d;
  d.name = "hog";
  d.grid_x = ncx - options.block + 1;
  d.grid_y = ncy - options.block + 1;
  d.bins = options.block * options.block * nb;
  d.values.assign(d.cell_count() * d.bins, 0.0);
  for (int by = 0; by < d.grid_y; ++by) {
    for (int bx = 0; bx < d.grid_x; ++bx) {
      double* out = d.values.data() + (static_cast<std::size_t>(by) * d.grid_x + bx) * d.bins;
      int k = 0;
      for (int cy = by; cy < by + options.block; ++cy) {
        for (int cx = bx; cx < bx + options.block; ++cx) {
          const double* src = cells.data() + (static_cast<std::size_t>(cy) * ncx + cx) * nb;
          for (int b = 0; b < nb; ++b) out[k++] = src[b];
        }
      }
      l2_hys(out, d.bins, options.clip);
      d.extents.push_back({bx * options.cell, by * options.cell, (bx + options.block) * options.cell,
                           (by + options.block) * options.cell});
    }
  }
  return d;
}

SpatialDescriptor hog_descriptor(const RgbImage& image, const HogOptions& options) {
  if (image.empty()) throw ValidationError("hog_descriptor: empty image");
  return hog_descriptor(to_gray(image), options);
}

}  // namespace vms
