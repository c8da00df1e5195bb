#include "vms/map_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vms/errors.hpp"

namespace vms {
namespace {

void check_dims(GridDims d) {
  if (d.width <= 0 || d.height <= 0) throw ValidationError("map dims must be positive");
}

struct Tap {
  int src;
  double weight;
};

// Per-output-cell resampling taps along one axis.
std::vector<std::vector<Tap>> axis_taps(int from, int to) {
  std::vector<std::vector<Tap>> taps(to);
  if (from == to) {
    for (int o = 0; o < to; ++o) taps[o] = {{o, 1.0}};
    return taps;
  }
  if (to < from) {
    // Exact fractional-overlap area average.
    const double scale = static_cast<double>(from) / to;
    for (int o = 0; o < to; ++o) {
      const double lo = o * scale;
      const double hi = (o + 1) * scale;
      const int first = static_cast<int>(std::floor(lo));
      const int last = std::min(from - 1, static_cast<int>(std::ceil(hi)) - 1);
      for (int s = first; s <= last; ++s) {
        const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
        if (overlap > 0) taps[o].push_back({s, overlap / scale});
      }
    }
    return taps;
  }
  const double scale = static_cast<double>(from) / to;
  for (int o = 0; o < to; ++o) {
    const double pos = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(from - 1));
    const int i0 = static_cast<int>(std::floor(pos));
    const int i1 = std::min(i0 + 1, from - 1);
    const double frac = pos - i0;
    if (i1 == i0 || frac == 0.0) {
      taps[o] = {{i0, 1.0}};
    } else {
      taps[o] = {{i0, 1.0 - frac}, {i1, frac}};
    }
  }
  return taps;
}

}  // namespace

MapGrid::MapGrid(GridDims dims, double fill) : dims_(dims) {
  check_dims(dims);
  if (!std::isfinite(fill) || fill < 0) throw ValidationError("map values must be finite and nonnegative");
  values_.assign(dims.cells(), fill);
}

MapGrid::MapGrid(GridDims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
  check_dims(dims);
  if (values_.size() != dims.cells()) {
    throw ValidationError("map value count " + std::to_string(values_.size()) +
                          " does not match dims " + std::to_string(dims.cells()));
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0) throw ValidationError("map values must be finite and nonnegative");
  }
}

double MapGrid::sum() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double MapGrid::mean() const noexcept { return values_.empty() ? 0.0 : sum() / values_.size(); }

double MapGrid::stddev() const noexcept {
  if (values_.empty()) return 0.0;
  const double mu = mean();
  double acc = 0.0;
  for (double v : values_) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / values_.size());
}

double MapGrid::min() const noexcept {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double MapGrid::max() const noexcept {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

Tensor MapGrid::to_tensor() const {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(dims_.height), static_cast<std::uint32_t>(dims_.width)};
  t.data.assign(values_.begin(), values_.end());
  return t;
}

MapGrid MapGrid::from_tensor(const Tensor& t) {
  validate_tensor(t);
  if (t.dims.size() != 2 && !(t.dims.size() == 3 && t.dims[2] == 1)) {
    throw ValidationError("map tensor must have dims (height, width)");
  }
  GridDims d{static_cast<int>(t.dims[1]), static_cast<int>(t.dims[0])};
  return MapGrid(d, std::vector<double>(t.data.begin(), t.data.end()));
}

MapGrid resize_map(const MapGrid& map, GridDims target) {
  check_dims(target);
  check_dims(map.dims());
  if (map.dims() == target) return map;

  const auto xt = axis_taps(map.width(), target.width);
  const auto yt = axis_taps(map.height(), target.height);

  // Rows first: (target.width x src.height).
  std::vector<double> tmp(static_cast<std::size_t>(target.width) * map.height(), 0.0);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < target.width; ++x) {
      double acc = 0.0;
      for (const auto& tap : xt[x]) acc += tap.weight * map.at(tap.src, y);
      tmp[static_cast<std::size_t>(y) * target.width + x] = acc;
    }
  }
  const double lo = map.min();
  const double hi = map.max();
  std::vector<double> out(target.cells(), 0.0);
  for (int y = 0; y < target.height; ++y) {
    for (int x = 0; x < target.width; ++x) {
      double acc = 0.0;
      for (const auto& tap : yt[y]) acc += tap.weight * tmp[static_cast<std::size_t>(tap.src) * target.width + x];
      out[static_cast<std::size_t>(y) * target.width + x] = std::clamp(acc, lo, hi);
    }
  }
  return MapGrid(target, std::move(out));
}

}  // namespace vms
