#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vms/tensor_io.hpp"

namespace vms {

struct GridDims {
  int width = 0;
  int height = 0;

  std::size_t cells() const noexcept { return static_cast<std::size_t>(width) * height; }
  bool operator==(const GridDims&) const = default;
};

inline constexpr GridDims kAnalysisGrid{100, 100};
inline constexpr GridDims kReconGrid{20, 20};

// Nonnegative 2-D map (VMS, saliency or fixation density), row-major with
// x fastest. Construction rejects non-finite and negative values.
class MapGrid {
 public:
  MapGrid() = default;
  MapGrid(GridDims dims, double fill = 0.0);
  MapGrid(GridDims dims, std::vector<double> values);

  GridDims dims() const noexcept { return dims_; }
  int width() const noexcept { return dims_.width; }
  int height() const noexcept { return dims_.height; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(int x, int y) const { return values_[index(x, y)]; }
  double& at(int x, int y) { return values_[index(x, y)]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double sum() const noexcept;
  double mean() const noexcept;
  // Population standard deviation (divides by n).
  double stddev() const noexcept;
  double min() const noexcept;
  double max() const noexcept;

  // Tensor with dims (height, width).
  Tensor to_tensor() const;
  static MapGrid from_tensor(const Tensor& t);

  bool operator==(const MapGrid&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * dims_.width + x;
  }

  GridDims dims_{};
  std::vector<double> values_;
};

// Area-average when shrinking an axis, bilinear (cell-centre aligned, edge
// clamped) when enlarging it. Axes are handled independently, so the output
// stays within [min, max] of the input and the global mean is preserved
// whenever both axes shrink.
MapGrid resize_map(const MapGrid& map, GridDims target);

}  // namespace vms
