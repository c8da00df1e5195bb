#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vms/image.hpp"
#include "vms/map_grid.hpp"

namespace vms {

enum class Transform { Identity, Mirror, Quarter, QuarterMirror };
enum class Quadrant { TopLeft, TopRight, BottomLeft, BottomRight };

inline constexpr int kVariantsPerImage = 10;

struct AugmentEntry {
  std::string source_id;
  Transform transform = Transform::Identity;
  Quadrant quadrant = Quadrant::TopLeft;  // ignored unless a quarter

  // e.g. "img_001__mirror", "img_001__q_tl", "img_001__qm_br".
  std::string variant_id() const;
  bool operator==(const AugmentEntry&) const = default;
};

std::string_view to_string(Transform t) noexcept;
std::string_view to_string(Quadrant q) noexcept;

// Per image, in this order: identity, mirror, the four quarters (TL, TR,
// BL, BR) and the four mirrored quarters.
std::vector<AugmentEntry> augment_plan(std::span<const std::string> image_ids);

// Quarters split at floor(w/2), floor(h/2); mirrors flip left-right.
MapGrid apply_transform(const MapGrid& map, const AugmentEntry& entry);
RgbImage apply_transform(const RgbImage& image, const AugmentEntry& entry);

struct ReconTarget {
  MapGrid map;
  // The transformed map carries no mass (e.g. a quarter the VMS misses).
  bool empty = false;
};

// Transforms the full-resolution VMS, then resizes to `grid`. Values are
// left as cropped (no renormalization).
ReconTarget make_target(const MapGrid& vms, const AugmentEntry& entry, GridDims grid = kReconGrid);

}  // namespace vms
