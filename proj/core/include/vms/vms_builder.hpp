#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vms/map_grid.hpp"
#include "vms/session.hpp"

namespace vms {

enum class VmsKind { True, False, Combined };

std::string_view to_string(VmsKind kind) noexcept;
VmsKind parse_vms_kind(std::string_view text);

// How overlapping rectangles from one participant combine.
enum class OverlapPolicy {
  Union,  // binary mask per participant
  Sum,    // each rectangle counts separately
};

struct RasterizeOptions {
  OverlapPolicy overlap = OverlapPolicy::Union;
  // A rectangle that contains no cell centre marks the cell holding its own
  // centre instead of raising "degenerate selection".
  bool snap_degenerate = false;
};

// Cell (x, y) is inside a rectangle when its centre ((x+.5)/W, (y+.5)/H)
// satisfies x0 <= cx < x1 and y0 <= cy < y1.
MapGrid rasterize_selections(std::span<const RectSelection> selections, GridDims grid,
                             const RasterizeOptions& options = {});

struct VmsOptions {
  int threshold = kDefaultAnalysisThreshold;
  GridDims grid = kAnalysisGrid;
  OverlapPolicy overlap = OverlapPolicy::Union;
  // Count a rating equal to the threshold as remembered.
  bool inclusive = true;
};

struct VmsAccumulation {
  GridDims dims;
  std::vector<double> numerator;
  int contributors = 0;
};

// Per-image index of the trials that can contribute selections, built once
// so that split-half analyses can rebuild maps for participant subsets.
// Participant k is logs[k].
class VmsIndex {
 public:
  VmsIndex(std::span<const SessionLog> logs, VmsOptions options);

  const VmsOptions& options() const noexcept { return options_; }
  std::size_t participant_count() const noexcept { return participants_; }

  // `membership[k] != 0` selects participant k; an empty span selects all.
  VmsAccumulation accumulate(std::string_view image_id, VmsKind kind,
                             std::span<const std::uint8_t> membership = {}) const;

  // nullopt when no participant contributed.
  std::optional<MapGrid> build(std::string_view image_id, VmsKind kind,
                               std::span<const std::uint8_t> membership = {}) const;

  // Images with at least one contributing trial of any role, sorted.
  std::vector<std::string> image_ids() const;

 private:
  struct Contribution {
    std::size_t participant;
    TrialRole role;
    std::vector<RectSelection> rects;
  };

  VmsOptions options_;
  std::size_t participants_ = 0;
  std::unordered_map<std::string, std::vector<Contribution>> by_image_;
};

VmsAccumulation accumulate_vms(std::span<const SessionLog> logs, std::string_view image_id,
                               VmsKind kind, const VmsOptions& options = {});

// Fraction of contributing participants who selected each cell. A
// contributor is a participant whose trial for this image has the role
// matching `kind`, a rating at/above the threshold and at least one
// selection. Throws EmptyVmsError when nobody contributed.
MapGrid build_vms(std::span<const SessionLog> logs, std::string_view image_id, VmsKind kind,
                  const VmsOptions& options = {});

}  // namespace vms
