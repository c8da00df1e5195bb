#include "vms/vms_builder.hpp"

#include <algorithm>
#include <cmath>

#include "vms/errors.hpp"

namespace vms {
namespace {

bool kind_accepts(VmsKind kind, TrialRole role) {
  switch (kind) {
    case VmsKind::True: return role == TrialRole::Repeat;
    case VmsKind::False: return role == TrialRole::Filler;
    case VmsKind::Combined: return true;
  }
  return false;
}

// Columns (or rows) whose centre lies in [lo, hi).
std::pair<int, int> covered_range(double lo, double hi, int cells) {
  int first = cells;
  int last = -1;
  for (int c = 0; c < cells; ++c) {
    const double centre = (c + 0.5) / cells;
    if (lo <= centre && centre < hi) {
      first = std::min(first, c);
      last = c;
    }
  }
  return {first, last};
}

int snap_cell(double lo, double hi, int cells) {
  const double centre = 0.5 * (lo + hi);
  return std::clamp(static_cast<int>(std::floor(centre * cells)), 0, cells - 1);
}

// Adds one participant's selections into `acc` (per-participant union or
// sum). `scratch` must hold grid.cells() zeros on entry and is left zeroed.
void add_participant(std::span<const RectSelection> rects, GridDims grid, const RasterizeOptions& opt,
                     std::vector<double>& acc, std::vector<std::uint8_t>& scratch, bool throw_on_degenerate) {
  std::vector<std::size_t> touched;
  for (const auto& r : rects) {
    auto [x_first, x_last] = covered_range(r.x0, r.x1, grid.width);
    auto [y_first, y_last] = covered_range(r.y0, r.y1, grid.height);
    if (x_first > x_last || y_first > y_last) {
      if (!opt.snap_degenerate) {
        if (throw_on_degenerate) throw ValidationError("degenerate selection: rectangle covers no cell centre");
        continue;
      }
      x_first = x_last = snap_cell(r.x0, r.x1, grid.width);
      y_first = y_last = snap_cell(r.y0, r.y1, grid.height);
    }
    for (int y = y_first; y <= y_last; ++y) {
      for (int x = x_first; x <= x_last; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * grid.width + x;
        if (opt.overlap == OverlapPolicy::Sum) {
          acc[i] += 1.0;
        } else if (!scratch[i]) {
          scratch[i] = 1;
          touched.push_back(i);
        }
      }
    }
  }
  for (std::size_t i : touched) {
    acc[i] += 1.0;
    scratch[i] = 0;
  }
}

bool remembered(int confidence, int threshold, bool inclusive) {
  return inclusive ? confidence >= threshold : confidence > threshold;
}

}  // namespace

std::string_view to_string(VmsKind kind) noexcept {
  switch (kind) {
    case VmsKind::True: return "true";
    case VmsKind::False: return "false";
    case VmsKind::Combined: return "combined";
  }
  return "?";
}

VmsKind parse_vms_kind(std::string_view text) {
  if (text == "true") return VmsKind::True;
  if (text == "false") return VmsKind::False;
  if (text == "combined") return VmsKind::Combined;
  throw ValidationError("unknown VMS kind '" + std::string(text) + "' (expected true|false|combined)");
}

MapGrid rasterize_selections(std::span<const RectSelection> selections, GridDims grid,
                             const RasterizeOptions& options) {
  if (grid.width <= 0 || grid.height <= 0) throw ValidationError("grid dims must be positive");
  if (selections.empty()) throw ValidationError("rasterize_selections needs at least one selection");
  for (const auto& r : selections) {
    if (!(r.x0 < r.x1) || !(r.y0 < r.y1) || r.x0 < 0 || r.y0 < 0 || r.x1 > 1 || r.y1 > 1) {
      throw ValidationError("invalid selection rectangle");
    }
  }
  std::vector<double> acc(grid.cells(), 0.0);
  std::vector<std::uint8_t> scratch(grid.cells(), 0);
  add_participant(selections, grid, options, acc, scratch, true);
  return MapGrid(grid, std::move(acc));
}

VmsIndex::VmsIndex(std::span<const SessionLog> logs, VmsOptions options)
    : options_(options), participants_(logs.size()) {
  if (options.threshold < kSelectionGate || options.threshold > 100) {
    throw ValidationError("VMS threshold must lie in [30, 100]");
  }
  if (options.grid.width <= 0 || options.grid.height <= 0) throw ValidationError("grid dims must be positive");
  for (std::size_t p = 0; p < logs.size(); ++p) {
    for (const auto& t : logs[p].test_trials) {
      if (t.selections.empty() || !remembered(t.confidence, options.threshold, options.inclusive)) continue;
      by_image_[t.image_id].push_back({p, t.role, t.selections});
    }
  }
}

VmsAccumulation VmsIndex::accumulate(std::string_view image_id, VmsKind kind,
                                     std::span<const std::uint8_t> membership) const {
  if (!membership.empty() && membership.size() != participants_) {
    throw std::invalid_argument("membership mask size does not match participant count");
  }
  VmsAccumulation out{options_.grid, std::vector<double>(options_.grid.cells(), 0.0), 0};
  auto it = by_image_.find(std::string(image_id));
  if (it == by_image_.end()) return out;

  std::vector<std::uint8_t> scratch(options_.grid.cells(), 0);
  const RasterizeOptions ropt{options_.overlap, true};
  for (const auto& c : it->second) {
    if (!kind_accepts(kind, c.role)) continue;
    if (!membership.empty() && !membership[c.participant]) continue;
    add_participant(c.rects, options_.grid, ropt, out.numerator, scratch, false);
    ++out.contributors;
  }
  return out;
}

std::optional<MapGrid> VmsIndex::build(std::string_view image_id, VmsKind kind,
                                       std::span<const std::uint8_t> membership) const {
  auto acc = accumulate(image_id, kind, membership);
  if (acc.contributors == 0) return std::nullopt;
  const double inv = 1.0 / acc.contributors;
  for (double& v : acc.numerator) v *= inv;
  return MapGrid(acc.dims, std::move(acc.numerator));
}

std::vector<std::string> VmsIndex::image_ids() const {
  std::vector<std::string> ids;
  ids.reserve(by_image_.size());
  for (const auto& [id, _] : by_image_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

VmsAccumulation accumulate_vms(std::span<const SessionLog> logs, std::string_view image_id, VmsKind kind,
                               const VmsOptions& options) {
  return VmsIndex(logs, options).accumulate(image_id, kind);
}

MapGrid build_vms(std::span<const SessionLog> logs, std::string_view image_id, VmsKind kind,
                  const VmsOptions& options) {
  auto map = VmsIndex(logs, options).build(image_id, kind);
  if (!map) {
    throw EmptyVmsError("empty VMS: no participant contributed " + std::string(to_string(kind)) +
                        " selections for image " + std::string(image_id));
  }
  return *std::move(map);
}

}  // namespace vms
