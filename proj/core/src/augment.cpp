#include "vms/augment.hpp"

#include "vms/errors.hpp"

namespace vms {
namespace {

struct Crop {
  int x0, y0, x1, y1;
};

Crop crop_for(int w, int h, const AugmentEntry& e) {
  if (e.transform == Transform::Identity || e.transform == Transform::Mirror) return {0, 0, w, h};
  if (w < 2 || h < 2) throw ValidationError("image too small to split into quarters");
  const int mx = w / 2;
  const int my = h / 2;
  switch (e.quadrant) {
    case Quadrant::TopLeft: return {0, 0, mx, my};
    case Quadrant::TopRight: return {mx, 0, w, my};
    case Quadrant::BottomLeft: return {0, my, mx, h};
    case Quadrant::BottomRight: return {mx, my, w, h};
  }
  return {0, 0, w, h};
}

bool mirrored(const AugmentEntry& e) {
  return e.transform == Transform::Mirror || e.transform == Transform::QuarterMirror;
}

}  // namespace

std::string_view to_string(Transform t) noexcept {
  switch (t) {
    case Transform::Identity: return "id";
    case Transform::Mirror: return "mirror";
    case Transform::Quarter: return "q";
    case Transform::QuarterMirror: return "qm";
  }
  return "?";
}

std::string_view to_string(Quadrant q) noexcept {
  switch (q) {
    case Quadrant::TopLeft: return "tl";
    case Quadrant::TopRight: return "tr";
    case Quadrant::BottomLeft: return "bl";
    case Quadrant::BottomRight: return "br";
  }
  return "?";
}

std::string AugmentEntry::variant_id() const {
  std::string s = source_id + "__" + std::string(to_string(transform));
  if (transform == Transform::Quarter || transform == Transform::QuarterMirror) {
    s += "_" + std::string(to_string(quadrant));
  }
  return s;
}

std::vector<AugmentEntry> augment_plan(std::span<const std::string> image_ids) {
  if (image_ids.empty()) throw ValidationError("augment_plan: no images");
  constexpr Quadrant quads[] = {Quadrant::TopLeft, Quadrant::TopRight, Quadrant::BottomLeft, Quadrant::BottomRight};
  std::vector<AugmentEntry> plan;
  plan.reserve(image_ids.size() * kVariantsPerImage);
  for (const auto& id : image_ids) {
    plan.push_back({id, Transform::Identity, Quadrant::TopLeft});
    plan.push_back({id, Transform::Mirror, Quadrant::TopLeft});
    for (Quadrant q : quads) plan.push_back({id, Transform::Quarter, q});
    for (Quadrant q : quads) plan.push_back({id, Transform::QuarterMirror, q});
  }
  return plan;
}

MapGrid apply_transform(const MapGrid& map, const AugmentEntry& entry) {
  const Crop c = crop_for(map.width(), map.height(), entry);
  const int w = c.x1 - c.x0;
  const int h = c.y1 - c.y0;
  MapGrid out(GridDims{w, h});
  const bool flip = mirrored(entry);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(flip ? w - 1 - x : x, y) = map.at(c.x0 + x, c.y0 + y);
  }
  return out;
}

RgbImage apply_transform(const RgbImage& image, const AugmentEntry& entry) {
  if (image.empty()) throw ValidationError("apply_transform: empty image");
  const Crop c = crop_for(image.width, image.height, entry);
  RgbImage out(c.x1 - c.x0, c.y1 - c.y0);
  const bool flip = mirrored(entry);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const int dx = flip ? out.width - 1 - x : x;
      for (int ch = 0; ch < 3; ++ch) out.at(dx, y, ch) = image.at(c.x0 + x, c.y0 + y, ch);
    }
  }
  return out;
}

ReconTarget make_target(const MapGrid& vms, const AugmentEntry& entry, GridDims grid) {
  ReconTarget t{resize_map(apply_transform(vms, entry), grid), false};
  t.empty = t.map.max() <= 0.0;
  return t;
}

}  // namespace vms
