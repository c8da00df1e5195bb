#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vms {

// supra-ordinate / middle / leaf labels, e.g. Indoor / Private / kitchen.
struct CategoryPath {
  std::string supra;
  std::string mid;
  std::string leaf;

  auto operator<=>(const CategoryPath&) const = default;
  std::string str() const { return supra + "/" + mid + "/" + leaf; }
};

struct CategoryNode {
  std::string label;
  std::vector<CategoryNode> children;
};

// Three-level category hierarchy. Leaves are reported in depth-first order,
// which is also the order the scheduler walks them.
class CategoryTree {
 public:
  CategoryTree() = default;
  explicit CategoryTree(std::vector<CategoryNode> supra);

  // Indoor{Private{kitchen, living_room}, Public{big, small}},
  // Outdoor{Man-made{amusement, work_home}, Natural{pastoral, isolated}}.
  static CategoryTree vischema();

  const std::vector<CategoryNode>& roots() const noexcept { return roots_; }
  std::vector<CategoryPath> leaves() const;
  bool contains(const CategoryPath& path) const;

 private:
  std::vector<CategoryNode> roots_;
};

struct ImageRecord {
  std::string id;
  CategoryPath category;
  int width = 0;
  int height = 0;
  // Attachments, stored as absolute paths after loading.
  std::optional<std::filesystem::path> image_file;
  std::optional<std::filesystem::path> fixation_map;
  std::optional<std::filesystem::path> saliency_map;
  std::map<std::string, std::filesystem::path> descriptors;
  std::map<std::string, std::filesystem::path> vms_maps;
};

struct DatasetManifest {
  CategoryTree categories;
  std::vector<ImageRecord> images;
  std::filesystem::path base_dir;

  const ImageRecord* find(std::string_view id) const;
  std::vector<const ImageRecord*> images_in_leaf(const CategoryPath& leaf) const;
};

struct ManifestOptions {
  // Open every referenced attachment and check it parses with positive dims.
  bool check_files = true;
};

// JSON document: {"categories": {...}, "images": [{"id", "category":
// [supra, mid, leaf], "width", "height", "image", "fixation", "saliency",
// "descriptors": {name: path}, "vms": {kind: path}}]}. Relative paths are
// resolved against `base_dir`. A missing "categories" member selects the
// default VISCHEMA tree.
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                               const ManifestOptions& options = {});
DatasetManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

// Paths are written relative to `base_dir` when they live beneath it.
std::string serialize_manifest(const DatasetManifest& manifest,
                               const std::filesystem::path& base_dir);

}  // namespace vms
