#include "vms/manifest.hpp"

#include <unordered_set>

#include "json.hpp"
#include "vms/errors.hpp"
#include "vms/image.hpp"
#include "vms/tensor_io.hpp"

namespace vms {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

CategoryNode parse_node(const json& j, const std::string& field, std::vector<FieldError>& errors) {
  CategoryNode node;
  if (!j.is_object() || !j.contains("label") || !j["label"].is_string()) {
    errors.push_back({field, "category node needs a string label"});
    return node;
  }
  node.label = j["label"].get<std::string>();
  if (j.contains("children")) {
    const auto& kids = j["children"];
    if (!kids.is_array()) {
      errors.push_back({field + ".children", "expected an array"});
    } else {
      for (std::size_t i = 0; i < kids.size(); ++i) {
        node.children.push_back(parse_node(kids[i], field + ".children[" + std::to_string(i) + "]", errors));
      }
    }
  }
  return node;
}

json node_to_json(const CategoryNode& node) {
  json j = {{"label", node.label}};
  if (!node.children.empty()) {
    json kids = json::array();
    for (const auto& c : node.children) kids.push_back(node_to_json(c));
    j["children"] = std::move(kids);
  }
  return j;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  auto rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

void check_map_file(const fs::path& path, const std::string& field, std::vector<FieldError>& errors) {
  if (!fs::exists(path)) {
    errors.push_back({field, "referenced file does not exist: " + path.string()});
    return;
  }
  try {
    auto t = read_tensor(path);
    validate_tensor(t);
  } catch (const Error& e) {
    errors.push_back({field, std::string("referenced file does not parse: ") + e.what()});
  }
}

}  // namespace

CategoryTree::CategoryTree(std::vector<CategoryNode> supra) : roots_(std::move(supra)) {}

CategoryTree CategoryTree::vischema() {
  auto leaf = [](std::string l) { return CategoryNode{std::move(l), {}}; };
  return CategoryTree({
      CategoryNode{"Indoor",
                   {CategoryNode{"Private", {leaf("kitchen"), leaf("living_room")}},
                    CategoryNode{"Public", {leaf("big"), leaf("small")}}}},
      CategoryNode{"Outdoor",
                   {CategoryNode{"Man-made", {leaf("amusement"), leaf("work_home")}},
                    CategoryNode{"Natural", {leaf("pastoral"), leaf("isolated")}}}},
  });
}

std::vector<CategoryPath> CategoryTree::leaves() const {
  std::vector<CategoryPath> out;
  for (const auto& s : roots_) {
    for (const auto& m : s.children) {
      for (const auto& l : m.children) out.push_back({s.label, m.label, l.label});
    }
  }
  return out;
}

bool CategoryTree::contains(const CategoryPath& path) const {
  for (const auto& s : roots_) {
    if (s.label != path.supra) continue;
    for (const auto& m : s.children) {
      if (m.label != path.mid) continue;
      for (const auto& l : m.children) {
        if (l.label == path.leaf) return true;
      }
    }
  }
  return false;
}

const ImageRecord* DatasetManifest::find(std::string_view id) const {
  for (const auto& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

std::vector<const ImageRecord*> DatasetManifest::images_in_leaf(const CategoryPath& leaf) const {
  std::vector<const ImageRecord*> out;
  for (const auto& img : images) {
    if (img.category == leaf) out.push_back(&img);
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view text, const fs::path& base_dir,
                               const ManifestOptions& options) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("manifest must be a JSON object");

  std::vector<FieldError> errors;
  DatasetManifest m;
  m.base_dir = base_dir;

  if (doc.contains("categories")) {
    const auto& c = doc["categories"];
    std::vector<CategoryNode> roots;
    const json& list = c.is_object() && c.contains("children") ? c["children"] : c;
    if (!list.is_array()) {
      errors.push_back({"categories", "expected a node with children or an array of nodes"});
    } else {
      for (std::size_t i = 0; i < list.size(); ++i) {
        roots.push_back(parse_node(list[i], "categories[" + std::to_string(i) + "]", errors));
      }
    }
    m.categories = CategoryTree(std::move(roots));
  } else {
    m.categories = CategoryTree::vischema();
  }

  if (!doc.contains("images") || !doc["images"].is_array()) {
    errors.push_back({"images", "expected an array"});
    throw ValidationError(std::move(errors));
  }

  auto resolve = [&](const json& v) { return (base_dir / v.get<std::string>()).lexically_normal(); };

  std::unordered_set<std::string> seen;
  const auto& imgs = doc["images"];
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const auto& j = imgs[i];
    const std::string field = "images[" + std::to_string(i) + "]";
    if (!j.is_object()) {
      errors.push_back({field, "expected an object"});
      continue;
    }
    ImageRecord rec;
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
      errors.push_back({field + ".id", "missing image id"});
    } else {
      rec.id = j["id"].get<std::string>();
      if (!seen.insert(rec.id).second) errors.push_back({field + ".id", "duplicate image id " + rec.id});
    }
    const auto& cat = j.contains("category") ? j["category"] : json();
    if (!cat.is_array() || cat.size() != 3 || !cat[0].is_string() || !cat[1].is_string() ||
        !cat[2].is_string()) {
      errors.push_back({field + ".category", "expected [supra, mid, leaf]"});
    } else {
      rec.category = {cat[0].get<std::string>(), cat[1].get<std::string>(), cat[2].get<std::string>()};
      if (!m.categories.contains(rec.category)) {
        errors.push_back({field + ".category", "category " + rec.category.str() + " is not in the tree"});
      }
    }
    for (const char* key : {"width", "height"}) {
      if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() <= 0) {
        errors.push_back({field + "." + key, "must be a positive integer"});
      }
    }
    if (j.contains("width") && j["width"].is_number_integer()) rec.width = j["width"].get<int>();
    if (j.contains("height") && j["height"].is_number_integer()) rec.height = j["height"].get<int>();

    auto optional_path = [&](const char* key) -> std::optional<fs::path> {
      if (!j.contains(key)) return std::nullopt;
      if (!j[key].is_string()) {
        errors.push_back({field + "." + key, "expected a path string"});
        return std::nullopt;
      }
      return resolve(j[key]);
    };
    rec.image_file = optional_path("image");
    rec.fixation_map = optional_path("fixation");
    rec.saliency_map = optional_path("saliency");
    for (const char* group : {"descriptors", "vms"}) {
      if (!j.contains(group)) continue;
      if (!j[group].is_object()) {
        errors.push_back({field + "." + group, "expected an object of name -> path"});
        continue;
      }
      auto& target = std::string_view(group) == "vms" ? rec.vms_maps : rec.descriptors;
      for (const auto& [name, value] : j[group].items()) {
        if (!value.is_string()) {
          errors.push_back({field + "." + group + "." + name, "expected a path string"});
          continue;
        }
        target[name] = resolve(value);
      }
    }

    if (options.check_files) {
      if (rec.image_file) {
        if (!fs::exists(*rec.image_file)) {
          errors.push_back({field + ".image", "referenced file does not exist: " + rec.image_file->string()});
        } else {
          try {
            (void)read_image(*rec.image_file);
          } catch (const Error& e) {
            errors.push_back({field + ".image", std::string("referenced file does not parse: ") + e.what()});
          }
        }
      }
      if (rec.fixation_map) check_map_file(*rec.fixation_map, field + ".fixation", errors);
      if (rec.saliency_map) check_map_file(*rec.saliency_map, field + ".saliency", errors);
      for (const auto& [name, p] : rec.descriptors) check_map_file(p, field + ".descriptors." + name, errors);
      for (const auto& [name, p] : rec.vms_maps) check_map_file(p, field + ".vms." + name, errors);
    }
    m.images.push_back(std::move(rec));
  }

  if (!errors.empty()) throw ValidationError(std::move(errors));
  return m;
}

DatasetManifest load_manifest(const fs::path& path, const ManifestOptions& options) {
  return parse_manifest(read_file(path), fs::absolute(path).parent_path(), options);
}

std::string serialize_manifest(const DatasetManifest& manifest, const fs::path& base_dir) {
  json cats = json::array();
  for (const auto& r : manifest.categories.roots()) cats.push_back(node_to_json(r));
  json imgs = json::array();
  for (const auto& img : manifest.images) {
    json j = {{"id", img.id},
              {"category", {img.category.supra, img.category.mid, img.category.leaf}},
              {"width", img.width},
              {"height", img.height}};
    if (img.image_file) j["image"] = relative_to(*img.image_file, base_dir);
    if (img.fixation_map) j["fixation"] = relative_to(*img.fixation_map, base_dir);
    if (img.saliency_map) j["saliency"] = relative_to(*img.saliency_map, base_dir);
    if (!img.descriptors.empty()) {
      json d = json::object();
      for (const auto& [k, v] : img.descriptors) d[k] = relative_to(v, base_dir);
      j["descriptors"] = std::move(d);
    }
    if (!img.vms_maps.empty()) {
      json d = json::object();
      for (const auto& [k, v] : img.vms_maps) d[k] = relative_to(v, base_dir);
      j["vms"] = std::move(d);
    }
    imgs.push_back(std::move(j));
  }
  json doc = {{"categories", {{"label", "root"}, {"children", std::move(cats)}}},
              {"images", std::move(imgs)}};
  return doc.dump(2) + "\n";
}

}  // namespace vms
