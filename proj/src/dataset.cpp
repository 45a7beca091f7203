#include "ovdprobe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ovdprobe/codec.hpp"
#include "ovdprobe/image_io.hpp"

namespace ovdprobe {
namespace {

using nlohmann::json;

std::string context(const std::string& origin, std::size_t record) {
  return origin + ": record " + std::to_string(record + 1);
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field '" + key + "': " + e.what());
  }
}

BBox parse_bbox(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ParseError(where + ": bbox must be [x_min,y_min,x_max,y_max]");
  BBox b;
  try {
    b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  } catch (const json::exception&) {
    throw ParseError(where + ": bbox entries must be numbers");
  }
  return b;
}

std::filesystem::path resolve(const std::filesystem::path& root, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : root / path;
}

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& root) {
  if (root.empty()) return p.generic_string();
  auto rel = p.lexically_relative(root);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

SceneRecord parse_record(const json& j, const std::filesystem::path& image_root,
                         const std::string& where, LoadOptions options,
                         std::vector<std::string>& warnings) {
  if (!j.is_object()) throw ParseError(where + ": record is not an object");
  SceneRecord s;
  s.scene_id = required<std::string>(j, "scene_id", where);
  s.image_path = resolve(image_root, required<std::string>(j, "image", where));
  s.width = required<int>(j, "width", where);
  s.height = required<int>(j, "height", where);
  s.source_scene_id = j.value("source_scene_id", s.scene_id);
  if (j.contains("location_group") && !j["location_group"].is_null())
    s.location_group = required<int>(j, "location_group", where);

  const json objects = j.value("objects", json::array());
  if (!objects.is_array()) throw ParseError(where + ": 'objects' must be a list");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto ow = where + ", object " + std::to_string(i);
    const json& o = objects[i];
    if (!o.is_object()) throw ParseError(ow + ": not an object");
    if (!o.contains("bbox")) throw ParseError(ow + ": missing field 'bbox'");
    GroundTruthObject obj;
    obj.bbox = parse_bbox(o["bbox"], ow);
    if (o.contains("pixel_area") && !o["pixel_area"].is_null())
      obj.pixel_area = required<std::int64_t>(o, "pixel_area", ow);
    else
      obj.pixel_area = static_cast<std::int64_t>(std::llround(obj.bbox.area()));
    if (o.contains("label") && o["label"].is_string()) obj.class_label = o["label"].get<std::string>();
    s.objects.push_back(std::move(obj));
  }

  validate(s);

  if (!std::filesystem::exists(s.image_path))
    warnings.push_back(s.scene_id + ": image file not found: " + s.image_path.string());

  if (j.contains("road_mask") && j["road_mask"].is_string()) {
    s.road_mask_path = resolve(image_root, j["road_mask"].get<std::string>());
    if (options.load_road_masks) {
      if (!std::filesystem::exists(*s.road_mask_path)) {
        warnings.push_back(s.scene_id + ": road mask not found: " + s.road_mask_path->string());
      } else {
        auto mask = std::make_shared<BinaryRaster>(read_mask(*s.road_mask_path));
        if (mask->width() != s.width || mask->height() != s.height)
          throw ValidationError(s.scene_id + ": road mask is " + std::to_string(mask->width()) + "x" +
                                std::to_string(mask->height()) + ", image is " +
                                std::to_string(s.width) + "x" + std::to_string(s.height));
        s.road_mask = std::move(mask);
      }
    }
  }
  return s;
}

}  // namespace

void validate(const SceneRecord& scene) {
  const auto& id = scene.scene_id;
  if (id.empty()) throw ValidationError("scene with empty scene_id");
  if (scene.width <= 0 || scene.height <= 0)
    throw ValidationError(id + ": image size must be positive");
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    const auto tag = id + ": object " + std::to_string(i);
    if (!o.bbox.valid()) throw ValidationError(tag + ": degenerate bbox");
    if (o.bbox.x_min < 0 || o.bbox.y_min < 0 || o.bbox.x_max > scene.width ||
        o.bbox.y_max > scene.height)
      throw ValidationError(tag + ": bbox exceeds image bounds");
    if (o.pixel_area < 1) throw ValidationError(tag + ": pixel_area must be >= 1");
    if (static_cast<double>(o.pixel_area) > std::ceil(o.bbox.area()))
      throw ValidationError(tag + ": pixel_area exceeds bbox area");
  }
  if (scene.road_mask &&
      (scene.road_mask->width() != scene.width || scene.road_mask->height() != scene.height))
    throw ValidationError(id + ": road mask size differs from image size");
}

LoadedDataset parse_dataset(const std::string& text, const std::filesystem::path& image_root,
                            const std::string& origin, LoadOptions options) {
  LoadedDataset out;
  std::vector<std::pair<json, std::string>> records;

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(origin + ": " + e.what());
    }
    for (std::size_t i = 0; i < doc.size(); ++i) records.emplace_back(doc[i], context(origin, i));
  } else {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        records.emplace_back(json::parse(line), origin + ":" + std::to_string(lineno));
      } catch (const json::parse_error& e) {
        throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  std::set<std::string> seen;
  for (const auto& [record, where] : records) {
    auto scene = parse_record(record, image_root, where, options, out.warnings);
    if (!seen.insert(scene.scene_id).second)
      throw ValidationError(where + ": duplicate scene_id '" + scene.scene_id + "'");
    out.scenes.push_back(std::move(scene));
  }
  std::sort(out.scenes.begin(), out.scenes.end(),
            [](const SceneRecord& a, const SceneRecord& b) { return a.scene_id < b.scene_id; });
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& annotation_path,
                           const std::filesystem::path& image_root, LoadOptions options) {
  std::string text;
  try {
    text = read_text_file(annotation_path);
  } catch (const std::runtime_error& e) {
    throw ParseError(e.what());
  }
  return parse_dataset(text, image_root, annotation_path.string(), options);
}

std::string serialize_dataset(const std::vector<SceneRecord>& scenes,
                              const std::filesystem::path& image_root) {
  std::string out;
  for (const auto& s : scenes) {
    json j;
    j["scene_id"] = s.scene_id;
    j["image"] = relative_to(s.image_path, image_root);
    j["width"] = s.width;
    j["height"] = s.height;
    json objects = json::array();
    for (const auto& o : s.objects) {
      json jo;
      jo["bbox"] = {o.bbox.x_min, o.bbox.y_min, o.bbox.x_max, o.bbox.y_max};
      jo["pixel_area"] = o.pixel_area;
      if (o.class_label) jo["label"] = *o.class_label;
      objects.push_back(std::move(jo));
    }
    j["objects"] = std::move(objects);
    if (s.road_mask_path) j["road_mask"] = relative_to(*s.road_mask_path, image_root);
    if (s.location_group) j["location_group"] = *s.location_group;
    if (!s.source_scene_id.empty() && s.source_scene_id != s.scene_id)
      j["source_scene_id"] = s.source_scene_id;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const std::vector<SceneRecord>& scenes, const std::filesystem::path& path,
                  const std::filesystem::path& image_root) {
  write_text_file(path, serialize_dataset(scenes, image_root));
}

bool is_eligible(const SceneRecord& scene, std::int64_t min_area, bool require_single_object) {
  if (require_single_object)
    return scene.objects.size() == 1 && scene.objects.front().pixel_area >= min_area;
  return std::any_of(scene.objects.begin(), scene.objects.end(),
                     [&](const GroundTruthObject& o) { return o.pixel_area >= min_area; });
}

std::vector<SceneRecord> filter_eligible(const std::vector<SceneRecord>& scenes,
                                         std::int64_t min_area, bool require_single_object) {
  std::vector<SceneRecord> out;
  std::copy_if(scenes.begin(), scenes.end(), std::back_inserter(out),
               [&](const SceneRecord& s) { return is_eligible(s, min_area, require_single_object); });
  return out;
}

}  // namespace ovdprobe
