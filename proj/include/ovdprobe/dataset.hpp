#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovdprobe/geometry.hpp"

namespace ovdprobe {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GroundTruthObject {
  BBox bbox;
  /// Annotated object pixels; bbox area when the source has no instance mask.
  std::int64_t pixel_area = 0;
  std::optional<std::string> class_label;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct SceneRecord {
  std::string scene_id;
  std::filesystem::path image_path;
  int width = 0;
  int height = 0;
  std::vector<GroundTruthObject> objects;
  std::shared_ptr<const BinaryRaster> road_mask;
  std::optional<std::filesystem::path> road_mask_path;
  std::optional<int> location_group;
  /// Scene a synthetic image was derived from; equals scene_id for real images.
  std::string source_scene_id;
};

struct LoadedDataset {
  std::vector<SceneRecord> scenes;
  std::vector<std::string> warnings;
};

struct LoadOptions {
  bool load_road_masks = true;
};

/// Reads an annotation file (JSON lines, or a single JSON array of the same records).
/// Relative image and mask paths resolve against `image_root`.
LoadedDataset load_dataset(const std::filesystem::path& annotation_path,
                           const std::filesystem::path& image_root, LoadOptions options = {});

/// Same as load_dataset but from in-memory text; `origin` names the source in errors.
LoadedDataset parse_dataset(const std::string& text, const std::filesystem::path& image_root,
                            const std::string& origin = "<memory>", LoadOptions options = {});

/// Writes scenes as JSON lines. Paths under `image_root` are written relative to it.
void save_dataset(const std::vector<SceneRecord>& scenes, const std::filesystem::path& path,
                  const std::filesystem::path& image_root);
std::string serialize_dataset(const std::vector<SceneRecord>& scenes,
                              const std::filesystem::path& image_root);

/// Throws ValidationError naming the scene when an invariant is broken.
void validate(const SceneRecord& scene);

inline constexpr std::int64_t kMinObjectPixels = 3000;

bool is_eligible(const SceneRecord& scene, std::int64_t min_area = kMinObjectPixels,
                 bool require_single_object = true);

/// Keeps scenes with exactly one object (when required) of at least `min_area` pixels.
std::vector<SceneRecord> filter_eligible(const std::vector<SceneRecord>& scenes,
                                         std::int64_t min_area = kMinObjectPixels,
                                         bool require_single_object = true);

}  // namespace ovdprobe
