#pragma once

// Small synthetic street scenes written to disk for pipeline tests.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovdprobe/codec.hpp"
#include "ovdprobe/geometry.hpp"
#include "ovdprobe/image_io.hpp"

namespace scenes {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("ovdprobe_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

struct SceneSpec {
  std::string id;
  int width = 640;
  int height = 480;
  std::vector<ovdprobe::BBox> objects;
};

/// Smooth sky-to-asphalt gradient; compresses well and never contains the stub paint colour.
inline ovdprobe::RgbImage street_image(int w, int h, int variant) {
  ovdprobe::RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto v = static_cast<std::uint8_t>(60 + (y * 120) / std::max(1, h - 1));
      img.set(x, y, {v, static_cast<std::uint8_t>(v + (variant * 7) % 30), static_cast<std::uint8_t>(60 + (x * 60) / std::max(1, w - 1))});
    }
  return img;
}

/// Road covers the lower part of the image, narrowing towards the horizon.
inline ovdprobe::BinaryRaster road_mask(int w, int h) {
  ovdprobe::BinaryRaster m(w, h);
  const int horizon = h * 2 / 5;
  for (int y = horizon; y < h; ++y) {
    const double t = double(y - horizon) / std::max(1, h - horizon);
    const int half = static_cast<int>(w * (0.15 + 0.4 * t));
    for (int x = std::max(0, w / 2 - half); x < std::min(w, w / 2 + half); ++x) m.set(x, y);
  }
  return m;
}

/// Writes images/<id>.png, masks/<id>.png and annotations.jsonl; returns the annotation path.
inline std::filesystem::path write_fixture(const std::filesystem::path& dir, const std::vector<SceneSpec>& specs,
                                           bool with_masks = true) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  std::string lines;
  int variant = 0;
  for (const auto& s : specs) {
    ovdprobe::write_png(street_image(s.width, s.height, variant++), dir / "images" / (s.id + ".png"));
    nlohmann::json j = {{"scene_id", s.id}, {"image", "images/" + s.id + ".png"}, {"width", s.width}, {"height", s.height}};
    j["objects"] = nlohmann::json::array();
    for (const auto& b : s.objects) j["objects"].push_back({{"bbox", {b.x_min, b.y_min, b.x_max, b.y_max}}});
    if (with_masks) {
      const auto m = road_mask(s.width, s.height);
      const auto png = ovdprobe::encode_mask_png(m);
      ovdprobe::write_text_file(dir / "masks" / (s.id + ".png"), std::string(png.begin(), png.end()));
      j["road_mask"] = "masks/" + s.id + ".png";
    }
    lines += j.dump() + "\n";
  }
  const auto path = dir / "annotations.jsonl";
  ovdprobe::write_text_file(path, lines);
  return path;
}

/// Five 640x480 scenes with one on-road object each (>= 3000 px).
inline std::vector<SceneSpec> five_scenes() {
  std::vector<SceneSpec> out;
  for (int i = 0; i < 5; ++i) {
    const double x = 200 + 40 * i, y = 300 + 10 * i;
    out.push_back({"scene_" + std::to_string(i), 640, 480, {{x, y, x + 70 + 5 * i, y + 90}}});
  }
  return out;
}

}  // namespace scenes
