#include "ovdprobe/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace ovdprobe {

BBox box_around(double cx, double cy, double width, double height) {
  return {cx - 0.5 * width, cy - 0.5 * height, cx + 0.5 * width, cy + 0.5 * height};
}

void require_valid(const BBox& box, const std::string& what) {
  if (!box.valid() || !std::isfinite(box.area())) {
    throw std::invalid_argument(what + ": invalid bbox [" + std::to_string(box.x_min) + "," +
                                std::to_string(box.y_min) + "," + std::to_string(box.x_max) +
                                "," + std::to_string(box.y_max) + "]");
  }
}

PixelRect intersect(const PixelRect& a, const PixelRect& b) {
  PixelRect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
              std::min(a.y1, b.y1)};
  if (r.empty()) return {};
  return r;
}

PixelRect covered_pixels(const BBox& box, int width, int height) {
  // pixel x is covered iff x + 0.5 lies in [x_min, x_max)
  const auto lo = [](double v) { return static_cast<int>(std::ceil(v - 0.5)); };
  PixelRect r{lo(box.x_min), lo(box.y_min), lo(box.x_max), lo(box.y_max)};
  return intersect(r, {0, 0, width, height});
}

BinaryRaster::BinaryRaster(int width, int height, bool fill)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            fill ? 1 : 0) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative raster size");
}

std::int64_t BinaryRaster::count() const {
  return std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

}  // namespace ovdprobe
