#include "ovdprobe/placement.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>
#include <opencv2/imgproc.hpp>

#include "ovdprobe/random.hpp"

namespace ovdprobe {

bool in_ellipse(const BBox& box, int x, int y) {
  const double a = 0.5 * box.width();
  const double b = 0.5 * box.height();
  const double dx = (x + 0.5 - box.center_x()) / a;
  const double dy = (y + 0.5 - box.center_y()) / b;
  return dx * dx + dy * dy <= 1.0;
}

OvalMask oval_mask(const BBox& bbox, const CropFrame& frame) {
  require_valid(bbox, "oval_mask");
  if (bbox.width() < 2.0 || bbox.height() < 2.0)
    throw std::invalid_argument("oval_mask: bbox side below 2 px");
  if (!(bbox.x_max > frame.rect.x0 && bbox.x_min < frame.rect.x1 && bbox.y_max > frame.rect.y0 &&
        bbox.y_min < frame.rect.y1))
    throw std::invalid_argument("oval_mask: bbox does not intersect the frame");

  OvalMask out{bbox, BinaryRaster(frame.rect.width(), frame.rect.height())};
  const PixelRect span = intersect(covered_pixels(bbox, frame.rect.x1, frame.rect.y1), frame.rect);
  for (int y = span.y0; y < span.y1; ++y)
    for (int x = span.x0; x < span.x1; ++x)
      if (in_ellipse(bbox, x, y)) out.raster.set(x - frame.rect.x0, y - frame.rect.y0);
  return out;
}

BinaryRaster rect_mask(const BBox& bbox, const CropFrame& frame) {
  BinaryRaster out(frame.rect.width(), frame.rect.height());
  const PixelRect span = intersect(covered_pixels(bbox, frame.rect.x1, frame.rect.y1), frame.rect);
  for (int y = span.y0; y < span.y1; ++y)
    for (int x = span.x0; x < span.x1; ++x) out.set(x - frame.rect.x0, y - frame.rect.y0);
  return out;
}

CropFrame crop_frame_around(const BBox& bbox, int image_w, int image_h, int side) {
  if (side <= 0) throw std::invalid_argument("crop_frame_around: side must be positive");
  if (image_w < side || image_h < side)
    throw std::invalid_argument("crop_frame_around: image " + std::to_string(image_w) + "x" +
                                std::to_string(image_h) + " smaller than frame side " +
                                std::to_string(side));
  const auto origin = [side](double center, int extent) {
    const int start = static_cast<int>(std::floor(center - 0.5 * side + 0.5));
    return std::clamp(start, 0, extent - side);
  };
  const int x0 = origin(bbox.center_x(), image_w);
  const int y0 = origin(bbox.center_y(), image_h);
  return {{x0, y0, x0 + side, y0 + side}, kGeneratorSide};
}

int crop_tier(const BBox& bbox) {
  const double side = std::min(bbox.width(), bbox.height());
  if (side >= 256.0) return 512;
  if (side >= 128.0) return 256;
  return 128;
}

double drivable_overlap(const BBox& bbox, const BinaryRaster& road_mask) {
  const double area = bbox.area();
  if (!(area > 0.0)) return 0.0;
  const PixelRect span = covered_pixels(bbox, road_mask.width(), road_mask.height());
  std::int64_t road = 0;
  for (int y = span.y0; y < span.y1; ++y)
    for (int x = span.x0; x < span.x1; ++x) road += road_mask.at(x, y) ? 1 : 0;
  return std::clamp(static_cast<double>(road) / area, 0.0, 1.0);
}

std::string to_string(SampleSet set) { return set == SampleSet::kBorder ? "border" : "road_only"; }

SampleSet sample_set_from_string(const std::string& name) {
  if (name == "border") return SampleSet::kBorder;
  if (name == "road_only") return SampleSet::kRoadOnly;
  throw std::invalid_argument("unknown sample set '" + name + "'");
}

SampleSets build_sample_sets(const BinaryRaster& road_mask, int margin, int border_depth,
                             const std::string& scene_id) {
  const int w = road_mask.width();
  const int h = road_mask.height();
  const std::string who = scene_id.empty() ? "scene" : scene_id;
  if (w - 2 * margin <= 0 || h - 2 * margin <= 0)
    throw SamplingError(who + ": no pixel is " + std::to_string(margin) + " px away from every edge of a " +
                        std::to_string(w) + "x" + std::to_string(h) + " image");

  cv::Mat road(h, w, CV_8UC1, const_cast<std::uint8_t*>(road_mask.bits().data()));
  cv::Mat binary = road != 0;
  cv::Mat dist;
  cv::distanceTransform(binary, dist, cv::DIST_L2, cv::DIST_MASK_PRECISE, CV_32F);

  SampleSets out;
  for (int y = margin; y < h - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      if (!road_mask.at(x, y)) continue;
      if (dist.at<float>(y, x) <= static_cast<float>(border_depth))
        out.border.push_back({x, y});
      else
        out.road_only.push_back({x, y});
    }
  }
  if (out.border.empty() && out.road_only.empty())
    throw SamplingError(who + ": no road pixel at least " + std::to_string(margin) +
                        " px from the image edges");
  return out;
}

BBox SamplePlan::bbox_for(const SampleCenter& c) const {
  return box_around(c.center.x, c.center.y, bbox_w, bbox_h);
}

SamplePlan sample_plan(const SampleSets& sets, std::uint64_t seed, const std::string& scene_id,
                       int margin, int border_depth, const SamplePlanOptions& options) {
  if (sets.road_only.size() < options.n_road || sets.border.size() < options.n_border)
    throw SamplingError(scene_id + ": need " + std::to_string(options.n_road) + " road-only and " +
                        std::to_string(options.n_border) + " border pixels, have " +
                        std::to_string(sets.road_only.size()) + " and " +
                        std::to_string(sets.border.size()));
  SamplePlan plan;
  plan.scene_id = scene_id;
  plan.seed = seed;
  plan.margin = margin;
  plan.border_depth = border_depth;
  plan.bbox_w = options.bbox_w;
  plan.bbox_h = options.bbox_h;

  Rng rng(seed);
  for (auto i : draw_without_replacement(rng, sets.road_only.size(), options.n_road))
    plan.centers.push_back({sets.road_only[i], SampleSet::kRoadOnly});
  for (auto i : draw_without_replacement(rng, sets.border.size(), options.n_border))
    plan.centers.push_back({sets.border[i], SampleSet::kBorder});
  return plan;
}

std::string serialize_sample_plan(const SamplePlan& plan) {
  nlohmann::json j;
  j["scene_id"] = plan.scene_id;
  j["seed"] = plan.seed;
  j["margin"] = plan.margin;
  j["border_depth"] = plan.border_depth;
  j["bbox_w"] = plan.bbox_w;
  j["bbox_h"] = plan.bbox_h;
  auto centers = nlohmann::json::array();
  for (const auto& c : plan.centers) centers.push_back({c.center.x, c.center.y, to_string(c.set)});
  j["centers"] = std::move(centers);
  return j.dump(1) + "\n";
}

SamplePlan parse_sample_plan(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SamplePlan plan;
  plan.scene_id = j.at("scene_id").get<std::string>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.margin = j.at("margin").get<int>();
  plan.border_depth = j.at("border_depth").get<int>();
  plan.bbox_w = j.at("bbox_w").get<int>();
  plan.bbox_h = j.at("bbox_h").get<int>();
  for (const auto& c : j.at("centers"))
    plan.centers.push_back({{c.at(0).get<int>(), c.at(1).get<int>()},
                            sample_set_from_string(c.at(2).get<std::string>())});
  return plan;
}

}  // namespace ovdprobe
