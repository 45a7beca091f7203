#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ovdprobe/geometry.hpp"

namespace ovdprobe {

inline constexpr int kGeneratorSide = 512;

/// Square region cut from the scene and fed to the inpainting service.
struct CropFrame {
  PixelRect rect;
  /// Side length the crop is resampled to before inpainting.
  int scale_to = kGeneratorSide;

  int side() const { return rect.width(); }
  friend bool operator==(const CropFrame&, const CropFrame&) = default;
};

struct OvalMask {
  BBox bbox;
  /// Frame-sized raster in frame coordinates.
  BinaryRaster raster;
};

/// True iff the center of image pixel (x, y) lies inside the ellipse inscribed in `box`.
bool in_ellipse(const BBox& box, int x, int y);

/// Ellipse inscribed in `bbox`, rasterized over `frame`. Pixels outside the frame are dropped.
OvalMask oval_mask(const BBox& bbox, const CropFrame& frame);

/// Rectangle mask for `bbox` over `frame` (pixel-center rule, as covered_pixels).
BinaryRaster rect_mask(const BBox& bbox, const CropFrame& frame);

/// `side`-square centered on the bbox center, shifted to fit inside the image.
CropFrame crop_frame_around(const BBox& bbox, int image_w, int image_h, int side = kGeneratorSide);

/// 512 when both sides >= 256, 256 when both >= 128, else 128.
int crop_tier(const BBox& bbox);

/// Fraction of the bbox area covered by drivable pixels.
double drivable_overlap(const BBox& bbox, const BinaryRaster& road_mask);

enum class SampleSet { kRoadOnly, kBorder };
std::string to_string(SampleSet set);
SampleSet sample_set_from_string(const std::string& name);

struct SampleSets {
  std::vector<Pixel> road_only;
  std::vector<Pixel> border;
};

struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kBorderMargin = 512;
inline constexpr int kDefaultBorderDepth = 10;

/// Road pixels at least `margin` from every image edge, split by Euclidean distance to the nearest
/// non-road pixel: within `border_depth` goes to `border`, the rest to `road_only`.
/// Throws SamplingError (naming `scene_id`) when no candidate remains.
SampleSets build_sample_sets(const BinaryRaster& road_mask, int margin = kBorderMargin,
                             int border_depth = kDefaultBorderDepth,
                             const std::string& scene_id = {});

struct SampleCenter {
  Pixel center;
  SampleSet set = SampleSet::kRoadOnly;
  friend bool operator==(const SampleCenter&, const SampleCenter&) = default;
};

struct SamplePlan {
  std::string scene_id;
  std::vector<SampleCenter> centers;
  int bbox_w = 100;
  int bbox_h = 130;
  std::uint64_t seed = 0;
  int margin = kBorderMargin;
  int border_depth = kDefaultBorderDepth;

  BBox bbox_for(const SampleCenter& c) const;
};

struct SamplePlanOptions {
  std::size_t n_road = 1600;
  std::size_t n_border = 400;
  int bbox_w = 100;
  int bbox_h = 130;
};

/// Draws centers uniformly without replacement: road-only draws first, then border draws.
SamplePlan sample_plan(const SampleSets& sets, std::uint64_t seed, const std::string& scene_id,
                       int margin, int border_depth, const SamplePlanOptions& options = {});

std::string serialize_sample_plan(const SamplePlan& plan);
SamplePlan parse_sample_plan(const std::string& text);

}  // namespace ovdprobe
