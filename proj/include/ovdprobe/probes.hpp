#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ovdprobe/generation.hpp"
#include "ovdprobe/geometry.hpp"

namespace ovdprobe {

enum class ProbeKind { kNoiseWhite, kNoiseGrey, kPattern, kRemoved, kBrightnessSmooth };

std::string to_string(ProbeKind kind);
ProbeKind probe_kind_from_string(const std::string& s);

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kGrey{128, 128, 128};
inline constexpr double kBrightnessThreshold = 200.0;

struct ProbeSpec {
  ProbeKind kind = ProbeKind::kNoiseWhite;
  BBox target_bbox;
  Rgb color = kWhite;
  std::optional<PixelRect> source_rect;
  double threshold = kBrightnessThreshold;
};

class ProbeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Paints the ellipse inscribed in `bbox` with `color`; every other pixel is untouched.
RgbImage noise_oval(const RgbImage& image, const BBox& bbox, Rgb color);

/// Pixel region a probe writes to for `bbox` (pixel-center rule, clipped to the image).
PixelRect probe_region(const RgbImage& image, const BBox& bbox);

/// Copies `source` over the bbox region. The source must match the region's size, lie inside the
/// image and not overlap the region.
RgbImage pattern_patch(const RgbImage& image, const BBox& bbox, const PixelRect& source);

/// Default pattern source: the region shifted right by its width, else left; nullopt if neither fits.
std::optional<PixelRect> default_pattern_source(const RgbImage& image, const BBox& bbox);

/// Surrounding ring: the bbox scaled x2 about its center minus the bbox itself, clipped.
BinaryRaster surrounding_ring(const BBox& bbox, int width, int height);

/// Inside bbox, pixels with (R+G+B)/3 > threshold take the ring's mean color (rounded per channel).
/// An empty ring falls back to the mean of the bbox pixels that are not replaced.
RgbImage brightness_smooth(const RgbImage& image, const BBox& bbox, double threshold = kBrightnessThreshold);

inline bool is_bright(Rgb c, double threshold) {
  return static_cast<double>(int(c.r) + int(c.g) + int(c.b)) > 3.0 * threshold;
}

/// Dispatches on spec.kind. kRemoved is not an image transform and throws.
RgbImage apply_probe(const RgbImage& image, const ProbeSpec& spec);

/// The removed-object probe set: outcomes named in the discard list, as annotation records.
std::vector<SceneRecord> removed_probe_set(const std::vector<GenerationOutcome>& outcomes,
                                           const std::vector<std::string>& discard_ids);

}  // namespace ovdprobe
