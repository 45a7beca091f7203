#include "ovdprobe/probes.hpp"

#include <array>
#include <cmath>

#include "ovdprobe/placement.hpp"

namespace ovdprobe {

std::string to_string(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::kNoiseWhite: return "noise_white";
    case ProbeKind::kNoiseGrey: return "noise_grey";
    case ProbeKind::kPattern: return "pattern";
    case ProbeKind::kRemoved: return "removed";
    case ProbeKind::kBrightnessSmooth: return "brightness_smooth";
  }
  return "unknown";
}

ProbeKind probe_kind_from_string(const std::string& s) {
  for (auto k : {ProbeKind::kNoiseWhite, ProbeKind::kNoiseGrey, ProbeKind::kPattern, ProbeKind::kRemoved,
                 ProbeKind::kBrightnessSmooth})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown probe kind '" + s +
                              "' (expected noise_white, noise_grey, pattern, removed or brightness_smooth)");
}

PixelRect probe_region(const RgbImage& image, const BBox& bbox) {
  require_valid(bbox, "probe bbox");
  return covered_pixels(bbox, image.width(), image.height());
}

RgbImage noise_oval(const RgbImage& image, const BBox& bbox, Rgb color) {
  const PixelRect r = probe_region(image, bbox);
  RgbImage out = image;
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x)
      if (in_ellipse(bbox, x, y)) out.set(x, y, color);
  return out;
}

RgbImage pattern_patch(const RgbImage& image, const BBox& bbox, const PixelRect& source) {
  const PixelRect r = probe_region(image, bbox);
  if (r.empty()) throw ProbeError("pattern: bbox covers no pixels");
  if (source.width() != r.width() || source.height() != r.height())
    throw ProbeError("pattern: source " + std::to_string(source.width()) + "x" + std::to_string(source.height()) +
                     " does not match target " + std::to_string(r.width()) + "x" + std::to_string(r.height()));
  if (intersect(source, image.bounds()) != source) throw ProbeError("pattern: source lies outside the image");
  if (!intersect(source, r).empty()) throw ProbeError("pattern: source overlaps the target region");

  RgbImage out = image;
  for (int dy = 0; dy < r.height(); ++dy)
    for (int dx = 0; dx < r.width(); ++dx) out.set(r.x0 + dx, r.y0 + dy, image.at(source.x0 + dx, source.y0 + dy));
  return out;
}

std::optional<PixelRect> default_pattern_source(const RgbImage& image, const BBox& bbox) {
  const PixelRect r = probe_region(image, bbox);
  for (int shift : {r.width(), -r.width()}) {
    PixelRect s{r.x0 + shift, r.y0, r.x1 + shift, r.y1};
    if (!s.empty() && intersect(s, image.bounds()) == s) return s;
  }
  return std::nullopt;
}

BinaryRaster surrounding_ring(const BBox& bbox, int width, int height) {
  const BBox outer = box_around(bbox.center_x(), bbox.center_y(), 2.0 * bbox.width(), 2.0 * bbox.height());
  const PixelRect o = covered_pixels(outer, width, height);
  const PixelRect inner = covered_pixels(bbox, width, height);
  BinaryRaster ring(width, height);
  for (int y = o.y0; y < o.y1; ++y)
    for (int x = o.x0; x < o.x1; ++x)
      if (!inner.contains(x, y)) ring.set(x, y);
  return ring;
}

namespace {

Rgb rounded_mean(const std::array<std::int64_t, 3>& sum, std::int64_t n) {
  auto ch = [&](std::int64_t s) {
    return static_cast<std::uint8_t>(std::llround(static_cast<double>(s) / static_cast<double>(n)));
  };
  return {ch(sum[0]), ch(sum[1]), ch(sum[2])};
}

}  // namespace

RgbImage brightness_smooth(const RgbImage& image, const BBox& bbox, double threshold) {
  const PixelRect r = probe_region(image, bbox);
  const BinaryRaster ring = surrounding_ring(bbox, image.width(), image.height());

  std::array<std::int64_t, 3> sum{0, 0, 0};
  std::int64_t n = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!ring.at(x, y)) continue;
      const Rgb c = image.at(x, y);
      sum[0] += c.r;
      sum[1] += c.g;
      sum[2] += c.b;
      ++n;
    }
  }
  if (n == 0) {
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        const Rgb c = image.at(x, y);
        if (is_bright(c, threshold)) continue;
        sum[0] += c.r;
        sum[1] += c.g;
        sum[2] += c.b;
        ++n;
      }
    }
  }

  RgbImage out = image;
  std::optional<Rgb> fill;
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      if (!is_bright(image.at(x, y), threshold)) continue;
      if (!fill) {
        if (n == 0) throw ProbeError("brightness_smooth: no ring pixels and every bbox pixel exceeds the threshold");
        fill = rounded_mean(sum, n);
      }
      out.set(x, y, *fill);
    }
  }
  return out;
}

RgbImage apply_probe(const RgbImage& image, const ProbeSpec& spec) {
  switch (spec.kind) {
    case ProbeKind::kNoiseWhite: return noise_oval(image, spec.target_bbox, kWhite);
    case ProbeKind::kNoiseGrey: return noise_oval(image, spec.target_bbox, kGrey);
    case ProbeKind::kPattern: {
      auto src = spec.source_rect ? spec.source_rect : default_pattern_source(image, spec.target_bbox);
      if (!src) throw ProbeError("pattern: no room for a source region next to the bbox");
      return pattern_patch(image, spec.target_bbox, *src);
    }
    case ProbeKind::kBrightnessSmooth: return brightness_smooth(image, spec.target_bbox, spec.threshold);
    case ProbeKind::kRemoved: break;
  }
  throw ProbeError("the removed probe selects images, it does not transform them");
}

std::vector<SceneRecord> removed_probe_set(const std::vector<GenerationOutcome>& outcomes,
                                           const std::vector<std::string>& discard_ids) {
  return synthetic_scenes(apply_discard_list(outcomes, discard_ids).removed);
}

}  // namespace ovdprobe
