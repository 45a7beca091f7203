#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "ovdprobe/probes.hpp"

using namespace ovdprobe;

namespace {

RgbImage noisy_image(std::mt19937_64& rng, int w, int h) {
  RgbImage img(w, h);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng());
  return img;
}

BBox random_bbox(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> x(0, w - 12), y(0, h - 12);
  const double x0 = x(rng), y0 = y(rng);
  std::uniform_real_distribution<double> bw(4, std::min(60.0, w - x0)), bh(4, std::min(60.0, h - y0));
  return {x0, y0, x0 + bw(rng), y0 + bh(rng)};
}

bool in_ring(const BBox& b, int x, int y) {
  const BBox outer{b.x_min - b.width() / 2, b.y_min - b.height() / 2, b.x_max + b.width() / 2, b.y_max + b.height() / 2};
  return oracle::center_inside(outer, x, y) && !oracle::center_inside(b, x, y);
}

}  // namespace

TEST(Probes, KindNamesRoundTrip) {
  for (auto k : {ProbeKind::kNoiseWhite, ProbeKind::kNoiseGrey, ProbeKind::kPattern, ProbeKind::kRemoved,
                 ProbeKind::kBrightnessSmooth})
    EXPECT_EQ(probe_kind_from_string(to_string(k)), k);
  EXPECT_THROW(probe_kind_from_string("blur"), std::invalid_argument);
}

TEST(Probes, NoiseOvalPaintsExactlyTheEllipse) {
  std::mt19937_64 rng(2);
  for (int it = 0; it < 20; ++it) {
    const auto img = noisy_image(rng, 120, 90);
    const auto b = random_bbox(rng, 120, 90);
    const Rgb color = it % 2 ? kWhite : kGrey;
    const auto out = noise_oval(img, b, color);
    for (int y = 0; y < 90; ++y)
      for (int x = 0; x < 120; ++x)
        ASSERT_EQ(out.at(x, y), oracle::in_ellipse(b, x, y) ? color : img.at(x, y));
  }
  EXPECT_EQ(kGrey, (Rgb{128, 128, 128}));
}

TEST(Probes, PatternCopiesSourceAndNothingElse) {
  std::mt19937_64 rng(3);
  const auto img = noisy_image(rng, 100, 60);
  const BBox b{10, 10, 30, 40};
  const auto src = default_pattern_source(img, b);
  ASSERT_TRUE(src);
  EXPECT_EQ(*src, (PixelRect{30, 10, 50, 40}));
  const auto out = pattern_patch(img, b, *src);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 100; ++x) {
      if (oracle::center_inside(b, x, y)) ASSERT_EQ(out.at(x, y), img.at(x + 20, y));
      else ASSERT_EQ(out.at(x, y), img.at(x, y));
    }
  EXPECT_EQ(default_pattern_source(img, {80, 0, 95, 10}), (PixelRect{65, 0, 80, 10}));
  EXPECT_FALSE(default_pattern_source(img, {20, 0, 80, 10}));
  EXPECT_THROW(pattern_patch(img, b, {35, 10, 55, 41}), ProbeError);
  EXPECT_THROW(pattern_patch(img, b, {25, 10, 45, 40}), ProbeError);
  EXPECT_THROW(pattern_patch(img, b, {90, 10, 110, 40}), ProbeError);
}

TEST(Probes, RingIsDoubledBoxMinusBox) {
  std::mt19937_64 rng(6);
  for (int it = 0; it < 20; ++it) {
    const auto b = random_bbox(rng, 80, 70);
    const auto ring = surrounding_ring(b, 80, 70);
    for (int y = 0; y < 70; ++y)
      for (int x = 0; x < 80; ++x) ASSERT_EQ(ring.at(x, y), in_ring(b, x, y)) << x << "," << y;
  }
}

TEST(Probes, BrightnessSmoothReplacesExactlyBrightPixelsWithRingMean) {
  std::mt19937_64 rng(8);
  for (int it = 0; it < 20; ++it) {
    const auto img = noisy_image(rng, 90, 80);
    const auto b = random_bbox(rng, 90, 80);
    std::array<double, 3> sum{0, 0, 0};
    double n = 0;
    for (int y = 0; y < 80; ++y)
      for (int x = 0; x < 90; ++x)
        if (in_ring(b, x, y)) {
          const auto c = img.at(x, y);
          sum[0] += c.r;
          sum[1] += c.g;
          sum[2] += c.b;
          ++n;
        }
    ASSERT_GT(n, 0);
    const Rgb mean{std::uint8_t(std::lround(sum[0] / n)), std::uint8_t(std::lround(sum[1] / n)),
                   std::uint8_t(std::lround(sum[2] / n))};
    const auto out = brightness_smooth(img, b, 200.0);
    for (int y = 0; y < 80; ++y)
      for (int x = 0; x < 90; ++x) {
        const auto c = img.at(x, y);
        const bool replace = oracle::center_inside(b, x, y) && int(c.r) + c.g + c.b > 600;
        ASSERT_EQ(out.at(x, y), replace ? mean : c);
      }
  }
}

TEST(Probes, BrightnessThresholdIsStrict) {
  RgbImage img(30, 30, {0, 0, 0});
  img.set(10, 10, {100, 100, 100});
  img.set(11, 10, {200, 200, 200});
  img.set(12, 10, {201, 201, 200});
  const auto out = brightness_smooth(img, {5, 5, 20, 20});
  EXPECT_EQ(out.at(10, 10), (Rgb{100, 100, 100}));
  EXPECT_EQ(out.at(11, 10), (Rgb{200, 200, 200}));
  EXPECT_EQ(out.at(12, 10), (Rgb{0, 0, 0}));
}

TEST(Probes, BrightnessFallsBackWhenRingIsEmpty) {
  RgbImage img(10, 10, {10, 20, 30});
  img.set(3, 3, {250, 250, 250});
  const auto out = brightness_smooth(img, {0, 0, 10, 10});
  EXPECT_EQ(out.at(3, 3), (Rgb{10, 20, 30}));
  EXPECT_THROW(brightness_smooth(RgbImage(10, 10, kWhite), {0, 0, 10, 10}), ProbeError);
}

TEST(Probes, DispatchAndRemovedSet) {
  RgbImage img(40, 40, {5, 5, 5});
  ProbeSpec spec;
  spec.kind = ProbeKind::kNoiseGrey;
  spec.target_bbox = {10, 10, 30, 30};
  spec.color = kGrey;
  EXPECT_EQ(apply_probe(img, spec).at(20, 20), kGrey);
  spec.kind = ProbeKind::kRemoved;
  EXPECT_THROW(apply_probe(img, spec), ProbeError);

  std::vector<GenerationOutcome> outcomes(2);
  outcomes[0].output_id = "a";
  outcomes[1].output_id = "b";
  for (auto& o : outcomes) {
    o.status = CallStatus::kOk;
    o.scene_id = "src";
    o.image_w = o.image_h = 100;
    o.target = {10, 10, 50, 50};
  }
  const auto removed = removed_probe_set(outcomes, {"b"});
  ASSERT_EQ(removed.size(), 1u);
  EXPECT_EQ(removed[0].scene_id, "b");
  EXPECT_EQ(removed[0].objects[0].bbox, (BBox{10, 10, 50, 50}));
}
