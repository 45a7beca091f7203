#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "../support/oracles.hpp"
#include "ovdprobe/placement.hpp"

using namespace ovdprobe;

namespace {

// Brute-force Euclidean distance from a road pixel to the nearest non-road pixel.
bool near_edge(const BinaryRaster& road, int x, int y, int depth) {
  for (int v = y - depth; v <= y + depth; ++v)
    for (int u = x - depth; u <= x + depth; ++u) {
      if (u < 0 || v < 0 || u >= road.width() || v >= road.height()) continue;
      if (!road.at(u, v) && double(u - x) * (u - x) + double(v - y) * (v - y) <= double(depth) * depth) return true;
    }
  return false;
}

BinaryRaster blob_road(int w, int h) {
  BinaryRaster m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = (x - w / 2.0) / (w * 0.4), dy = (y - h / 2.0) / (h * 0.3);
      if (dx * dx + dy * dy < 1.0 && !(x > w / 2 && x < w / 2 + 6)) m.set(x, y);
    }
  return m;
}

}  // namespace

TEST(CropTier, Examples) {
  EXPECT_EQ(crop_tier({0, 0, 300, 280}), 512);
  EXPECT_EQ(crop_tier({0, 0, 150, 140}), 256);
  EXPECT_EQ(crop_tier({0, 0, 60, 50}), 128);
  EXPECT_EQ(crop_tier({0, 0, 256, 256}), 512);
  EXPECT_EQ(crop_tier({0, 0, 255.9, 600}), 256);
  EXPECT_EQ(crop_tier({0, 0, 128, 128}), 256);
}

TEST(CropTier, MonotoneInBothSides) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> side(1, 700), grow(0, 200);
  for (int i = 0; i < 1000; ++i) {
    const double w = side(rng), h = side(rng);
    EXPECT_LE(crop_tier({0, 0, w, h}), crop_tier({0, 0, w + grow(rng), h + grow(rng)}));
  }
}

TEST(CropFrame, CentersAndClamps) {
  auto f = crop_frame_around({900, 400, 1000, 530}, 2048, 1024);
  EXPECT_EQ(f.side(), 512);
  EXPECT_EQ(f.rect.x0 + 256, 950);
  EXPECT_EQ(f.rect.y0 + 256, 465);
  f = crop_frame_around({0, 0, 50, 50}, 2048, 1024);
  EXPECT_EQ(f.rect, (PixelRect{0, 0, 512, 512}));
  f = crop_frame_around({2000, 1000, 2048, 1024}, 2048, 1024);
  EXPECT_EQ(f.rect, (PixelRect{1536, 512, 2048, 1024}));
  EXPECT_THROW(crop_frame_around({0, 0, 5, 5}, 300, 300), std::invalid_argument);
}

TEST(OvalMask, MatchesBruteForceAndArea) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(0, 300), len(2, 200);
  const CropFrame frame{{0, 0, 512, 512}, 512};
  for (int i = 0; i < 100; ++i) {
    const double x = pos(rng), y = pos(rng);
    const BBox b{x, y, x + len(rng), y + len(rng)};
    const auto m = oval_mask(b, frame);
    std::int64_t count = 0;
    for (int py = 0; py < 512; ++py)
      for (int px = 0; px < 512; ++px) {
        const bool expect = oracle::in_ellipse(b, px, py);
        ASSERT_EQ(m.raster.at(px, py), expect) << px << "," << py;
        count += expect;
      }
    if (b.width() >= 20 && b.height() >= 20 && b.x_max <= 512 && b.y_max <= 512) {
      const double area = M_PI * b.width() * b.height() / 4.0;
      EXPECT_NEAR(double(count), area, 0.02 * area);
    }
  }
}

TEST(OvalMask, FrameOffsetAndRejections) {
  const CropFrame frame{{100, 100, 228, 228}, 512};
  const BBox b{120, 130, 160, 190};
  const auto m = oval_mask(b, frame);
  EXPECT_TRUE(m.raster.at(40, 60));  // image (140, 160): center
  EXPECT_FALSE(m.raster.at(20, 30));
  EXPECT_THROW(oval_mask({0, 0, 1, 50}, frame), std::invalid_argument);
  EXPECT_THROW(oval_mask({0, 0, 50, 50}, frame), std::invalid_argument);
  EXPECT_EQ(rect_mask(b, frame).count(), 40 * 60);
}

TEST(DrivableOverlap, FractionOfBoxOnRoad) {
  BinaryRaster road(100, 100);
  for (int y = 50; y < 100; ++y)
    for (int x = 0; x < 100; ++x) road.set(x, y);
  EXPECT_DOUBLE_EQ(drivable_overlap({0, 25, 10, 75}, road), 0.5);
  EXPECT_DOUBLE_EQ(drivable_overlap({0, 0, 10, 10}, road), 0.0);
  EXPECT_DOUBLE_EQ(drivable_overlap({0, 60, 10, 70}, road), 1.0);
}

TEST(SampleSets, MatchBruteForceClassification) {
  const auto road = blob_road(200, 160);
  const int margin = 20, depth = 10;
  const auto sets = build_sample_sets(road, margin, depth, "blob");
  std::set<std::pair<int, int>> border, inner;
  for (const auto& p : sets.border) border.insert({p.x, p.y});
  for (const auto& p : sets.road_only) inner.insert({p.x, p.y});
  for (int y = 0; y < 160; ++y)
    for (int x = 0; x < 200; ++x) {
      const bool eligible = road.at(x, y) && x >= margin && y >= margin && x < 200 - margin && y < 160 - margin;
      const bool b = eligible && near_edge(road, x, y, depth);
      ASSERT_EQ(border.count({x, y}) == 1, b) << x << "," << y;
      ASSERT_EQ(inner.count({x, y}) == 1, eligible && !b) << x << "," << y;
    }
}

TEST(SampleSets, EmptyCandidatesNameTheScene) {
  try {
    build_sample_sets(BinaryRaster(2048, 1024, true), 512, 10, "wide");
    FAIL() << "expected SamplingError";
  } catch (const SamplingError& e) {
    EXPECT_NE(std::string(e.what()).find("wide"), std::string::npos);
  }
  EXPECT_THROW(build_sample_sets(BinaryRaster(100, 100, false), 10, 10, "none"), SamplingError);
}

TEST(SamplePlan, DeterministicDistinctAndRoundTrips) {
  const auto road = blob_road(300, 240);
  const auto sets = build_sample_sets(road, 20, 10);
  SamplePlanOptions opt;
  opt.n_road = 200;
  opt.n_border = 50;
  const auto a = sample_plan(sets, 9, "blob", 20, 10, opt);
  const auto b = sample_plan(sets, 9, "blob", 20, 10, opt);
  EXPECT_EQ(a.centers, b.centers);
  EXPECT_NE(a.centers, sample_plan(sets, 10, "blob", 20, 10, opt).centers);
  ASSERT_EQ(a.centers.size(), 250u);
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < a.centers.size(); ++i) {
    EXPECT_EQ(a.centers[i].set, i < 200 ? SampleSet::kRoadOnly : SampleSet::kBorder);
    EXPECT_TRUE(seen.insert({a.centers[i].center.x, a.centers[i].center.y}).second);
  }
  EXPECT_EQ(a.bbox_for(a.centers[0]).width(), 100);
  EXPECT_EQ(a.bbox_for(a.centers[0]).height(), 130);
  const auto text = serialize_sample_plan(a);
  EXPECT_EQ(serialize_sample_plan(parse_sample_plan(text)), text);

  opt.n_border = sets.border.size() + 1;
  EXPECT_THROW(sample_plan(sets, 1, "blob", 20, 10, opt), SamplingError);
}
