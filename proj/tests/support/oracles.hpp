#pragma once

// Slow reference implementations used only by tests. They follow the documented rules literally
// (scan-for-best loops, per-threshold enumeration, per-pixel loops) and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ovdprobe/detection_io.hpp"
#include "ovdprobe/eval.hpp"
#include "ovdprobe/geometry.hpp"

namespace oracle {

using ovdprobe::BBox;
using ovdprobe::Prediction;

inline double overlap_1d(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

inline double iou(const BBox& a, const BBox& b) {
  const double inter = overlap_1d(a.x_min, a.x_max, b.x_min, b.x_max) * overlap_1d(a.y_min, a.y_max, b.y_min, b.y_max);
  if (inter == 0.0) return 0.0;
  const double area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min);
  const double area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min);
  return inter / (area_a + area_b - inter);
}

// Quadratic NMS: repeatedly pull out the highest-priority remaining box, drop everything it
// overlaps by more than the threshold.
inline std::vector<Prediction> nms(std::vector<Prediction> remaining, double thresh) {
  std::vector<std::size_t> idx(remaining.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<Prediction> kept;
  while (!idx.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const auto& c = remaining[idx[k]];
      const auto& b = remaining[idx[best]];
      const double ca = (c.bbox.x_max - c.bbox.x_min) * (c.bbox.y_max - c.bbox.y_min);
      const double ba = (b.bbox.x_max - b.bbox.x_min) * (b.bbox.y_max - b.bbox.y_min);
      if (c.score > b.score || (c.score == b.score && (ca > ba || (ca == ba && idx[k] < idx[best])))) best = k;
    }
    const Prediction chosen = remaining[idx[best]];
    kept.push_back(chosen);
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (k != best && oracle::iou(chosen.bbox, remaining[idx[k]].bbox) <= thresh) next.push_back(idx[k]);
    idx = std::move(next);
  }
  return kept;
}

struct Counts {
  std::int64_t tp = 0, fp = 0, fn = 0;
  bool operator==(const Counts&) const = default;
};

// Greedy matching by repeated scans: next prediction = highest score (lowest index on ties)
// among unprocessed ones above the floor; it takes the unmatched gt of highest IoU, lowest index
// on ties, if that IoU is strictly above the threshold.
inline Counts match(const std::vector<Prediction>& preds, const std::vector<BBox>& gts, double thresh, double floor) {
  std::vector<bool> done(preds.size(), false), gt_used(gts.size(), false);
  Counts c;
  for (;;) {
    long pick = -1;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (done[i] || preds[i].score < floor) continue;
      if (pick < 0 || preds[i].score > preds[static_cast<std::size_t>(pick)].score) pick = static_cast<long>(i);
    }
    if (pick < 0) break;
    done[static_cast<std::size_t>(pick)] = true;
    long g_best = -1;
    double v_best = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g]) continue;
      const double v = oracle::iou(preds[static_cast<std::size_t>(pick)].bbox, gts[g]);
      if (g_best < 0 || v > v_best) {
        g_best = static_cast<long>(g);
        v_best = v;
      }
    }
    if (g_best >= 0 && v_best > thresh) {
      gt_used[static_cast<std::size_t>(g_best)] = true;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<std::int64_t>(gts.size()) - c.tp;
  return c;
}

// AUPRC by enumerating every distinct score as a threshold and counting from scratch.
inline double auprc(const std::vector<double>& scores, const std::vector<bool>& positive, std::int64_t num_positives) {
  if (scores.empty() || num_positives == 0) return 0.0;
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::map<double, std::pair<double, double>, std::greater<>> points;  // threshold -> (recall, precision)
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= t) (positive[i] ? tp : fp) += 1;
    points[t] = {tp / double(num_positives), tp / (tp + fp)};
  }
  double area = 0.0, prev = 0.0;
  for (const auto& [t, rp] : points) {
    area += (rp.first - prev) * rp.second;
    prev = rp.first;
  }
  return area;
}

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += (long double)x[i] * x[i];
    syy += (long double)y[i] * y[i];
    sxy += (long double)x[i] * y[i];
  }
  const long double num = n * sxy - sx * sy;
  const long double den = std::sqrt(n * sxx - sx * sx) * std::sqrt(n * syy - sy * sy);
  if (den == 0) return std::nullopt;
  return static_cast<double>(num / den);
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2.0;
  }
  return r;
}

inline bool center_inside(const BBox& b, int x, int y) {
  const double cx = x + 0.5, cy = y + 0.5;
  return cx >= b.x_min && cx < b.x_max && cy >= b.y_min && cy < b.y_max;
}

struct Grids {
  std::vector<std::uint32_t> tp, fn;
};

inline Grids heatmap(const std::vector<ovdprobe::HeatmapSample>& samples, int w, int h) {
  Grids g{std::vector<std::uint32_t>(std::size_t(w) * h, 0), std::vector<std::uint32_t>(std::size_t(w) * h, 0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (const auto& s : samples)
        if (center_inside(s.bbox, x, y))
          (s.outcome == ovdprobe::SampleOutcome::kTruePositive ? g.tp : g.fn)[std::size_t(y) * w + x]++;
  return g;
}

inline bool in_ellipse(const BBox& b, int x, int y) {
  const double a = (b.x_max - b.x_min) / 2, c = (b.y_max - b.y_min) / 2;
  const double dx = (x + 0.5 - (b.x_min + a)) / a, dy = (y + 0.5 - (b.y_min + c)) / c;
  return dx * dx + dy * dy <= 1.0;
}

}  // namespace oracle
