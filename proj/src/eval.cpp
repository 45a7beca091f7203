#include "ovdprobe/eval.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace ovdprobe {

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Prediction> nms(std::span<const Prediction> predictions, double iou_thresh) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = predictions[a];
    const auto& pb = predictions[b];
    if (pa.score != pb.score) return pa.score > pb.score;
    return pa.bbox.area() > pb.bbox.area();
  });

  std::vector<Prediction> kept;
  for (std::size_t i : order) {
    const auto& cand = predictions[i];
    bool suppressed = false;
    for (const auto& k : kept) {
      if (iou(k.bbox, cand.bbox) > iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

PredictionSet nms(const PredictionSet& set, double iou_thresh) {
  PredictionSet out{set.image_id, set.model_name, set.prompt_id, {}};
  out.predictions = nms(std::span<const Prediction>(set.predictions), iou_thresh);
  return out;
}

MatchResult match(std::span<const Prediction> predictions, std::span<const BBox> ground_truth,
                  double iou_thresh, double score_floor) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i].score >= score_floor) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].score > predictions[b].score;
  });

  MatchResult r;
  std::vector<bool> taken(ground_truth.size(), false);
  for (std::size_t pi : order) {
    double best = -1.0;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(predictions[pi].bbox, ground_truth[g]);
      if (v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best > iou_thresh) {
      taken[best_g] = true;
      r.matched_pairs.push_back({pi, best_g, best});
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = static_cast<std::int64_t>(ground_truth.size()) - r.tp;
  return r;
}

PrCurve pr_curve_from_labels(std::span<const ScoredLabel> labels, std::int64_t num_positives) {
  std::vector<ScoredLabel> sorted(labels.begin(), labels.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

  PrCurve curve;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == t; ++i) (sorted[i].positive ? tp : fp)++;
    PrPoint p;
    p.threshold = t;
    p.tp = tp;
    p.fp = fp;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = num_positives > 0 ? static_cast<double>(tp) / static_cast<double>(num_positives) : 0.0;
    curve.auprc += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
    curve.points.push_back(p);
  }
  curve.auprc = std::clamp(curve.auprc, 0.0, 1.0);
  return curve;
}

PrCurve pr_curve_auprc(std::span<const EvalImage> images, double iou_thresh) {
  // A match at floor t handles exactly the score-ordered prefix of predictions with score >= t,
  // so one unbounded greedy pass per image labels every operating point at once.
  std::vector<ScoredLabel> labels;
  std::int64_t num_gt = 0;
  for (const auto& img : images) {
    num_gt += static_cast<std::int64_t>(img.ground_truth.size());
    const auto m = match(img.predictions, img.ground_truth, iou_thresh,
                         -std::numeric_limits<double>::infinity());
    std::vector<bool> positive(img.predictions.size(), false);
    for (const auto& pair : m.matched_pairs) positive[pair.prediction] = true;
    for (std::size_t i = 0; i < img.predictions.size(); ++i)
      labels.push_back({img.predictions[i].score, positive[i]});
  }
  return pr_curve_from_labels(labels, num_gt);
}

namespace {

// numpy.linspace(start, stop, num), element for element.
std::vector<double> linspace(double start, double stop, int num) {
  std::vector<double> out(static_cast<std::size_t>(num));
  const double step = (stop - start) / static_cast<double>(num - 1);
  for (int i = 0; i < num; ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(i) * step + start;
  out.back() = stop;
  return out;
}

struct Xywh {
  double x, y, w, h;
};

Xywh to_xywh(const BBox& b) { return {b.x_min, b.y_min, b.x_max - b.x_min, b.y_max - b.y_min}; }

// Same operation order as the reference evaluator, so threshold ties resolve identically.
double coco_iou(const Xywh& d, const Xywh& g) {
  const double da = d.w * d.h;
  const double ga = g.w * g.h;
  const double w = std::min(d.w + d.x, g.w + g.x) - std::max(d.x, g.x);
  if (w <= 0) return 0.0;
  const double h = std::min(d.h + d.y, g.h + g.y) - std::max(d.y, g.y);
  if (h <= 0) return 0.0;
  const double i = w * h;
  return i / (da + ga - i);
}

}  // namespace

CocoSummary coco_ap_ar(std::span<const EvalImage> images, int max_dets) {
  const auto iou_thrs = linspace(0.5, 0.95, 10);
  const auto rec_thrs = linspace(0.0, 1.0, 101);
  const std::size_t T = iou_thrs.size();

  struct Det {
    double score;
    std::vector<bool> matched;  // per threshold
  };
  std::vector<Det> all;
  std::int64_t num_gt = 0;

  for (const auto& img : images) {
    num_gt += static_cast<std::int64_t>(img.ground_truth.size());
    std::vector<std::size_t> order(img.predictions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return img.predictions[a].score > img.predictions[b].score;
    });
    if (order.size() > static_cast<std::size_t>(max_dets)) order.resize(static_cast<std::size_t>(max_dets));

    std::vector<Xywh> gts;
    for (const auto& g : img.ground_truth) gts.push_back(to_xywh(g));
    std::vector<std::vector<double>> ious(order.size(), std::vector<double>(gts.size()));
    for (std::size_t d = 0; d < order.size(); ++d)
      for (std::size_t g = 0; g < gts.size(); ++g)
        ious[d][g] = coco_iou(to_xywh(img.predictions[order[d]].bbox), gts[g]);

    std::vector<Det> dets(order.size());
    for (std::size_t d = 0; d < order.size(); ++d) {
      dets[d].score = img.predictions[order[d]].score;
      dets[d].matched.assign(T, false);
    }
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<bool> gt_taken(gts.size(), false);
      for (std::size_t d = 0; d < order.size(); ++d) {
        double best = std::min(iou_thrs[t], 1.0 - 1e-10);
        long m = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
          if (gt_taken[g]) continue;
          if (ious[d][g] < best) continue;
          best = ious[d][g];
          m = static_cast<long>(g);
        }
        if (m < 0) continue;
        gt_taken[static_cast<std::size_t>(m)] = true;
        dets[d].matched[t] = true;
      }
    }
    for (auto& d : dets) all.push_back(std::move(d));
  }

  CocoSummary s;
  s.iou_thresholds = iou_thrs;
  s.ap_per_threshold.assign(T, 0.0);
  s.recall_per_threshold.assign(T, 0.0);
  if (num_gt == 0) return s;

  std::stable_sort(all.begin(), all.end(), [](const Det& a, const Det& b) { return a.score > b.score; });
  const std::size_t nd = all.size();
  const double npig = static_cast<double>(num_gt);
  double ap_total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> rc(nd), pr(nd);
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < nd; ++i) {
      (all[i].matched[t] ? tp : fp) += 1.0;
      rc[i] = tp / npig;
      pr[i] = tp / (fp + tp + DBL_EPSILON);
    }
    s.recall_per_threshold[t] = nd ? rc.back() : 0.0;
    for (std::size_t i = nd; i-- > 1;)
      if (pr[i] > pr[i - 1]) pr[i - 1] = pr[i];
    double q_sum = 0.0;
    for (double r : rec_thrs) {
      const auto pi = static_cast<std::size_t>(std::lower_bound(rc.begin(), rc.end(), r) - rc.begin());
      if (pi >= nd) break;
      q_sum += pr[pi];
    }
    s.ap_per_threshold[t] = q_sum / static_cast<double>(rec_thrs.size());
    ap_total += q_sum;
  }
  s.ap_50_95 = ap_total / static_cast<double>(T * rec_thrs.size());
  s.ar_50_95 = std::accumulate(s.recall_per_threshold.begin(), s.recall_per_threshold.end(), 0.0) /
               static_cast<double>(T);
  return s;
}

SampleOutcome classify_sample(std::span<const Prediction> predictions, const BBox& ground_truth,
                              double iou_thresh, double score_floor) {
  const auto m = match(predictions, std::span<const BBox>(&ground_truth, 1), iou_thresh, score_floor);
  return m.tp > 0 ? SampleOutcome::kTruePositive : SampleOutcome::kFalseNegative;
}

HeatmapGrid::HeatmapGrid(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("heatmap size must be non-negative");
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  tp_.assign(n, 0);
  fn_.assign(n, 0);
}

std::optional<double> HeatmapGrid::recall(int x, int y) const {
  const auto tp = tp_count(x, y);
  const auto total = tp + fn_count(x, y);
  if (total == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(total);
}

std::uint32_t HeatmapGrid::max_fn() const {
  return fn_.empty() ? 0 : *std::max_element(fn_.begin(), fn_.end());
}

HeatmapGrid heatmap(std::span<const HeatmapSample> samples, int width, int height) {
  HeatmapGrid grid(width, height);
  // 2-D difference arrays, one corner update per sample, then an inclusive prefix sum.
  const auto stride = static_cast<std::size_t>(width) + 1;
  std::vector<std::int64_t> dtp(stride * (static_cast<std::size_t>(height) + 1), 0);
  std::vector<std::int64_t> dfn(dtp.size(), 0);
  for (const auto& s : samples) {
    const PixelRect r = covered_pixels(s.bbox, width, height);
    if (r.empty()) continue;
    auto& d = s.outcome == SampleOutcome::kTruePositive ? dtp : dfn;
    d[static_cast<std::size_t>(r.y0) * stride + static_cast<std::size_t>(r.x0)] += 1;
    d[static_cast<std::size_t>(r.y0) * stride + static_cast<std::size_t>(r.x1)] -= 1;
    d[static_cast<std::size_t>(r.y1) * stride + static_cast<std::size_t>(r.x0)] -= 1;
    d[static_cast<std::size_t>(r.y1) * stride + static_cast<std::size_t>(r.x1)] += 1;
  }
  auto integrate = [&](std::vector<std::int64_t>& d, std::vector<std::uint32_t>& out) {
    for (int y = 0; y < height; ++y) {
      std::int64_t row = 0;
      for (int x = 0; x < width; ++x) {
        const auto i = static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x);
        row += d[i];
        if (y > 0) d[i] = row + d[i - stride];
        else d[i] = row;
        out[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
            static_cast<std::uint32_t>(d[i]);
      }
    }
  };
  integrate(dtp, grid.tp_counts());
  integrate(dfn, grid.fn_counts());
  return grid;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  // sqrt of the product (not a product of sqrts) keeps exact +-1 for exactly proportional inputs.
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

FnCorrelation fn_correlation(std::span<const FnVector> vectors) {
  for (const auto& v : vectors) {
    if (v.counts.size() != vectors.front().counts.size())
      throw std::invalid_argument("FN vectors differ in length: '" + v.dataset_id + "' has " +
                                  std::to_string(v.counts.size()) + ", '" + vectors.front().dataset_id +
                                  "' has " + std::to_string(vectors.front().counts.size()));
    if (!v.scene_ids.empty() && !vectors.front().scene_ids.empty() && v.scene_ids != vectors.front().scene_ids)
      throw std::invalid_argument("FN vectors '" + v.dataset_id + "' and '" + vectors.front().dataset_id +
                                  "' cover different scenes");
  }
  FnCorrelation out;
  const std::size_t n = vectors.size();
  for (auto* m : {&out.pearson, &out.spearman}) {
    for (const auto& v : vectors) m->labels.push_back(v.dataset_id);
    m->values.assign(n, std::vector<std::optional<double>>(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      auto p = pearson(vectors[i].counts, vectors[j].counts);
      auto s = spearman(vectors[i].counts, vectors[j].counts);
      if (i == j) {
        if (p) p = 1.0;
        if (s) s = 1.0;
      }
      out.pearson.values[i][j] = out.pearson.values[j][i] = p;
      out.spearman.values[i][j] = out.spearman.values[j][i] = s;
    }
  }
  return out;
}

std::vector<EvalImage> collect_images(const std::vector<SceneRecord>& scenes,
                                      const std::vector<PredictionSet>& sets, const std::string& model,
                                      const std::string& prompt_id, const EvalConfig& config) {
  std::map<std::string, const PredictionSet*> by_image;
  for (const auto& s : sets)
    if (s.model_name == model && s.prompt_id == prompt_id) by_image[s.image_id] = &s;

  std::vector<EvalImage> images;
  images.reserve(scenes.size());
  for (const auto& scene : scenes) {
    EvalImage img;
    for (const auto& o : scene.objects) img.ground_truth.push_back(o.bbox);
    if (auto it = by_image.find(scene.scene_id); it != by_image.end()) {
      img.predictions = config.apply_nms ? nms(std::span<const Prediction>(it->second->predictions), config.nms_iou)
                                         : it->second->predictions;
    }
    images.push_back(std::move(img));
  }
  return images;
}

EvalResult evaluate(const std::vector<SceneRecord>& scenes, const std::vector<PredictionSet>& sets,
                    const std::string& model, const std::string& prompt_id, const std::string& dataset_id,
                    const EvalConfig& config) {
  const auto images = collect_images(scenes, sets, model, prompt_id, config);
  EvalResult r;
  r.model_name = model;
  r.prompt_id = prompt_id;
  r.dataset_id = dataset_id;
  r.iou_threshold = config.iou_thresh;
  r.images = static_cast<std::int64_t>(images.size());
  for (const auto& img : images) {
    const auto m = match(img.predictions, img.ground_truth, config.iou_thresh, config.score_floor);
    r.tp += m.tp;
    r.fp += m.fp;
    r.fn += m.fn;
  }
  r.auprc = pr_curve_auprc(images, config.iou_thresh).auprc;
  const auto coco = coco_ap_ar(images);
  r.ap_50_95 = coco.ap_50_95;
  r.ar_50_95 = coco.ar_50_95;
  return r;
}

std::vector<EvalResult> evaluate_all(const std::vector<SceneRecord>& scenes,
                                     const std::vector<PredictionSet>& sets, const std::string& dataset_id,
                                     const EvalConfig& config) {
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& s : sets) keys.emplace(s.model_name, s.prompt_id);
  std::vector<EvalResult> out;
  for (const auto& [model, prompt] : keys) out.push_back(evaluate(scenes, sets, model, prompt, dataset_id, config));
  return out;
}

FnVector fn_per_scene(const std::vector<SceneRecord>& scenes, const std::vector<PredictionSet>& sets,
                      const std::string& model, const std::string& prompt_id, const std::string& dataset_id,
                      const EvalConfig& config) {
  const auto images = collect_images(scenes, sets, model, prompt_id, config);
  std::map<std::string, double> per_scene;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& key = scenes[i].source_scene_id.empty() ? scenes[i].scene_id : scenes[i].source_scene_id;
    const auto m = match(images[i].predictions, images[i].ground_truth, config.iou_thresh, config.score_floor);
    per_scene[key] += static_cast<double>(m.fn);
  }
  FnVector v;
  v.dataset_id = dataset_id;
  for (const auto& [id, count] : per_scene) {
    v.scene_ids.push_back(id);
    v.counts.push_back(count);
  }
  return v;
}

}  // namespace ovdprobe
