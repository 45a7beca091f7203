#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ovdprobe/dataset.hpp"
#include "ovdprobe/detection_io.hpp"
#include "ovdprobe/geometry.hpp"

namespace ovdprobe {

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

inline constexpr double kDefaultNmsIou = 0.5;
inline constexpr double kMatchIou = 0.5;
inline constexpr double kCountScoreFloor = 0.1;
inline constexpr double kHeatmapScoreFloor = 0.2;

/// Greedy NMS: descending score, ties by larger area then input order. A box is suppressed when its
/// IoU with an already kept box exceeds `iou_thresh`. Kept boxes are returned in greedy order.
std::vector<Prediction> nms(std::span<const Prediction> predictions, double iou_thresh = kDefaultNmsIou);
PredictionSet nms(const PredictionSet& set, double iou_thresh = kDefaultNmsIou);

struct MatchedPair {
  std::size_t prediction = 0;
  std::size_t ground_truth = 0;
  double iou = 0.0;
  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct MatchResult {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::vector<MatchedPair> matched_pairs;
};

/// Predictions below `score_floor` are dropped. The rest, by descending score (ties: input order),
/// each take the still-unmatched ground truth of highest IoU (ties: lower index) when that IoU is
/// strictly above `iou_thresh`.
MatchResult match(std::span<const Prediction> predictions, std::span<const BBox> ground_truth,
                  double iou_thresh = kMatchIou, double score_floor = kCountScoreFloor);

/// One image's input to dataset-level metrics. Predictions are expected post-NMS.
struct EvalImage {
  std::vector<BBox> ground_truth;
  std::vector<Prediction> predictions;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
};

struct PrCurve {
  /// One point per distinct score, by descending threshold (non-decreasing recall).
  std::vector<PrPoint> points;
  double auprc = 0.0;
};

struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
};

/// Step-wise PR curve for already-labelled detections: one operating point per distinct score,
/// AUPRC = sum (R_i - R_{i-1}) * P_i with R_0 = 0. Zero when there are no detections or positives.
PrCurve pr_curve_from_labels(std::span<const ScoredLabel> labels, std::int64_t num_positives);

/// PR curve over a dataset, each operating point being match() at score_floor = threshold.
PrCurve pr_curve_auprc(std::span<const EvalImage> images, double iou_thresh = kMatchIou);

struct CocoSummary {
  double ap_50_95 = 0.0;
  double ar_50_95 = 0.0;
  std::vector<double> iou_thresholds;
  std::vector<double> ap_per_threshold;
  std::vector<double> recall_per_threshold;
};

/// Class-agnostic COCO bbox evaluation (area range "all", max `max_dets` detections per image,
/// IoU thresholds 0.50:0.05:0.95, 101-point interpolated precision). Matching follows the COCO
/// reference evaluator, which accepts IoU >= threshold. AP/AR are 0 when there is no ground truth.
CocoSummary coco_ap_ar(std::span<const EvalImage> images, int max_dets = 100);

enum class SampleOutcome { kTruePositive, kFalseNegative };

struct HeatmapSample {
  BBox bbox;
  SampleOutcome outcome = SampleOutcome::kFalseNegative;
};

/// TP when match() against the single ground-truth box yields a true positive.
SampleOutcome classify_sample(std::span<const Prediction> predictions, const BBox& ground_truth,
                              double iou_thresh = kMatchIou, double score_floor = kHeatmapScoreFloor);

class HeatmapGrid {
 public:
  HeatmapGrid() = default;
  HeatmapGrid(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint32_t tp_count(int x, int y) const { return tp_[index(x, y)]; }
  std::uint32_t fn_count(int x, int y) const { return fn_[index(x, y)]; }
  /// Undefined (nullopt) where no sample covers the pixel.
  std::optional<double> recall(int x, int y) const;

  const std::vector<std::uint32_t>& tp_counts() const { return tp_; }
  const std::vector<std::uint32_t>& fn_counts() const { return fn_; }
  std::vector<std::uint32_t>& tp_counts() { return tp_; }
  std::vector<std::uint32_t>& fn_counts() { return fn_; }
  std::uint32_t max_fn() const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> tp_;
  std::vector<std::uint32_t> fn_;
};

/// Adds each sample's outcome to every pixel whose center lies inside its bbox.
HeatmapGrid heatmap(std::span<const HeatmapSample> samples, int width, int height);

struct FnVector {
  std::string dataset_id;
  std::vector<std::string> scene_ids;
  std::vector<double> counts;
};

/// Nullopt when either input has zero variance or the lengths differ or are below 2.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
/// Pearson on average ranks (ties share the mean rank).
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);
std::vector<double> average_ranks(std::span<const double> values);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> values;
};

struct FnCorrelation {
  CorrelationMatrix pearson;
  CorrelationMatrix spearman;
};

/// Pairwise correlations of FN-per-scene vectors. Vectors must cover the same scenes in the same
/// order. Diagonal entries are 1 unless the vector has zero variance.
FnCorrelation fn_correlation(std::span<const FnVector> vectors);

struct EvalConfig {
  double iou_thresh = kMatchIou;
  double score_floor = kCountScoreFloor;
  double nms_iou = kDefaultNmsIou;
  bool apply_nms = true;
};

struct EvalResult {
  std::string model_name;
  std::string prompt_id;
  std::string dataset_id;
  double iou_threshold = kMatchIou;
  double auprc = 0.0;
  double ap_50_95 = 0.0;
  double ar_50_95 = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t images = 0;
};

/// Builds per-image inputs for one (model, prompt): ground truth from `scenes`, predictions from the
/// matching sets (NMS applied when configured). Sets for unknown images are ignored.
std::vector<EvalImage> collect_images(const std::vector<SceneRecord>& scenes,
                                      const std::vector<PredictionSet>& sets, const std::string& model,
                                      const std::string& prompt_id, const EvalConfig& config);

EvalResult evaluate(const std::vector<SceneRecord>& scenes, const std::vector<PredictionSet>& sets,
                    const std::string& model, const std::string& prompt_id, const std::string& dataset_id,
                    const EvalConfig& config = {});

/// One result per (model, prompt) present in `sets`, ordered by model then prompt.
std::vector<EvalResult> evaluate_all(const std::vector<SceneRecord>& scenes,
                                     const std::vector<PredictionSet>& sets, const std::string& dataset_id,
                                     const EvalConfig& config = {});

/// FN counts at config.score_floor summed per source scene, scenes in sorted order.
FnVector fn_per_scene(const std::vector<SceneRecord>& scenes, const std::vector<PredictionSet>& sets,
                      const std::string& model, const std::string& prompt_id, const std::string& dataset_id,
                      const EvalConfig& config = {});

}  // namespace ovdprobe
