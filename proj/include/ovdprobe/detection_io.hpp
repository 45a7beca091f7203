#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ovdprobe/geometry.hpp"
#include "ovdprobe/http.hpp"
#include "ovdprobe/prompts.hpp"

namespace ovdprobe {

struct Prediction {
  BBox bbox;
  double score = 0.0;
  std::string prompt_id;
  std::string image_id;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct PredictionSet {
  std::string image_id;
  std::string model_name;
  std::string prompt_id;
  std::vector<Prediction> predictions;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

/// Parses prediction records (one JSON object per line) and groups them by
/// (image_id, model, prompt_id) in lexicographic order; file order is kept inside a set.
/// A record without "bbox" and "score" declares an empty set.
std::vector<PredictionSet> parse_predictions(const std::string& text, const std::string& origin = "<memory>");
std::vector<PredictionSet> load_predictions(const std::filesystem::path& path);

std::string serialize_predictions(const std::vector<PredictionSet>& sets);
void save_predictions(const std::vector<PredictionSet>& sets, const std::filesystem::path& path);

struct DetectImage {
  std::string image_id;
  std::filesystem::path path;
};

struct FetchFailure {
  std::string image_id;
  std::string prompt_id;
  CallStatus status = CallStatus::kFailedTransient;
  std::string error;
};

struct FetchResult {
  std::vector<PredictionSet> sets;
  std::vector<FetchFailure> failures;
};

struct FetchOptions {
  std::string service_url;
  std::string model_name;
  double score_floor = 0.0;
  std::size_t concurrency = 4;
  RetryPolicy retry;
};

/// Parses a /detect response body into predictions for one (image, prompt). Throws on schema errors.
std::vector<Prediction> parse_detect_response(const std::string& body, const std::string& image_id,
                                              const std::string& prompt_id);

/// POST /detect for every (image, prompt) pair. Failed pairs are reported and left out of `sets`.
FetchResult fetch_predictions(const std::vector<DetectImage>& images, const std::vector<PromptSpec>& prompts,
                              const FetchOptions& options);

}  // namespace ovdprobe
