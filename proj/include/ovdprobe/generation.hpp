#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ovdprobe/dataset.hpp"
#include "ovdprobe/geometry.hpp"
#include "ovdprobe/http.hpp"
#include "ovdprobe/placement.hpp"
#include "ovdprobe/prompts.hpp"

namespace ovdprobe {

struct GenerationParams {
  std::string sampler_name = "Euler a";
  double denoising_strength = 0.7;
  bool inpainting_fill = false;
  int sampling_steps = 30;
  int padding_mask_crop = 32;
  int batch_size = 2;
  int repeats = 10;

  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const GenerationParams& params);

/// Built-in presets: "V2", "V3", "V4" (hybrid-concept variants) and "single" (single-concept).
/// "V1" has no published parameters and must be supplied by the caller.
std::optional<GenerationParams> builtin_preset(const std::string& name);
std::vector<std::string> builtin_preset_names();

enum class MaskShape { kOval, kRect };

struct InpaintJob {
  std::string scene_id;
  std::filesystem::path image_path;
  int image_w = 0;
  int image_h = 0;
  CropFrame frame;
  MaskShape mask_shape = MaskShape::kOval;
  /// Region to inpaint, in image coordinates; becomes the ground truth of the output.
  BBox target;
  PromptSpec prompt;
  GenerationParams params;
  int repeat_index = 0;
  int batch_index = 0;
  std::uint64_t seed = 0;
  std::string output_id;
  std::optional<SampleSet> sample_set;
};

/// Frame-sized mask raster for the job (oval or rectangle over `target`).
BinaryRaster job_mask(const InpaintJob& job);

std::string make_output_id(const std::string& scene_id, int repeat_index, int batch_index);

/// Per scene: repeats x batch_size jobs with an oval mask over the scene's single object and a
/// 512 frame around it. Batch siblings of one repeat share a prompt and form one request.
std::vector<InpaintJob> plan_hybrid_dataset(const std::vector<SceneRecord>& scenes,
                                            const GenerationParams& params,
                                            const std::vector<std::string>& nouns, std::uint64_t seed);

struct SkippedScene {
  std::string scene_id;
  std::string reason;
};

struct SingleConceptPlan {
  std::vector<InpaintJob> jobs;
  std::vector<SkippedScene> skipped;
};

inline constexpr double kDefaultMinDrivableOverlap = 0.5;

/// Per scene and repeat: one object with enough road overlap and pixels, replaced through a
/// rectangle mask inside a tiered crop.
SingleConceptPlan plan_single_concept_dataset(const std::vector<SceneRecord>& scenes,
                                              const std::vector<std::string>& keywords,
                                              const GenerationParams& params, double min_overlap,
                                              std::uint64_t seed,
                                              std::int64_t min_area = kMinObjectPixels);

/// Frame side used for a single-concept target: crop_tier, raised until the bbox fits.
int single_concept_frame_side(const BBox& target);

/// One job per plan center; the fixed prompt when given, else a seeded hybrid prompt per center.
std::vector<InpaintJob> plan_random_location_dataset(const SceneRecord& scene, const SamplePlan& plan,
                                                     const GenerationParams& params,
                                                     const std::optional<PromptSpec>& fixed_prompt,
                                                     const std::vector<std::string>& nouns = {});

std::string serialize_jobs(const std::vector<InpaintJob>& jobs);
std::vector<InpaintJob> parse_jobs(const std::string& text);

/// Request body sent to POST /inpaint.
struct InpaintRequest {
  std::string body;
  std::string sha256;
};

/// Builds the wire request for a group of batch siblings from the already-cropped source frame.
/// Frames smaller than `scale_to` are upscaled (image bilinear, mask nearest).
InpaintRequest build_inpaint_request(const RgbImage& frame_pixels, const BinaryRaster& mask,
                                     const InpaintJob& lead, int batch_size);

struct GenerationOutcome {
  std::string output_id;
  std::string scene_id;
  CallStatus status = CallStatus::kFailedTransient;
  std::filesystem::path output_path;
  std::string request_sha256;
  int attempts = 0;
  std::string error;
  BBox target;
  int image_w = 0;
  int image_h = 0;
  std::string prompt;
  PixelRect frame;
};

struct ExecuteOptions {
  std::string service_url;
  std::size_t concurrency = 4;
  std::filesystem::path out_dir;
  RetryPolicy retry;
};

/// Runs the jobs against the inpainting service, pastes each returned frame into a copy of its
/// source image and writes <out_dir>/images/<output_id>.png plus <out_dir>/outcomes.jsonl.
/// Failures are recorded per job; the run always completes. Result is ordered by output_id.
std::vector<GenerationOutcome> execute(const std::vector<InpaintJob>& jobs, const ExecuteOptions& options);

/// Downscales (when needed) a generated frame and pastes it over a copy of `source`.
RgbImage paste_back(const RgbImage& source, const RgbImage& generated, const CropFrame& frame);

std::string serialize_outcomes(const std::vector<GenerationOutcome>& outcomes);
std::vector<GenerationOutcome> parse_outcomes(const std::string& text);

struct DiscardResult {
  std::vector<GenerationOutcome> kept;
  std::vector<GenerationOutcome> removed;
  std::vector<std::string> unknown_ids;
};

DiscardResult apply_discard_list(const std::vector<GenerationOutcome>& outcomes,
                                 const std::vector<std::string>& discard_ids);

/// Annotation records for successful outcomes: one object (the inpainted target) per image.
std::vector<SceneRecord> synthetic_scenes(const std::vector<GenerationOutcome>& outcomes);

}  // namespace ovdprobe
