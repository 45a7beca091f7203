#include "ovdprobe/generation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ovdprobe/codec.hpp"
#include "ovdprobe/image_io.hpp"
#include "ovdprobe/random.hpp"

namespace ovdprobe {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t scene_seed(std::uint64_t seed, const std::string& scene_id) {
  return derive_seed(seed, fnv1a(scene_id));
}

json to_json(const BBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }
BBox bbox_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}
json to_json(const PixelRect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }
PixelRect rect_from_json(const json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

json to_json(const GenerationParams& p) {
  return {{"sampler_name", p.sampler_name},       {"denoising_strength", p.denoising_strength},
          {"inpainting_fill", p.inpainting_fill}, {"sampling_steps", p.sampling_steps},
          {"padding_mask_crop", p.padding_mask_crop}, {"batch_size", p.batch_size},
          {"repeats", p.repeats}};
}

GenerationParams params_from_json(const json& j) {
  GenerationParams p;
  p.sampler_name = j.at("sampler_name").get<std::string>();
  p.denoising_strength = j.at("denoising_strength").get<double>();
  p.inpainting_fill = j.at("inpainting_fill").get<bool>();
  p.sampling_steps = j.at("sampling_steps").get<int>();
  p.padding_mask_crop = j.at("padding_mask_crop").get<int>();
  p.batch_size = j.at("batch_size").get<int>();
  p.repeats = j.at("repeats").get<int>();
  return p;
}

PromptKind prompt_kind_from_string(const std::string& s) {
  if (s == "hybrid") return PromptKind::kHybrid;
  if (s == "single_concept") return PromptKind::kSingleConcept;
  if (s == "detection") return PromptKind::kDetection;
  throw std::invalid_argument("unknown prompt kind '" + s + "'");
}

CallStatus status_from_string(const std::string& s) {
  if (s == "ok") return CallStatus::kOk;
  if (s == "failed_permanent") return CallStatus::kFailedPermanent;
  if (s == "failed_transient") return CallStatus::kFailedTransient;
  throw std::invalid_argument("unknown outcome status '" + s + "'");
}

/// Wire seeds are non-negative 31-bit integers.
std::int64_t wire_seed(std::uint64_t seed) { return static_cast<std::int64_t>(seed & 0x7fffffffULL); }

int frame_side_for(const SceneRecord& scene) {
  return std::min({kGeneratorSide, scene.width, scene.height});
}

InpaintJob base_job(const SceneRecord& scene, const GenerationParams& params) {
  InpaintJob job;
  job.scene_id = scene.scene_id;
  job.image_path = scene.image_path;
  job.image_w = scene.width;
  job.image_h = scene.height;
  job.params = params;
  return job;
}

class SourceCache {
 public:
  explicit SourceCache(std::size_t capacity) : capacity_(capacity) {}

  std::shared_ptr<const RgbImage> get(const std::filesystem::path& path) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = images_.find(path); it != images_.end()) return it->second;
    }
    auto image = std::make_shared<const RgbImage>(read_image(path));
    std::lock_guard lock(mutex_);
    if (images_.emplace(path, image).second) {
      order_.push_back(path);
      if (order_.size() > capacity_) {
        images_.erase(order_.front());
        order_.pop_front();
      }
    }
    return image;
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::map<std::filesystem::path, std::shared_ptr<const RgbImage>> images_;
  std::deque<std::filesystem::path> order_;
};

json outcome_to_json(const GenerationOutcome& o) {
  return {{"output_id", o.output_id},
          {"scene_id", o.scene_id},
          {"status", to_string(o.status)},
          {"output_path", o.output_path.generic_string()},
          {"request_sha256", o.request_sha256},
          {"attempts", o.attempts},
          {"error", o.error},
          {"target", to_json(o.target)},
          {"image_w", o.image_w},
          {"image_h", o.image_h},
          {"prompt", o.prompt},
          {"frame", to_json(o.frame)},
          {"resample_filter", kResampleFilter}};
}

}  // namespace

void validate(const GenerationParams& p) {
  if (p.sampler_name.empty()) throw std::invalid_argument("sampler_name is empty");
  if (!(p.denoising_strength > 0.0 && p.denoising_strength <= 1.0))
    throw std::invalid_argument("denoising_strength must be in (0, 1]");
  if (p.sampling_steps <= 0) throw std::invalid_argument("sampling_steps must be positive");
  if (p.padding_mask_crop <= 0) throw std::invalid_argument("padding_mask_crop must be positive");
  if (p.batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (p.repeats <= 0) throw std::invalid_argument("repeats must be positive");
}

std::optional<GenerationParams> builtin_preset(const std::string& name) {
  if (name == "V2") return GenerationParams{"Euler a", 0.7, false, 30, 32, 2, 10};
  if (name == "V3") return GenerationParams{"DPM++ 2S a", 0.7, false, 30, 32, 2, 10};
  if (name == "V4") return GenerationParams{"DPM++ 2S a", 1.0, false, 30, 32, 2, 10};
  if (name == "single") return GenerationParams{"Euler a", 1.0, false, 80, 32, 1, 1};
  return std::nullopt;
}

std::vector<std::string> builtin_preset_names() { return {"V2", "V3", "V4", "single"}; }

BinaryRaster job_mask(const InpaintJob& job) {
  return job.mask_shape == MaskShape::kOval ? oval_mask(job.target, job.frame).raster
                                            : rect_mask(job.target, job.frame);
}

std::string make_output_id(const std::string& scene_id, int repeat_index, int batch_index) {
  char suffix[32];
  std::snprintf(suffix, sizeof(suffix), "_r%04d_b%02d", repeat_index, batch_index);
  return scene_id + suffix;
}

std::vector<InpaintJob> plan_hybrid_dataset(const std::vector<SceneRecord>& scenes,
                                            const GenerationParams& params,
                                            const std::vector<std::string>& nouns, std::uint64_t seed) {
  validate(params);
  std::vector<InpaintJob> jobs;
  jobs.reserve(scenes.size() * static_cast<std::size_t>(params.repeats * params.batch_size));
  for (const auto& scene : scenes) {
    if (scene.objects.empty())
      throw std::invalid_argument(scene.scene_id + ": hybrid planning needs an annotated object");
    const BBox target = scene.objects.front().bbox;
    const CropFrame frame = crop_frame_around(target, scene.width, scene.height, frame_side_for(scene));
    const std::uint64_t base = scene_seed(seed, scene.scene_id);
    for (int r = 0; r < params.repeats; ++r) {
      const std::uint64_t prompt_seed = derive_seed(base, static_cast<std::uint64_t>(r));
      const PromptSpec prompt = hybrid_prompt(nouns, prompt_seed);
      for (int b = 0; b < params.batch_size; ++b) {
        InpaintJob job = base_job(scene, params);
        job.frame = frame;
        job.mask_shape = MaskShape::kOval;
        job.target = target;
        job.prompt = prompt;
        job.repeat_index = r;
        job.batch_index = b;
        job.seed = prompt_seed;
        job.output_id = make_output_id(scene.scene_id, r, b);
        jobs.push_back(std::move(job));
      }
    }
  }
  return jobs;
}

int single_concept_frame_side(const BBox& target) {
  int side = crop_tier(target);
  while (side < kGeneratorSide && (target.width() > side || target.height() > side)) side *= 2;
  return side;
}

SingleConceptPlan plan_single_concept_dataset(const std::vector<SceneRecord>& scenes,
                                              const std::vector<std::string>& keywords,
                                              const GenerationParams& params, double min_overlap,
                                              std::uint64_t seed, std::int64_t min_area) {
  validate(params);
  if (keywords.empty()) throw std::invalid_argument("plan_single_concept_dataset: empty keyword list");
  SingleConceptPlan plan;
  for (const auto& scene : scenes) {
    if (!scene.road_mask) {
      plan.skipped.push_back({scene.scene_id, "no road mask"});
      continue;
    }
    std::vector<std::size_t> qualifying;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      const auto& o = scene.objects[i];
      if (o.pixel_area >= min_area && drivable_overlap(o.bbox, *scene.road_mask) >= min_overlap)
        qualifying.push_back(i);
    }
    if (qualifying.empty()) {
      plan.skipped.push_back({scene.scene_id, "no object with >= " + std::to_string(min_area) +
                                                  " px and drivable overlap >= " +
                                                  std::to_string(min_overlap)});
      continue;
    }
    const std::uint64_t base = scene_seed(seed, scene.scene_id);
    for (int r = 0; r < params.repeats; ++r) {
      const std::uint64_t repeat_seed = derive_seed(base, static_cast<std::uint64_t>(r));
      Rng rng(repeat_seed);
      const BBox target = scene.objects[qualifying[uniform_index(rng, qualifying.size())]].bbox;
      const std::string& keyword = keywords[uniform_index(rng, keywords.size())];
      const PromptSpec prompt = single_concept_prompt(keyword);
      const int side = std::min({single_concept_frame_side(target), scene.width, scene.height});
      const CropFrame frame = crop_frame_around(target, scene.width, scene.height, side);
      for (int b = 0; b < params.batch_size; ++b) {
        InpaintJob job = base_job(scene, params);
        job.frame = frame;
        job.mask_shape = MaskShape::kRect;
        job.target = target;
        job.prompt = prompt;
        job.repeat_index = r;
        job.batch_index = b;
        job.seed = repeat_seed;
        job.output_id = make_output_id(scene.scene_id, r, b);
        plan.jobs.push_back(std::move(job));
      }
    }
  }
  return plan;
}

std::vector<InpaintJob> plan_random_location_dataset(const SceneRecord& scene, const SamplePlan& plan,
                                                     const GenerationParams& params,
                                                     const std::optional<PromptSpec>& fixed_prompt,
                                                     const std::vector<std::string>& nouns) {
  validate(params);
  if (!fixed_prompt && nouns.empty() && !plan.centers.empty())
    throw std::invalid_argument("plan_random_location_dataset: need a fixed prompt or a noun list");
  std::vector<InpaintJob> jobs;
  jobs.reserve(plan.centers.size());
  GenerationParams single = params;
  single.batch_size = 1;
  single.repeats = 1;
  for (std::size_t i = 0; i < plan.centers.size(); ++i) {
    const auto& c = plan.centers[i];
    InpaintJob job = base_job(scene, single);
    job.target = plan.bbox_for(c);
    job.frame = crop_frame_around(job.target, scene.width, scene.height, frame_side_for(scene));
    job.mask_shape = MaskShape::kOval;
    job.seed = derive_seed(plan.seed, i);
    job.prompt = fixed_prompt ? *fixed_prompt : hybrid_prompt(nouns, job.seed);
    job.repeat_index = static_cast<int>(i);
    job.batch_index = 0;
    job.sample_set = c.set;
    job.output_id = make_output_id(scene.scene_id, job.repeat_index, 0);
    jobs.push_back(std::move(job));
  }
  return jobs;
}

std::string serialize_jobs(const std::vector<InpaintJob>& jobs) {
  std::string out;
  for (const auto& j : jobs) {
    json rec = {{"output_id", j.output_id},
                {"scene_id", j.scene_id},
                {"image", j.image_path.generic_string()},
                {"image_w", j.image_w},
                {"image_h", j.image_h},
                {"frame", to_json(j.frame.rect)},
                {"scale_to", j.frame.scale_to},
                {"mask", j.mask_shape == MaskShape::kOval ? "oval" : "rect"},
                {"target", to_json(j.target)},
                {"prompt", {{"kind", to_string(j.prompt.kind)},
                            {"text", j.prompt.text},
                            {"components", j.prompt.components}}},
                {"params", to_json(j.params)},
                {"repeat_index", j.repeat_index},
                {"batch_index", j.batch_index},
                {"seed", j.seed}};
    if (j.prompt.seed) rec["prompt"]["seed"] = *j.prompt.seed;
    if (j.sample_set) rec["sample_set"] = to_string(*j.sample_set);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<InpaintJob> parse_jobs(const std::string& text) {
  std::vector<InpaintJob> jobs;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(line);
      InpaintJob j;
      j.output_id = rec.at("output_id").get<std::string>();
      j.scene_id = rec.at("scene_id").get<std::string>();
      j.image_path = rec.at("image").get<std::string>();
      j.image_w = rec.at("image_w").get<int>();
      j.image_h = rec.at("image_h").get<int>();
      j.frame = {rect_from_json(rec.at("frame")), rec.at("scale_to").get<int>()};
      j.mask_shape = rec.at("mask").get<std::string>() == "rect" ? MaskShape::kRect : MaskShape::kOval;
      j.target = bbox_from_json(rec.at("target"));
      const auto& p = rec.at("prompt");
      j.prompt.kind = prompt_kind_from_string(p.at("kind").get<std::string>());
      j.prompt.text = p.at("text").get<std::string>();
      j.prompt.components = p.at("components").get<std::vector<std::string>>();
      if (p.contains("seed")) j.prompt.seed = p.at("seed").get<std::uint64_t>();
      j.params = params_from_json(rec.at("params"));
      j.repeat_index = rec.at("repeat_index").get<int>();
      j.batch_index = rec.at("batch_index").get<int>();
      j.seed = rec.at("seed").get<std::uint64_t>();
      if (rec.contains("sample_set")) j.sample_set = sample_set_from_string(rec["sample_set"].get<std::string>());
      jobs.push_back(std::move(j));
    } catch (const std::exception& e) {
      throw ParseError("job manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return jobs;
}

InpaintRequest build_inpaint_request(const RgbImage& frame_pixels, const BinaryRaster& mask,
                                     const InpaintJob& lead, int batch_size) {
  const int side = lead.frame.scale_to;
  const RgbImage image = resize_bilinear(frame_pixels, side, side);
  const BinaryRaster scaled_mask = resize_nearest(mask, side, side);
  const json body = {{"image", base64_encode(encode_png(image))},
                     {"mask", base64_encode(encode_mask_png(scaled_mask))},
                     {"prompt", lead.prompt.text},
                     {"sampler_name", lead.params.sampler_name},
                     {"steps", lead.params.sampling_steps},
                     {"denoising_strength", lead.params.denoising_strength},
                     {"inpainting_fill", lead.params.inpainting_fill},
                     {"padding_mask_crop", lead.params.padding_mask_crop},
                     {"batch_size", batch_size},
                     {"seed", wire_seed(lead.seed)}};
  InpaintRequest req;
  req.body = body.dump();
  req.sha256 = sha256_hex(req.body);
  return req;
}

RgbImage paste_back(const RgbImage& source, const RgbImage& generated, const CropFrame& frame) {
  const int side = frame.side();
  RgbImage out = source;
  paste(out, resize_bilinear(generated, side, side), frame.rect.x0, frame.rect.y0);
  return out;
}

std::vector<GenerationOutcome> execute(const std::vector<InpaintJob>& jobs, const ExecuteOptions& options) {
  const ServiceEndpoint endpoint = parse_service_url(options.service_url);
  const auto image_dir = options.out_dir / "images";
  std::filesystem::create_directories(image_dir);

  // batch siblings (same scene and repeat) travel in one request
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> grouped;
  for (std::size_t i = 0; i < jobs.size(); ++i) grouped[{jobs[i].scene_id, jobs[i].repeat_index}].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [key, members] : grouped) {
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return jobs[a].batch_index < jobs[b].batch_index; });
    groups.push_back(std::move(members));
  }

  std::vector<GenerationOutcome> outcomes(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    auto& o = outcomes[i];
    o.output_id = j.output_id;
    o.scene_id = j.scene_id;
    o.target = j.target;
    o.image_w = j.image_w;
    o.image_h = j.image_h;
    o.prompt = j.prompt.text;
    o.frame = j.frame.rect;
  }

  SourceCache cache(8);
  std::mutex log_mutex;
  std::ofstream log(options.out_dir / "outcomes.log.jsonl", std::ios::app);
  auto record = [&](std::size_t i) {
    std::lock_guard lock(log_mutex);
    log << outcome_to_json(outcomes[i]).dump() << '\n';
    log.flush();
  };

  parallel_for(groups.size(), options.concurrency, [&](std::size_t g) {
    const auto& members = groups[g];
    const InpaintJob& lead = jobs[members.front()];
    auto fail_all = [&](CallStatus status, const std::string& error, int attempts) {
      for (auto i : members) {
        outcomes[i].status = status;
        outcomes[i].error = error;
        outcomes[i].attempts = attempts;
        record(i);
      }
    };

    std::shared_ptr<const RgbImage> source;
    InpaintRequest request;
    try {
      source = cache.get(lead.image_path);
      request = build_inpaint_request(crop(*source, lead.frame.rect), job_mask(lead), lead,
                                      static_cast<int>(members.size()));
    } catch (const std::exception& e) {
      fail_all(CallStatus::kFailedPermanent, std::string("request preparation: ") + e.what(), 0);
      return;
    }
    for (auto i : members) outcomes[i].request_sha256 = request.sha256;

    const CallResult call = post_json(endpoint, "/inpaint", request.body, options.retry);
    if (call.status != CallStatus::kOk) {
      fail_all(call.status, call.error, call.attempts);
      return;
    }

    std::vector<std::string> images;
    try {
      images = json::parse(call.body).at("images").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      fail_all(CallStatus::kFailedPermanent, std::string("malformed response: ") + e.what(), call.attempts);
      return;
    }

    for (std::size_t k = 0; k < members.size(); ++k) {
      auto& o = outcomes[members[k]];
      o.attempts = call.attempts;
      if (k >= images.size()) {
        o.status = CallStatus::kFailedPermanent;
        o.error = "response carried " + std::to_string(images.size()) + " images for a batch of " +
                  std::to_string(members.size());
        record(members[k]);
        continue;
      }
      try {
        const RgbImage generated = decode_image(base64_decode(images[k]));
        const RgbImage composed = paste_back(*source, generated, jobs[members[k]].frame);
        o.output_path = image_dir / (o.output_id + ".png");
        write_png(composed, o.output_path);
        o.status = CallStatus::kOk;
      } catch (const std::exception& e) {
        o.status = CallStatus::kFailedPermanent;
        o.error = std::string("bad generated image: ") + e.what();
      }
      record(members[k]);
    }
  });

  std::sort(outcomes.begin(), outcomes.end(),
            [](const GenerationOutcome& a, const GenerationOutcome& b) { return a.output_id < b.output_id; });
  write_text_file(options.out_dir / "outcomes.jsonl", serialize_outcomes(outcomes));

  const auto failed = std::count_if(outcomes.begin(), outcomes.end(),
                                    [](const auto& o) { return o.status != CallStatus::kOk; });
  spdlog::info("inpainting: {} jobs, {} failed", outcomes.size(), failed);
  return outcomes;
}

std::string serialize_outcomes(const std::vector<GenerationOutcome>& outcomes) {
  std::string out;
  for (const auto& o : outcomes) {
    out += outcome_to_json(o).dump();
    out += '\n';
  }
  return out;
}

std::vector<GenerationOutcome> parse_outcomes(const std::string& text) {
  std::vector<GenerationOutcome> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      GenerationOutcome o;
      o.output_id = j.at("output_id").get<std::string>();
      o.scene_id = j.at("scene_id").get<std::string>();
      o.status = status_from_string(j.at("status").get<std::string>());
      o.output_path = j.at("output_path").get<std::string>();
      o.request_sha256 = j.value("request_sha256", "");
      o.attempts = j.value("attempts", 0);
      o.error = j.value("error", "");
      o.target = bbox_from_json(j.at("target"));
      o.image_w = j.at("image_w").get<int>();
      o.image_h = j.at("image_h").get<int>();
      o.prompt = j.value("prompt", "");
      if (j.contains("frame")) o.frame = rect_from_json(j["frame"]);
      out.push_back(std::move(o));
    } catch (const std::exception& e) {
      throw ParseError("outcome manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

DiscardResult apply_discard_list(const std::vector<GenerationOutcome>& outcomes,
                                 const std::vector<std::string>& discard_ids) {
  const std::set<std::string> discard(discard_ids.begin(), discard_ids.end());
  std::set<std::string> present;
  DiscardResult result;
  for (const auto& o : outcomes) {
    present.insert(o.output_id);
    (discard.count(o.output_id) ? result.removed : result.kept).push_back(o);
  }
  for (const auto& id : discard)
    if (!present.count(id)) result.unknown_ids.push_back(id);
  for (const auto& id : result.unknown_ids) spdlog::warn("discard list names unknown output '{}'", id);
  spdlog::info("discard list: kept {}, removed {}", result.kept.size(), result.removed.size());
  return result;
}

std::vector<SceneRecord> synthetic_scenes(const std::vector<GenerationOutcome>& outcomes) {
  std::vector<SceneRecord> scenes;
  for (const auto& o : outcomes) {
    if (o.status != CallStatus::kOk) continue;
    SceneRecord s;
    s.scene_id = o.output_id;
    s.source_scene_id = o.scene_id;
    s.image_path = o.output_path;
    s.width = o.image_w;
    s.height = o.image_h;
    GroundTruthObject obj;
    obj.bbox = {std::clamp(o.target.x_min, 0.0, double(o.image_w)), std::clamp(o.target.y_min, 0.0, double(o.image_h)),
                std::clamp(o.target.x_max, 0.0, double(o.image_w)), std::clamp(o.target.y_max, 0.0, double(o.image_h))};
    obj.pixel_area = std::max<std::int64_t>(1, std::llround(obj.bbox.area()));
    obj.class_label = o.prompt;
    s.objects.push_back(std::move(obj));
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace ovdprobe
