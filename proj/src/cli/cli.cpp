#include "ovdprobe/cli.hpp"

#include <functional>
#include <iostream>
#include <list>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ovdprobe/codec.hpp"
#include "ovdprobe/dataset.hpp"
#include "ovdprobe/detection_io.hpp"
#include "ovdprobe/eval.hpp"
#include "ovdprobe/generation.hpp"
#include "ovdprobe/image_io.hpp"
#include "ovdprobe/placement.hpp"
#include "ovdprobe/probes.hpp"
#include "ovdprobe/prompts.hpp"
#include "ovdprobe/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ovdprobe::cli {
namespace {

struct Stage;
using StageBody = std::function<void(Settings&, Stage&, RunManifest&)>;

struct Stage {
  std::string name;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> flags;
  std::map<std::string, std::vector<std::string>> lists;
  StageBody body;

  void opt(const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        "--" + key, [this, key](const std::string& v) { flags[key] = v; }, help);
  }
  void list(const std::string& key, const std::string& help) {
    app->add_option("--" + key, lists[key], help)->expected(1, -1);
  }
  const std::vector<std::string>& require_list(const std::string& key) const {
    const auto& v = lists.at(key);
    if (v.empty()) throw ConfigError("missing required setting --" + key);
    return v;
  }
};

void init_logging(const std::string& level) {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("ovdprobe")); });
  spdlog::set_level(spdlog::level::from_str(level));
}

std::string safe_name(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
  return s;
}

fs::path out_dir(Settings& s) {
  fs::path out = s.required_str("out");
  fs::create_directories(out);
  return out;
}

std::vector<SceneRecord> load_scenes(const fs::path& path, bool masks) {
  const fs::path abs = fs::absolute(path);
  auto loaded = load_dataset(abs, abs.parent_path(), {masks});
  for (const auto& w : loaded.warnings) spdlog::warn("{}", w);
  return std::move(loaded.scenes);
}

void save_scenes(const std::vector<SceneRecord>& scenes, const fs::path& path) {
  save_dataset(scenes, path, fs::absolute(path).parent_path());
}

RetryPolicy retry_policy(Settings& s) {
  RetryPolicy p;
  p.max_retries = static_cast<int>(s.integer("retries", p.max_retries, 0, 20));
  p.timeout = std::chrono::seconds(s.integer("timeout", p.timeout.count(), 1, 86400));
  p.initial_backoff = std::chrono::milliseconds(s.integer("backoff-ms", p.initial_backoff.count(), 0, 60000));
  return p;
}

GenerationParams resolve_params(Settings& s, const std::string& default_preset) {
  const std::string preset = s.str("preset", default_preset);
  auto builtin = builtin_preset(preset);
  if (!builtin && preset != "V1" && preset != "custom")
    throw ConfigError("unknown preset '" + preset + "'");
  GenerationParams p = builtin.value_or(GenerationParams{});
  const bool custom = !builtin;
  auto need = [&](const char* key) {
    if (custom) throw ConfigError("preset '" + preset + "' has no built-in parameters; set --" + key);
  };
  if (auto v = s.optional_str("sampler")) p.sampler_name = *v;
  else need("sampler");
  if (auto v = s.optional_real("denoising", 0.0, 1.0)) p.denoising_strength = *v;
  else need("denoising");
  if (s.raw("fill")) p.inpainting_fill = s.boolean("fill", false);
  else need("fill");
  p.sampling_steps = static_cast<int>(s.integer("steps", p.sampling_steps, 1, 1000));
  p.padding_mask_crop = static_cast<int>(s.integer("padding", p.padding_mask_crop, 0, 512));
  p.batch_size = static_cast<int>(s.integer("batch-size", p.batch_size, 1, 64));
  p.repeats = static_cast<int>(s.integer("repeats", p.repeats, 1, 100000));
  validate(p);
  return p;
}

std::vector<std::string> word_list(Settings& s, const std::string& key) {
  if (auto f = s.optional_str(key)) return read_list_file(*f);
  return default_keywords();
}

void add_generation_opts(Stage& st) {
  st.opt("preset", "Generation preset (V1, V2, V3, V4, single)");
  st.opt("sampler", "Sampler name override");
  st.opt("denoising", "Denoising strength override");
  st.opt("fill", "Inpainting fill override (true/false)");
  st.opt("steps", "Sampling steps override");
  st.opt("padding", "Padding mask crop override");
  st.opt("batch-size", "Batch size override");
  st.opt("repeats", "Repeats override");
}

void write_jobs(const std::vector<InpaintJob>& jobs, const fs::path& out, RunManifest& m) {
  const auto path = out / "jobs.jsonl";
  write_text_file(path, serialize_jobs(jobs));
  m.outputs.push_back(path);
  m.notes["jobs"] = std::to_string(jobs.size());
  std::cout << m.stage << ": " << jobs.size() << " jobs -> " << path.string() << "\n";
}

// --- stages ---------------------------------------------------------------

void stage_ingest(Settings& s, Stage&, RunManifest& m) {
  const fs::path ann = s.required_str("annotations");
  const fs::path root = s.str("image-root", fs::absolute(ann).parent_path().string());
  const auto min_area = s.integer("min-area", kMinObjectPixels, 0, 1LL << 40);
  const bool single = s.boolean("single-object", true);
  const bool masks = s.boolean("road-masks", true);
  const fs::path out = out_dir(s);
  m.inputs.push_back(ann);

  auto loaded = load_dataset(fs::absolute(ann), fs::absolute(root), {masks});
  for (const auto& w : loaded.warnings) spdlog::warn("{}", w);
  const auto eligible = filter_eligible(loaded.scenes, min_area, single);
  const auto path = out / "dataset.jsonl";
  save_scenes(eligible, path);
  m.outputs.push_back(path);
  m.notes["scenes"] = std::to_string(loaded.scenes.size());
  m.notes["eligible"] = std::to_string(eligible.size());
  m.notes["warnings"] = std::to_string(loaded.warnings.size());
  std::cout << "ingest: " << eligible.size() << " of " << loaded.scenes.size() << " scenes eligible -> "
            << path.string() << "\n";
}

void stage_plan_hybrid(Settings& s, Stage&, RunManifest& m) {
  const fs::path ds = s.required_str("dataset");
  const auto params = resolve_params(s, "V2");
  const auto nouns = word_list(s, "nouns");
  const auto seed = s.u64("seed", 0);
  const fs::path out = out_dir(s);
  m.inputs.push_back(ds);
  write_jobs(plan_hybrid_dataset(load_scenes(ds, false), params, nouns, seed), out, m);
}

void stage_plan_single(Settings& s, Stage&, RunManifest& m) {
  const fs::path ds = s.required_str("dataset");
  const auto params = resolve_params(s, "single");
  const auto keywords = word_list(s, "keywords");
  const double min_overlap = s.real("min-overlap", kDefaultMinDrivableOverlap, 0.0, 1.0);
  const auto min_area = s.integer("min-area", kMinObjectPixels, 0, 1LL << 40);
  const auto seed = s.u64("seed", 0);
  const fs::path out = out_dir(s);
  m.inputs.push_back(ds);

  const auto plan = plan_single_concept_dataset(load_scenes(ds, true), keywords, params, min_overlap, seed, min_area);
  std::string skipped;
  for (const auto& sk : plan.skipped) skipped += json({{"scene_id", sk.scene_id}, {"reason", sk.reason}}).dump() + "\n";
  write_text_file(out / "skipped.jsonl", skipped);
  m.outputs.push_back(out / "skipped.jsonl");
  m.notes["skipped"] = std::to_string(plan.skipped.size());
  write_jobs(plan.jobs, out, m);
}

void stage_plan_random(Settings& s, Stage&, RunManifest& m) {
  const fs::path ds = s.required_str("dataset");
  const std::string scene_id = s.required_str("scene");
  const auto params = resolve_params(s, "single");
  const auto seed = s.u64("seed", 0);
  SamplePlanOptions opts;
  opts.n_road = static_cast<std::size_t>(s.integer("n-road", 1600, 0, 1000000));
  opts.n_border = static_cast<std::size_t>(s.integer("n-border", 400, 0, 1000000));
  opts.bbox_w = static_cast<int>(s.integer("bbox-w", 100, 1, 100000));
  opts.bbox_h = static_cast<int>(s.integer("bbox-h", 130, 1, 100000));
  const int margin = static_cast<int>(s.integer("margin", kBorderMargin, 0, 100000));
  const int depth = static_cast<int>(s.integer("border-depth", kDefaultBorderDepth, 1, 100000));
  const auto keyword = s.optional_str("prompt");
  const auto nouns = word_list(s, "nouns");
  const fs::path out = out_dir(s);
  m.inputs.push_back(ds);

  const auto scenes = load_scenes(ds, true);
  auto it = std::find_if(scenes.begin(), scenes.end(), [&](const SceneRecord& r) { return r.scene_id == scene_id; });
  if (it == scenes.end()) throw std::runtime_error("scene '" + scene_id + "' not in " + ds.string());
  if (!it->road_mask) throw std::runtime_error("scene '" + scene_id + "' has no road mask");

  const auto sets = build_sample_sets(*it->road_mask, margin, depth, scene_id);
  const auto plan = sample_plan(sets, seed, scene_id, margin, depth, opts);
  const auto plan_path = out / "plan.json";
  write_text_file(plan_path, serialize_sample_plan(plan));
  m.outputs.push_back(plan_path);
  m.notes["road_only_candidates"] = std::to_string(sets.road_only.size());
  m.notes["border_candidates"] = std::to_string(sets.border.size());

  std::optional<PromptSpec> fixed;
  if (keyword) fixed = single_concept_prompt(*keyword);
  write_jobs(plan_random_location_dataset(*it, plan, params, fixed, nouns), out, m);
}

void stage_inpaint(Settings& s, Stage&, RunManifest& m) {
  const fs::path jobs_path = s.required_str("jobs");
  ExecuteOptions opts;
  opts.service_url = s.required_str("inpaint-url");
  opts.concurrency = static_cast<std::size_t>(s.integer("concurrency", 4, 1, 256));
  opts.retry = retry_policy(s);
  const auto discard = s.optional_str("discard");
  opts.out_dir = fs::absolute(out_dir(s));
  m.inputs.push_back(jobs_path);

  const auto jobs = parse_jobs(read_text_file(jobs_path));
  const auto outcomes = execute(jobs, opts);
  std::vector<GenerationOutcome> ok;
  for (const auto& o : outcomes)
    if (o.status == CallStatus::kOk) ok.push_back(o);
  m.outputs.push_back(opts.out_dir / "outcomes.jsonl");
  m.notes["succeeded"] = std::to_string(ok.size());
  m.notes["failed"] = std::to_string(outcomes.size() - ok.size());
  if (!jobs.empty() && ok.empty()) throw std::runtime_error("inpaint: every job failed");

  std::vector<GenerationOutcome> kept = ok;
  if (discard) {
    m.inputs.push_back(*discard);
    auto d = apply_discard_list(ok, read_list_file(*discard));
    kept = std::move(d.kept);
    save_scenes(synthetic_scenes(d.removed), opts.out_dir / "removed.jsonl");
    m.outputs.push_back(opts.out_dir / "removed.jsonl");
    m.notes["discarded"] = std::to_string(d.removed.size());
  }
  const auto ds = opts.out_dir / "dataset.jsonl";
  save_scenes(synthetic_scenes(kept), ds);
  m.outputs.push_back(ds);
  std::cout << "inpaint: " << ok.size() << " of " << outcomes.size() << " outputs generated, " << kept.size()
            << " kept -> " << ds.string() << "\n";
}

void stage_probe(Settings& s, Stage&, RunManifest& m) {
  std::string kind_name = s.required_str("kind");
  if (kind_name == "noise") {
    const auto color = s.str("color", "white");
    if (color != "white" && color != "grey" && color != "gray")
      throw ConfigError("--color must be white or grey");
    kind_name = color == "white" ? "noise_white" : "noise_grey";
  }
  const ProbeKind kind = probe_kind_from_string(kind_name);
  const fs::path out = out_dir(s);

  if (kind == ProbeKind::kRemoved) {
    const fs::path outcomes = s.required_str("outcomes");
    const fs::path discard = s.required_str("discard");
    m.inputs = {outcomes, discard};
    const auto removed = removed_probe_set(parse_outcomes(read_text_file(outcomes)), read_list_file(discard));
    save_scenes(removed, out / "dataset.jsonl");
    m.outputs.push_back(out / "dataset.jsonl");
    m.notes["images"] = std::to_string(removed.size());
    std::cout << "probe: removed set of " << removed.size() << " images\n";
    return;
  }

  const fs::path ds = s.required_str("dataset");
  const double threshold = s.real("threshold", kBrightnessThreshold, 0.0, 255.0);
  m.inputs.push_back(ds);
  const auto scenes = load_scenes(ds, false);
  fs::create_directories(out / "images");

  std::vector<SceneRecord> produced;
  std::string log;
  for (const auto& scene : scenes) {
    json entry = {{"scene_id", scene.scene_id}, {"kind", to_string(kind)}};
    try {
      RgbImage img = read_image(scene.image_path);
      json applied = json::array();
      for (const auto& o : scene.objects) {
        ProbeSpec spec;
        spec.kind = kind;
        spec.target_bbox = o.bbox;
        spec.threshold = threshold;
        json a = {{"bbox", {o.bbox.x_min, o.bbox.y_min, o.bbox.x_max, o.bbox.y_max}}};
        if (kind == ProbeKind::kPattern) {
          spec.source_rect = default_pattern_source(img, o.bbox);
          if (!spec.source_rect) throw ProbeError("no room for a pattern source next to the bbox");
          const auto& r = *spec.source_rect;
          a["source_rect"] = {r.x0, r.y0, r.x1, r.y1};
        }
        if (kind == ProbeKind::kNoiseWhite || kind == ProbeKind::kNoiseGrey) {
          const Rgb c = kind == ProbeKind::kNoiseWhite ? kWhite : kGrey;
          a["color"] = {c.r, c.g, c.b};
        }
        if (kind == ProbeKind::kBrightnessSmooth) a["threshold"] = threshold;
        img = apply_probe(img, spec);
        applied.push_back(std::move(a));
      }
      SceneRecord rec = scene;
      rec.image_path = fs::absolute(out / "images" / (safe_name(scene.scene_id) + ".png"));
      rec.road_mask.reset();
      write_png(img, rec.image_path);
      entry["output"] = rec.image_path.filename().string();
      entry["applied"] = std::move(applied);
      produced.push_back(std::move(rec));
    } catch (const std::exception& e) {
      spdlog::warn("probe: {}: {}", scene.scene_id, e.what());
      entry["error"] = e.what();
    }
    log += entry.dump() + "\n";
  }
  write_text_file(out / "probes.jsonl", log);
  save_scenes(produced, out / "dataset.jsonl");
  m.outputs = {out / "probes.jsonl", out / "dataset.jsonl", out / "images"};
  m.notes["images"] = std::to_string(produced.size());
  if (!scenes.empty() && produced.empty()) throw std::runtime_error("probe: no image could be produced");
  std::cout << "probe: " << produced.size() << " " << to_string(kind) << " images -> " << (out / "images").string()
            << "\n";
}

void stage_detect(Settings& s, Stage&, RunManifest& m) {
  const fs::path ds = s.required_str("dataset");
  FetchOptions opts;
  opts.service_url = s.required_str("detect-url");
  opts.model_name = s.required_str("model");
  opts.score_floor = s.real("score-floor", 0.0, 0.0, 1.0);
  opts.concurrency = static_cast<std::size_t>(s.integer("concurrency", 4, 1, 256));
  opts.retry = retry_policy(s);
  const auto prompt_ids = parse_list(s.str("prompts", "p1\np2\np3\np4\np5"));
  const fs::path out = out_dir(s);
  m.inputs.push_back(ds);

  std::vector<PromptSpec> prompts;
  for (const auto& id : prompt_ids) {
    // accept comma separated ids as well as one per line
    std::stringstream ss(id);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) prompts.push_back(detection_prompt(part));
  }
  std::vector<DetectImage> images;
  for (const auto& scene : load_scenes(ds, false)) images.push_back({scene.scene_id, scene.image_path});

  const auto result = fetch_predictions(images, prompts, opts);
  save_predictions(result.sets, out / "predictions.jsonl");
  std::string failures;
  for (const auto& f : result.failures)
    failures += json({{"image_id", f.image_id}, {"prompt_id", f.prompt_id}, {"status", to_string(f.status)},
                      {"error", f.error}})
                    .dump() +
                "\n";
  write_text_file(out / "failures.jsonl", failures);
  m.outputs = {out / "predictions.jsonl", out / "failures.jsonl"};
  m.notes["sets"] = std::to_string(result.sets.size());
  m.notes["failures"] = std::to_string(result.failures.size());
  if (!images.empty() && result.sets.empty()) throw std::runtime_error("detect: every request failed");
  std::cout << "detect: " << result.sets.size() << " prediction sets, " << result.failures.size() << " failures -> "
            << (out / "predictions.jsonl").string() << "\n";
}

EvalConfig eval_config(Settings& s, double default_floor) {
  EvalConfig c;
  c.iou_thresh = s.real("iou", kMatchIou, 0.0, 1.0);
  c.score_floor = s.real("score-floor", default_floor, 0.0, 1.0);
  c.nms_iou = s.real("nms-iou", kDefaultNmsIou, 0.0, 1.0);
  c.apply_nms = s.boolean("nms", true);
  return c;
}

std::vector<PredictionSet> load_all_predictions(const std::vector<std::string>& files, RunManifest& m) {
  std::vector<PredictionSet> sets;
  for (const auto& f : files) {
    m.inputs.push_back(f);
    auto part = load_predictions(f);
    sets.insert(sets.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (sets.empty()) throw std::runtime_error("no prediction records in the given files");
  return sets;
}

void stage_eval(Settings& s, Stage& st, RunManifest& m) {
  const fs::path gt = s.required_str("gt");
  const auto config = eval_config(s, kCountScoreFloor);
  const std::string dataset_id =
      s.str("dataset-id", fs::absolute(gt).parent_path().filename().string());
  const fs::path out = out_dir(s);
  m.inputs.push_back(gt);
  const auto sets = load_all_predictions(st.require_list("preds"), m);
  const auto scenes = load_scenes(gt, false);

  const auto results = evaluate_all(scenes, sets, dataset_id, config);
  write_text_file(out / "results.jsonl", serialize_results(results));
  const auto tables = emit_tables(results, out / "results");

  std::string fn_lines;
  for (const auto& r : results) {
    const auto v = fn_per_scene(scenes, sets, r.model_name, r.prompt_id, dataset_id, config);
    fn_lines += json({{"dataset_id", v.dataset_id}, {"model", r.model_name}, {"prompt_id", r.prompt_id},
                      {"scene_ids", v.scene_ids}, {"counts", v.counts}})
                    .dump() +
                "\n";
  }
  write_text_file(out / "fn_vectors.jsonl", fn_lines);
  m.outputs = {out / "results.jsonl", tables.csv, tables.text, out / "fn_vectors.jsonl"};
  std::cout << "eval: " << results.size() << " results -> " << tables.csv.string() << "\n";
}

void stage_correlate(Settings& s, Stage& st, RunManifest& m) {
  const auto model = s.optional_str("model");
  const auto prompt = s.optional_str("prompt");
  const fs::path out = out_dir(s);

  struct Entry {
    FnVector v;
    std::string model, prompt;
  };
  std::vector<Entry> entries;
  for (const auto& f : st.require_list("fn")) {
    m.inputs.push_back(f);
    std::istringstream in(read_text_file(f));
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json j = json::parse(line);
      Entry e;
      e.model = j.at("model").get<std::string>();
      e.prompt = j.at("prompt_id").get<std::string>();
      if ((model && e.model != *model) || (prompt && e.prompt != *prompt)) continue;
      e.v.dataset_id = j.at("dataset_id").get<std::string>();
      e.v.scene_ids = j.at("scene_ids").get<std::vector<std::string>>();
      e.v.counts = j.at("counts").get<std::vector<double>>();
      entries.push_back(std::move(e));
    }
  }
  if (entries.size() < 2) throw std::runtime_error("correlate: need at least two FN vectors after filtering");

  std::set<std::string> common(entries.front().v.scene_ids.begin(), entries.front().v.scene_ids.end());
  std::map<std::string, int> label_uses;
  for (const auto& e : entries) {
    std::set<std::string> ids(e.v.scene_ids.begin(), e.v.scene_ids.end());
    std::set<std::string> keep;
    std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(), std::inserter(keep, keep.end()));
    common = std::move(keep);
    ++label_uses[e.v.dataset_id];
  }
  std::vector<FnVector> vectors;
  for (const auto& e : entries) {
    FnVector v;
    v.dataset_id = label_uses[e.v.dataset_id] > 1 ? e.v.dataset_id + "/" + e.model + "/" + e.prompt : e.v.dataset_id;
    for (std::size_t i = 0; i < e.v.scene_ids.size(); ++i) {
      if (!common.count(e.v.scene_ids[i])) continue;
      v.scene_ids.push_back(e.v.scene_ids[i]);
      v.counts.push_back(e.v.counts[i]);
    }
    if (v.scene_ids.size() != e.v.scene_ids.size())
      spdlog::warn("correlate: {} scenes of '{}' not shared by every vector were dropped",
                   e.v.scene_ids.size() - v.scene_ids.size(), v.dataset_id);
    vectors.push_back(std::move(v));
  }
  const auto corr = fn_correlation(vectors);
  write_text_file(out / "pearson.csv", correlation_csv(corr.pearson));
  write_text_file(out / "spearman.csv", correlation_csv(corr.spearman));
  m.outputs = {out / "pearson.csv", out / "spearman.csv"};
  m.notes["scenes"] = std::to_string(common.size());
  std::cout << "correlate: " << vectors.size() << " vectors over " << common.size() << " scenes -> "
            << (out / "pearson.csv").string() << "\n";
}

void stage_heatmap(Settings& s, Stage& st, RunManifest& m) {
  const fs::path ds = s.required_str("dataset");
  const auto config = eval_config(s, kHeatmapScoreFloor);
  const std::string mode = s.str("mode", "both");
  const auto model = s.optional_str("model");
  const auto prompt = s.optional_str("prompt");
  const fs::path out = out_dir(s);
  std::vector<HeatmapMode> modes;
  if (mode == "both") modes = {HeatmapMode::kRecall, HeatmapMode::kFnCount};
  else modes = {heatmap_mode_from_string(mode)};
  m.inputs.push_back(ds);
  const auto sets = load_all_predictions(st.require_list("preds"), m);
  const auto scenes = load_scenes(ds, false);

  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& p : sets)
    if ((!model || p.model_name == *model) && (!prompt || p.prompt_id == *prompt)) keys.emplace(p.model_name, p.prompt_id);
  if (keys.empty()) throw std::runtime_error("heatmap: no predictions for the requested model/prompt");

  std::map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < scenes.size(); ++i)
    by_source[scenes[i].source_scene_id.empty() ? scenes[i].scene_id : scenes[i].source_scene_id].push_back(i);

  std::size_t rendered = 0;
  for (const auto& [mdl, pid] : keys) {
    const auto images = collect_images(scenes, sets, mdl, pid, config);
    for (const auto& [source, idx] : by_source) {
      const auto& first = scenes[idx.front()];
      std::vector<HeatmapSample> samples;
      for (std::size_t i : idx) {
        if (scenes[i].width != first.width || scenes[i].height != first.height)
          throw std::runtime_error("heatmap: images of scene '" + source + "' differ in size");
        const auto r = match(images[i].predictions, images[i].ground_truth, config.iou_thresh, config.score_floor);
        std::vector<bool> hit(images[i].ground_truth.size(), false);
        for (const auto& p : r.matched_pairs) hit[p.ground_truth] = true;
        for (std::size_t g = 0; g < hit.size(); ++g)
          samples.push_back({images[i].ground_truth[g], hit[g] ? SampleOutcome::kTruePositive : SampleOutcome::kFalseNegative});
      }
      const auto grid = heatmap(samples, first.width, first.height);
      for (auto md : modes) {
        const auto path = out / (safe_name(source + "_" + mdl + "_" + pid + "_" + to_string(md)) + ".png");
        const auto r = render_heatmap(grid, path, md);
        m.outputs.push_back(path);
        m.notes[path.filename().string()] = "samples=" + std::to_string(samples.size()) +
                                            " max_fn=" + std::to_string(r.max_fn) +
                                            " covered_pixels=" + std::to_string(r.covered_pixels);
        ++rendered;
      }
    }
  }
  std::cout << "heatmap: " << rendered << " images -> " << out.string() << "\n";
}

void stage_report(Settings& s, Stage& st, RunManifest& m) {
  const std::string name = s.str("name", "results");
  const fs::path out = out_dir(s);
  std::vector<EvalResult> results;
  for (const auto& f : st.require_list("results")) {
    m.inputs.push_back(f);
    auto part = parse_results(read_text_file(f), f);
    results.insert(results.end(), part.begin(), part.end());
  }
  const auto tables = emit_tables(results, out / name);
  m.outputs = {tables.csv, tables.text};
  m.notes["rows"] = std::to_string(results.size());
  std::cout << results_text_table(results);
  std::cout << "report: " << results.size() << " rows -> " << tables.csv.string() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"ovdprobe: stress-test open-vocabulary detectors with inpainted street scenes"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::string log_level = "info";
  app.add_option("--config", config_path, "Flat key = value settings file");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::list<Stage> stages;
  auto add = [&](const std::string& name, const std::string& help, StageBody body) -> Stage& {
    auto& st = stages.emplace_back();
    st.name = name;
    st.app = app.add_subcommand(name, help);
    st.body = std::move(body);
    st.opt("out", "Output directory");
    return st;
  };

  {
    auto& st = add("ingest", "Load annotations and keep eligible scenes", stage_ingest);
    st.opt("annotations", "Annotation file (JSON lines or JSON array)");
    st.opt("image-root", "Directory image paths are relative to");
    st.opt("min-area", "Minimum object pixel area");
    st.opt("single-object", "Require exactly one object (true/false)");
    st.opt("road-masks", "Load road masks (true/false)");
  }
  {
    auto& st = add("plan-hybrid", "Plan hybrid-concept inpainting jobs", stage_plan_hybrid);
    st.opt("dataset", "Ingested dataset");
    st.opt("nouns", "Noun list file (default: built-in keywords)");
    st.opt("seed", "Planning seed");
    add_generation_opts(st);
  }
  {
    auto& st = add("plan-single", "Plan single-concept inpainting jobs", stage_plan_single);
    st.opt("dataset", "Ingested dataset with road masks");
    st.opt("keywords", "Keyword list file (default: built-in keywords)");
    st.opt("min-overlap", "Minimum drivable overlap of a replaced object");
    st.opt("min-area", "Minimum object pixel area");
    st.opt("seed", "Planning seed");
    add_generation_opts(st);
  }
  {
    auto& st = add("plan-random", "Plan random-location jobs for one scene", stage_plan_random);
    st.opt("dataset", "Ingested dataset with road masks");
    st.opt("scene", "Scene id");
    st.opt("seed", "Sampling seed");
    st.opt("n-road", "Road-only centers");
    st.opt("n-border", "Border centers");
    st.opt("margin", "Minimum distance of a center from the image edges");
    st.opt("border-depth", "Distance to non-road defining the border set");
    st.opt("bbox-w", "Inpainted box width");
    st.opt("bbox-h", "Inpainted box height");
    st.opt("prompt", "Fixed keyword for every center (default: hybrid prompt per center)");
    st.opt("nouns", "Noun list for hybrid prompts");
    add_generation_opts(st);
  }
  {
    auto& st = add("inpaint", "Run planned jobs against the inpainting service", stage_inpaint);
    st.opt("jobs", "Job file from a plan stage");
    st.opt("inpaint-url", "Inpainting service URL (env OVDPROBE_INPAINT_URL)");
    st.opt("concurrency", "Parallel requests");
    st.opt("retries", "Retries for transient failures");
    st.opt("timeout", "Request timeout in seconds");
    st.opt("backoff-ms", "Initial retry backoff");
    st.opt("discard", "File of output ids to drop after manual review");
  }
  {
    auto& st = add("probe", "Generate control probe images", stage_probe);
    st.opt("dataset", "Dataset whose objects are probed");
    st.opt("kind", "noise, noise_white, noise_grey, pattern, removed, brightness_smooth");
    st.opt("color", "white or grey (kind noise)");
    st.opt("threshold", "Brightness threshold (brightness_smooth)");
    st.opt("outcomes", "outcomes.jsonl of an inpaint run (kind removed)");
    st.opt("discard", "Discard list (kind removed)");
  }
  {
    auto& st = add("detect", "Collect detector predictions", stage_detect);
    st.opt("dataset", "Dataset to run the detector on");
    st.opt("detect-url", "Detector service URL (env OVDPROBE_DETECT_URL)");
    st.opt("model", "Model name recorded with the predictions");
    st.opt("prompts", "Comma separated prompt ids (default p1..p5)");
    st.opt("score-floor", "Minimum score requested from the detector");
    st.opt("concurrency", "Parallel requests");
    st.opt("retries", "Retries for transient failures");
    st.opt("timeout", "Request timeout in seconds");
    st.opt("backoff-ms", "Initial retry backoff");
  }
  {
    auto& st = add("eval", "Compute metrics per model and prompt", stage_eval);
    st.opt("gt", "Ground-truth dataset");
    st.list("preds", "Prediction files");
    st.opt("dataset-id", "Dataset name used in tables");
    st.opt("iou", "IoU threshold for TP/FP/FN and AUPRC");
    st.opt("score-floor", "Score threshold for TP/FP/FN");
    st.opt("nms-iou", "NMS IoU threshold");
    st.opt("nms", "Apply NMS per prompt (true/false)");
  }
  {
    auto& st = add("heatmap", "Render pixel-wise recall and FN heatmaps", stage_heatmap);
    st.opt("dataset", "Ground-truth dataset");
    st.list("preds", "Prediction files");
    st.opt("model", "Only this model");
    st.opt("prompt", "Only this prompt id");
    st.opt("iou", "IoU threshold");
    st.opt("score-floor", "Score threshold");
    st.opt("nms-iou", "NMS IoU threshold");
    st.opt("nms", "Apply NMS per prompt (true/false)");
    st.opt("mode", "recall, fn_count or both");
  }
  {
    auto& st = add("correlate", "Correlate FN-per-scene vectors", stage_correlate);
    st.list("fn", "fn_vectors.jsonl files from eval");
    st.opt("model", "Only vectors of this model");
    st.opt("prompt", "Only vectors of this prompt id");
  }
  {
    auto& st = add("report", "Merge results into one table", stage_report);
    st.list("results", "results.jsonl files from eval");
    st.opt("name", "Output file stem");
  }

  std::vector<const char*> argv{"ovdprobe"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  init_logging(log_level);

  Stage* selected = nullptr;
  for (auto& st : stages)
    if (st.app->parsed()) selected = &st;

  try {
    std::map<std::string, std::string> file;
    if (!config_path.empty()) file = parse_config_text(read_text_file(config_path), config_path);
    Settings settings(selected->flags, file,
                      {{"inpaint-url", kInpaintUrlEnv}, {"detect-url", kDetectUrlEnv}});
    RunManifest manifest;
    manifest.stage = selected->name;
    if (!config_path.empty()) manifest.inputs.push_back(config_path);
    selected->body(settings, *selected, manifest);
    manifest.config = settings.echo();
    for (const auto& key : settings.unused_file_keys()) spdlog::debug("{}: config key '{}' not used", selected->name, key);
    for (const auto& [key, values] : selected->lists) {
      std::string joined;
      for (const auto& v : values) joined += (joined.empty() ? "" : ";") + v;
      manifest.config[key] = joined + " (flag)";
    }
    const fs::path out = settings.required_str("out");
    manifest.config.erase("out");
    manifest.config["out"] = out.string();
    write_manifest(manifest, out / ("manifest_" + selected->name + ".json"));
    return kExitOk;
  } catch (const ConfigError& e) {
    spdlog::error("{}: {}", selected->name, e.what());
    std::cerr << selected->app->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", selected->name, e.what());
    return kExitStageFailure;
  }
}

}  // namespace ovdprobe::cli
