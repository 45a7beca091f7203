#include "ovdprobe/detection_io.hpp"

#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ovdprobe/codec.hpp"
#include "ovdprobe/dataset.hpp"
#include "ovdprobe/image_io.hpp"

namespace ovdprobe {
namespace {

using nlohmann::json;
using SetKey = std::tuple<std::string, std::string, std::string>;

BBox read_bbox(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ParseError(where + ": bbox must hold 4 numbers");
  for (const auto& v : j)
    if (!v.is_number()) throw ParseError(where + ": bbox must hold 4 numbers");
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw ParseError(where + ": degenerate bbox");
  return b;
}

double read_score(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": score must be a number");
  const double s = j.get<double>();
  if (!(s >= 0.0 && s <= 1.0)) throw ParseError(where + ": score " + j.dump() + " outside [0,1]");
  return s;
}

std::string read_string(const json& rec, const char* key, const std::string& where) {
  if (!rec.contains(key) || !rec[key].is_string())
    throw ParseError(where + ": missing string field '" + key + "'");
  return rec[key].get<std::string>();
}

}  // namespace

std::vector<PredictionSet> parse_predictions(const std::string& text, const std::string& origin) {
  std::map<SetKey, PredictionSet> grouped;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ": record " + std::to_string(index++) + " (line " + std::to_string(lineno) + ")";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!rec.is_object()) throw ParseError(where + ": record is not an object");
    const auto image_id = read_string(rec, "image_id", where);
    const auto model = read_string(rec, "model", where);
    const auto prompt_id = read_string(rec, "prompt_id", where);
    auto& set = grouped[{image_id, model, prompt_id}];
    set.image_id = image_id;
    set.model_name = model;
    set.prompt_id = prompt_id;

    const bool has_bbox = rec.contains("bbox");
    const bool has_score = rec.contains("score");
    if (!has_bbox && !has_score) continue;
    if (has_bbox != has_score) throw ParseError(where + ": bbox and score must appear together");
    set.predictions.push_back({read_bbox(rec["bbox"], where), read_score(rec["score"], where), prompt_id, image_id});
  }
  std::vector<PredictionSet> out;
  out.reserve(grouped.size());
  for (auto& [key, set] : grouped) out.push_back(std::move(set));
  return out;
}

std::vector<PredictionSet> load_predictions(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw ParseError(e.what());
  }
  return parse_predictions(text, path.string());
}

std::string serialize_predictions(const std::vector<PredictionSet>& sets) {
  std::string out;
  for (const auto& set : sets) {
    const json head = {{"image_id", set.image_id}, {"model", set.model_name}, {"prompt_id", set.prompt_id}};
    if (set.predictions.empty()) {
      out += head.dump();
      out += '\n';
      continue;
    }
    for (const auto& p : set.predictions) {
      json rec = head;
      rec["bbox"] = {p.bbox.x_min, p.bbox.y_min, p.bbox.x_max, p.bbox.y_max};
      rec["score"] = p.score;
      out += rec.dump();
      out += '\n';
    }
  }
  return out;
}

void save_predictions(const std::vector<PredictionSet>& sets, const std::filesystem::path& path) {
  write_text_file(path, serialize_predictions(sets));
}

std::vector<Prediction> parse_detect_response(const std::string& body, const std::string& image_id,
                                              const std::string& prompt_id) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("detect response: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("detections") || !doc["detections"].is_array())
    throw ParseError("detect response: missing 'detections' list");
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < doc["detections"].size(); ++i) {
    const auto& d = doc["detections"][i];
    const std::string where = "detect response: detection " + std::to_string(i);
    if (!d.is_object() || !d.contains("bbox") || !d.contains("score"))
      throw ParseError(where + ": needs bbox and score");
    out.push_back({read_bbox(d["bbox"], where), read_score(d["score"], where), prompt_id, image_id});
  }
  return out;
}

FetchResult fetch_predictions(const std::vector<DetectImage>& images, const std::vector<PromptSpec>& prompts,
                              const FetchOptions& options) {
  const ServiceEndpoint endpoint = parse_service_url(options.service_url);
  const std::size_t n = images.size() * prompts.size();
  std::vector<std::optional<PredictionSet>> sets(n);
  std::vector<std::optional<FetchFailure>> failures(n);
  std::vector<std::string> encoded(images.size());
  std::vector<std::string> encode_errors(images.size());
  std::vector<std::once_flag> encoded_once(images.size());

  parallel_for(n, options.concurrency, [&](std::size_t k) {
    const std::size_t i = k / prompts.size();
    const auto& prompt = prompts[k % prompts.size()];
    const std::string prompt_id = prompt.id.empty() ? prompt.text : prompt.id;
    std::call_once(encoded_once[i], [&] {
      try {
        encoded[i] = base64_encode(encode_png(read_image(images[i].path)));
      } catch (const std::exception& e) {
        encode_errors[i] = e.what();
      }
    });
    if (!encode_errors[i].empty()) {
      failures[k] = FetchFailure{images[i].image_id, prompt_id, CallStatus::kFailedPermanent, encode_errors[i]};
      return;
    }
    const json body = {{"image", encoded[i]}, {"prompt", prompt.text}, {"score_floor", options.score_floor}};
    const CallResult call = post_json(endpoint, "/detect", body.dump(), options.retry);
    if (call.status != CallStatus::kOk) {
      failures[k] = FetchFailure{images[i].image_id, prompt_id, call.status, call.error};
      return;
    }
    try {
      sets[k] = PredictionSet{images[i].image_id, options.model_name, prompt_id,
                              parse_detect_response(call.body, images[i].image_id, prompt_id)};
    } catch (const std::exception& e) {
      failures[k] = FetchFailure{images[i].image_id, prompt_id, CallStatus::kFailedPermanent, e.what()};
    }
  });

  FetchResult result;
  for (auto& s : sets)
    if (s) result.sets.push_back(std::move(*s));
  for (auto& f : failures)
    if (f) result.failures.push_back(std::move(*f));
  std::sort(result.sets.begin(), result.sets.end(), [](const PredictionSet& a, const PredictionSet& b) {
    return std::tie(a.image_id, a.model_name, a.prompt_id) < std::tie(b.image_id, b.model_name, b.prompt_id);
  });
  if (!result.failures.empty())
    spdlog::warn("detect: {} of {} requests failed", result.failures.size(), n);
  return result;
}

}  // namespace ovdprobe
