#include "ovdprobe/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "ovdprobe/codec.hpp"
#include "ovdprobe/dataset.hpp"
#include "ovdprobe/image_io.hpp"

namespace ovdprobe {
namespace {

using nlohmann::json;

void sort_rows(std::vector<EvalResult>& results) {
  std::stable_sort(results.begin(), results.end(), [](const EvalResult& a, const EvalResult& b) {
    return std::tie(a.dataset_id, a.model_name, a.prompt_id) < std::tie(b.dataset_id, b.model_name, b.prompt_id);
  });
}

std::vector<std::string> row_cells(const EvalResult& r) {
  return {r.model_name,
          r.prompt_id,
          r.dataset_id,
          fmt::format("{:.2f}", r.iou_threshold),
          fmt::format("{:.4f}", r.auprc),
          fmt::format("{:.4f}", r.ap_50_95),
          fmt::format("{:.4f}", r.ar_50_95),
          std::to_string(r.tp),
          std::to_string(r.fp),
          std::to_string(r.fn)};
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::uint8_t lerp_channel(double a, double b, double t) {
  return static_cast<std::uint8_t>(std::lround(a + (b - a) * t));
}

}  // namespace

std::string results_csv(std::vector<EvalResult> results) {
  sort_rows(results);
  std::string out;
  for (std::size_t i = 0; i < kResultColumns.size(); ++i) out += (i ? "," : "") + kResultColumns[i];
  out += '\n';
  for (const auto& r : results) {
    const auto cells = row_cells(r);
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_cell(cells[i]);
    out += '\n';
  }
  return out;
}

std::string results_text_table(std::vector<EvalResult> results) {
  sort_rows(results);
  std::vector<std::vector<std::string>> rows{kResultColumns};
  for (const auto& r : results) rows.push_back(row_cells(r));
  std::vector<std::size_t> width(kResultColumns.size(), 0);
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += "  ";
      // text columns left-aligned, numbers right-aligned
      line += i < 3 ? fmt::format("{:<{}}", row[i], width[i]) : fmt::format("{:>{}}", row[i], width[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  };
  emit(rows.front());
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
  for (std::size_t i = 1; i < rows.size(); ++i) emit(rows[i]);
  return out;
}

TablePaths emit_tables(const std::vector<EvalResult>& results, const std::filesystem::path& stem) {
  if (results.empty()) throw std::invalid_argument("emit_tables: no results to write");
  TablePaths paths{stem, stem};
  paths.csv += ".csv";
  paths.text += ".txt";
  write_text_file(paths.csv, results_csv(results));
  write_text_file(paths.text, results_text_table(results));
  return paths;
}

std::string serialize_results(const std::vector<EvalResult>& results) {
  std::string out;
  for (const auto& r : results) {
    const json j = {{"model", r.model_name}, {"prompt_id", r.prompt_id}, {"dataset_id", r.dataset_id},
                    {"iou_threshold", r.iou_threshold}, {"auprc", r.auprc}, {"ap_50_95", r.ap_50_95},
                    {"ar_50_95", r.ar_50_95}, {"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"images", r.images}};
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<EvalResult> parse_results(const std::string& text, const std::string& origin) {
  std::vector<EvalResult> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      EvalResult r;
      r.model_name = j.at("model").get<std::string>();
      r.prompt_id = j.at("prompt_id").get<std::string>();
      r.dataset_id = j.at("dataset_id").get<std::string>();
      r.iou_threshold = j.at("iou_threshold").get<double>();
      r.auprc = j.at("auprc").get<double>();
      r.ap_50_95 = j.at("ap_50_95").get<double>();
      r.ar_50_95 = j.at("ar_50_95").get<double>();
      r.tp = j.at("tp").get<std::int64_t>();
      r.fp = j.at("fp").get<std::int64_t>();
      r.fn = j.at("fn").get<std::int64_t>();
      r.images = j.value("images", std::int64_t{0});
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string to_string(HeatmapMode mode) { return mode == HeatmapMode::kRecall ? "recall" : "fn_count"; }

HeatmapMode heatmap_mode_from_string(const std::string& s) {
  if (s == "recall") return HeatmapMode::kRecall;
  if (s == "fn_count") return HeatmapMode::kFnCount;
  throw std::invalid_argument("unknown heatmap mode '" + s + "' (expected recall or fn_count)");
}

Rgba recall_color(double recall) {
  const double r = std::clamp(recall, 0.0, 1.0);
  return {lerp_channel(255, 0, r), lerp_channel(0, 255, r), 0, 255};
}

Rgba fn_color(std::uint32_t count, std::uint32_t max_count) {
  const double t = max_count == 0 ? 0.0 : std::min(1.0, double(count) / double(max_count));
  return {lerp_channel(255, 128, t), lerp_channel(255, 0, t), lerp_channel(255, 0, t), 255};
}

std::vector<std::uint8_t> heatmap_rgba(const HeatmapGrid& grid, HeatmapMode mode) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(grid.width()) * grid.height() * 4, 0);
  const std::uint32_t max_fn = grid.max_fn();
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      const auto recall = grid.recall(x, y);
      Rgba c = kUndefinedColor;
      if (recall) c = mode == HeatmapMode::kRecall ? recall_color(*recall) : fn_color(grid.fn_count(x, y), max_fn);
      std::copy(c.begin(), c.end(), out.begin() + (static_cast<std::ptrdiff_t>(y) * grid.width() + x) * 4);
    }
  }
  return out;
}

HeatmapRender render_heatmap(const HeatmapGrid& grid, const std::filesystem::path& path, HeatmapMode mode) {
  write_rgba_png(grid.width(), grid.height(), heatmap_rgba(grid, mode), path);
  HeatmapRender r{path, mode, grid.max_fn(), 0};
  for (std::size_t i = 0; i < grid.tp_counts().size(); ++i)
    if (grid.tp_counts()[i] + grid.fn_counts()[i] > 0) ++r.covered_pixels;
  return r;
}

std::string correlation_csv(const CorrelationMatrix& matrix) {
  std::string out = "dataset";
  for (const auto& l : matrix.labels) out += "," + csv_cell(l);
  out += '\n';
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    out += csv_cell(matrix.labels[i]);
    for (const auto& v : matrix.values[i]) out += v ? fmt::format(",{:.6f}", *v) : std::string(",undefined");
    out += '\n';
  }
  return out;
}

std::string serialize_manifest(const RunManifest& manifest) {
  json j;
  j["stage"] = manifest.stage;
  j["config"] = manifest.config;
  json inputs = json::array();
  for (const auto& p : manifest.inputs) {
    json e = {{"path", p.generic_string()}};
    e["sha256"] = std::filesystem::is_regular_file(p) ? json(sha256_file(p)) : json(nullptr);
    inputs.push_back(std::move(e));
  }
  j["inputs"] = std::move(inputs);
  json outputs = json::array();
  for (const auto& p : manifest.outputs) outputs.push_back(p.generic_string());
  j["outputs"] = std::move(outputs);
  if (!manifest.notes.empty()) j["notes"] = manifest.notes;
  return j.dump(2) + '\n';
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  write_text_file(path, serialize_manifest(manifest));
}

}  // namespace ovdprobe
