#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ovdprobe/eval.hpp"

namespace ovdprobe {

/// Column order of every results table.
inline const std::vector<std::string> kResultColumns = {"model",    "prompt",    "dataset",   "iou_threshold",
                                                        "auprc",    "ap_50_95",  "ar_50_95",  "tp",
                                                        "fp",       "fn"};

/// Rows sorted by (dataset, model, prompt); reals printed with 4 decimals.
std::string results_csv(std::vector<EvalResult> results);
std::string results_text_table(std::vector<EvalResult> results);

struct TablePaths {
  std::filesystem::path csv;
  std::filesystem::path text;
};

/// Writes <stem>.csv and <stem>.txt. Throws std::invalid_argument on an empty result list.
TablePaths emit_tables(const std::vector<EvalResult>& results, const std::filesystem::path& stem);

std::string serialize_results(const std::vector<EvalResult>& results);
std::vector<EvalResult> parse_results(const std::string& text, const std::string& origin = "<memory>");

enum class HeatmapMode { kRecall, kFnCount };
std::string to_string(HeatmapMode mode);
HeatmapMode heatmap_mode_from_string(const std::string& s);

using Rgba = std::array<std::uint8_t, 4>;

/// Recall ramp: 0 -> (255,0,0), 1 -> (0,255,0), linear per channel, opaque.
Rgba recall_color(double recall);
/// FN ramp: 0 -> white, max -> (128,0,0), linear per channel, opaque.
Rgba fn_color(std::uint32_t count, std::uint32_t max_count);
/// Pixels no sample covered.
inline constexpr Rgba kUndefinedColor{0, 0, 0, 0};

std::vector<std::uint8_t> heatmap_rgba(const HeatmapGrid& grid, HeatmapMode mode);

struct HeatmapRender {
  std::filesystem::path path;
  HeatmapMode mode = HeatmapMode::kRecall;
  std::uint32_t max_fn = 0;
  std::int64_t covered_pixels = 0;
};

HeatmapRender render_heatmap(const HeatmapGrid& grid, const std::filesystem::path& path, HeatmapMode mode);

/// Square matrix as CSV with a header row; undefined entries are written as "undefined".
std::string correlation_csv(const CorrelationMatrix& matrix);

struct RunManifest {
  std::string stage;
  std::map<std::string, std::string> config;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::map<std::string, std::string> notes;
};

/// JSON manifest with the config echo, SHA-256 of every input file and the output list.
std::string serialize_manifest(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace ovdprobe
