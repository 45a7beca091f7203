#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ovdprobe/cli.hpp"
#include "ovdprobe/eval.hpp"
#include "ovdprobe/placement.hpp"
#include "ovdprobe/prompts.hpp"

namespace py = pybind11;
using namespace ovdprobe;

namespace {

using BoxTuple = std::array<double, 4>;
using ScoredBox = std::array<double, 5>;

BBox to_box(const BoxTuple& b) { return {b[0], b[1], b[2], b[3]}; }
BoxTuple from_box(const BBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }

std::vector<Prediction> to_predictions(const std::vector<ScoredBox>& dets) {
  std::vector<Prediction> out;
  out.reserve(dets.size());
  for (const auto& d : dets) out.push_back({{d[0], d[1], d[2], d[3]}, d[4], "", ""});
  return out;
}

// Images arrive as {"gt": [[x0,y0,x1,y1], ...], "dets": [[x0,y0,x1,y1,score], ...]}.
std::vector<EvalImage> to_images(const py::list& images) {
  std::vector<EvalImage> out;
  for (const auto& item : images) {
    const auto d = item.cast<py::dict>();
    EvalImage img;
    if (d.contains("gt"))
      for (const auto& g : d["gt"].cast<std::vector<BoxTuple>>()) img.ground_truth.push_back(to_box(g));
    if (d.contains("dets")) img.predictions = to_predictions(d["dets"].cast<std::vector<ScoredBox>>());
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Evaluation, placement and pipeline entry points of ovdprobe";

  m.def("iou", [](const BoxTuple& a, const BoxTuple& b) { return iou(to_box(a), to_box(b)); }, py::arg("a"),
        py::arg("b"));

  m.def(
      "nms",
      [](const std::vector<ScoredBox>& dets, double iou_thresh) {
        std::vector<ScoredBox> out;
        for (const auto& p : nms(to_predictions(dets), iou_thresh)) {
          const auto b = from_box(p.bbox);
          out.push_back({b[0], b[1], b[2], b[3], p.score});
        }
        return out;
      },
      py::arg("dets"), py::arg("iou_thresh") = kDefaultNmsIou);

  m.def(
      "match",
      [](const std::vector<ScoredBox>& dets, const std::vector<BoxTuple>& gts, double iou_thresh, double score_floor) {
        std::vector<BBox> boxes;
        for (const auto& g : gts) boxes.push_back(to_box(g));
        const auto r = match(to_predictions(dets), boxes, iou_thresh, score_floor);
        py::dict d;
        d["tp"] = r.tp;
        d["fp"] = r.fp;
        d["fn"] = r.fn;
        py::list pairs;
        for (const auto& p : r.matched_pairs) pairs.append(py::make_tuple(p.prediction, p.ground_truth, p.iou));
        d["pairs"] = pairs;
        return d;
      },
      py::arg("dets"), py::arg("gts"), py::arg("iou_thresh") = kMatchIou, py::arg("score_floor") = kCountScoreFloor);

  m.def(
      "auprc", [](const py::list& images, double iou_thresh) { return pr_curve_auprc(to_images(images), iou_thresh).auprc; },
      py::arg("images"), py::arg("iou_thresh") = kMatchIou);

  m.def(
      "coco_ap_ar",
      [](const py::list& images, int max_dets) {
        const auto s = coco_ap_ar(to_images(images), max_dets);
        py::dict d;
        d["ap_50_95"] = s.ap_50_95;
        d["ar_50_95"] = s.ar_50_95;
        d["ap_per_threshold"] = s.ap_per_threshold;
        d["recall_per_threshold"] = s.recall_per_threshold;
        return d;
      },
      py::arg("images"), py::arg("max_dets") = 100);

  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); },
        py::arg("x"), py::arg("y"));
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
        py::arg("x"), py::arg("y"));

  m.def("crop_tier", [](const BoxTuple& b) { return crop_tier(to_box(b)); }, py::arg("bbox"));
  m.def("hybrid_prompt", [](const std::vector<std::string>& nouns, std::uint64_t seed) { return hybrid_prompt(nouns, seed).text; },
        py::arg("nouns"), py::arg("seed"));
  m.def("single_concept_prompt", [](const std::string& k) { return single_concept_prompt(k).text; }, py::arg("keyword"));
  m.def("detection_prompts", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : detection_prompts()) out.emplace_back(p.id, p.text);
    return out;
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run(args);
      },
      py::arg("args"), "Runs one pipeline stage exactly like the ovdprobe executable; returns the exit code.");
}
