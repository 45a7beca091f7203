#include <gtest/gtest.h>

#include <cstdlib>

#include <json.hpp>

#include "ovdprobe/cli.hpp"
#include "ovdprobe/codec.hpp"
#include "ovdprobe/detection_io.hpp"
#include "ovdprobe/report.hpp"
#include "scenes.hpp"
#include "stubs.hpp"

using namespace ovdprobe;
using namespace ovdprobe::cli;
namespace fs = std::filesystem;

namespace {

struct EnvGuard {
  explicit EnvGuard(const char* name, const std::string& value) : name_(name) { setenv(name, value.c_str(), 1); }
  ~EnvGuard() { unsetenv(name_); }
  const char* name_;
};

}  // namespace

TEST(ConfigText, ParsesFlatKeyValues) {
  const auto m = parse_config_text("# comment\n; other\n score_floor = 0.3 \nmodel = \"owl v2\"\n\n");
  EXPECT_EQ(m.at("score-floor"), "0.3");
  EXPECT_EQ(m.at("model"), "owl v2");
  EXPECT_THROW(parse_config_text("novalue\n", "cfg"), ConfigError);
}

TEST(Settings, PrecedenceFlagEnvConfigDefault) {
  EnvGuard env(kDetectUrlEnv, "http://env:1");
  Settings s({{"iou", "0.7"}}, {{"iou", "0.3"}, {"score-floor", "0.2"}, {"detect-url", "http://file:1"},
                                {"model", "from-file"}, {"stray", "x"}},
             {{"detect-url", kDetectUrlEnv}});
  EXPECT_EQ(s.real("iou", 0.5, 0, 1), 0.7);
  EXPECT_EQ(s.real("score-floor", 0.1, 0, 1), 0.2);
  EXPECT_EQ(s.real("nms-iou", 0.5, 0, 1), 0.5);
  EXPECT_EQ(s.str("detect-url", ""), "http://env:1");
  EXPECT_EQ(s.str("model", ""), "from-file");
  EXPECT_EQ(s.echo().at("iou"), "0.7 (flag)");
  EXPECT_EQ(s.echo().at("score-floor"), "0.2 (config)");
  EXPECT_EQ(s.echo().at("nms-iou"), "0.5 (default)");
  EXPECT_EQ(s.echo().at("detect-url"), std::string("http://env:1 (") + kDetectUrlEnv + ")");
  EXPECT_EQ(s.unused_file_keys(), (std::vector<std::string>{"stray"}));

  Settings flag_wins({{"detect-url", "http://flag:1"}}, {}, {{"detect-url", kDetectUrlEnv}});
  EXPECT_EQ(flag_wins.str("detect-url", ""), "http://flag:1");
}

TEST(Settings, EnvOnlyAppliesToServiceUrls) {
  EnvGuard env("OVDPROBE_MODEL", "sneaky");
  Settings s({}, {}, {{"detect-url", kDetectUrlEnv}});
  EXPECT_EQ(s.str("model", "default"), "default");
}

TEST(Settings, RejectsBadValues) {
  Settings s({{"iou", "1.5"}, {"seed", "abc"}, {"nms", "maybe"}, {"repeats", "3.5"}}, {});
  EXPECT_THROW(s.real("iou", 0.5, 0, 1), ConfigError);
  EXPECT_THROW(s.u64("seed", 0), ConfigError);
  EXPECT_THROW(s.boolean("nms", true), ConfigError);
  EXPECT_THROW(s.integer("repeats", 1, 1, 10), ConfigError);
  EXPECT_THROW(s.required_str("gt"), ConfigError);
}

TEST(Run, ExitCodes) {
  EXPECT_EQ(run({"--help"}), kExitOk);
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"bogus"}), kExitUsage);
  EXPECT_EQ(run({"eval", "--no-such-flag", "1"}), kExitUsage);
  scenes::TempDir dir("exit");
  EXPECT_EQ(run({"eval", "--out", (dir / "o").string(), "--preds", "x.jsonl"}), kExitUsage);
  EXPECT_EQ(run({"eval", "--out", (dir / "o").string(), "--gt", (dir / "none.jsonl").string(), "--preds",
                 (dir / "none2.jsonl").string()}),
            kExitStageFailure);
  EXPECT_EQ(run({"eval", "--out", (dir / "o").string(), "--gt", "g", "--preds", "p", "--iou", "2"}), kExitUsage);
}

TEST(Run, PipelineThroughStubs) {
  scenes::TempDir dir("pipeline");
  const auto ann = scenes::write_fixture(dir / "raw", scenes::five_scenes());
  const auto d = [&](const std::string& p) { return (dir / p).string(); };

  ASSERT_EQ(run({"ingest", "--annotations", ann.string(), "--out", d("ingest")}), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "ingest/manifest_ingest.json"));
  ASSERT_EQ(run({"plan-hybrid", "--dataset", d("ingest/dataset.jsonl"), "--repeats", "1", "--seed", "3", "--out",
                 d("plan")}),
            kExitOk);
  EXPECT_EQ(parse_list(read_text_file(dir / "plan/jobs.jsonl")).size(), 10u);

  auto inpaint = stubs::inpaint_stub();
  {
    EnvGuard env(kInpaintUrlEnv, inpaint->url());
    ASSERT_EQ(run({"inpaint", "--jobs", d("plan/jobs.jsonl"), "--backoff-ms", "1", "--out", d("gen")}), kExitOk);
  }
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "gen/manifest_inpaint.json"));
  EXPECT_EQ(manifest["config"]["inpaint-url"].get<std::string>(),
            inpaint->url() + " (" + kInpaintUrlEnv + ")");

  auto good = stubs::detect_stub();
  auto shifted = stubs::detect_stub({.shift = 30.0, .background_score = 0.4});
  write_text_file(dir / "detect.cfg", "detect_url = " + shifted->url() + "\nbackoff_ms = 1\n");
  ASSERT_EQ(run({"detect", "--dataset", d("gen/dataset.jsonl"), "--detect-url", good->url(), "--model", "good",
                 "--out", d("det_good")}),
            kExitOk);
  ASSERT_EQ(run({"--config", d("detect.cfg"), "detect", "--dataset", d("gen/dataset.jsonl"), "--model", "shifted",
                 "--out", d("det_shifted")}),
            kExitOk);
  EXPECT_EQ(good->requests(), 50);

  ASSERT_EQ(run({"eval", "--gt", d("gen/dataset.jsonl"), "--preds", d("det_good/predictions.jsonl"),
                 d("det_shifted/predictions.jsonl"), "--dataset-id", "toy", "--out", d("eval")}),
            kExitOk);
  const auto results = parse_results(read_text_file(dir / "eval/results.jsonl"));
  ASSERT_EQ(results.size(), 10u);
  for (const auto& r : results) {
    if (r.model_name == "good") {
      EXPECT_EQ(r.tp, 10);
      EXPECT_EQ(r.fn, 0);
      EXPECT_DOUBLE_EQ(r.auprc, 1.0);
    } else {
      EXPECT_EQ(r.fp, 20);
    }
  }

  ASSERT_EQ(run({"heatmap", "--dataset", d("gen/dataset.jsonl"), "--preds", d("det_shifted/predictions.jsonl"),
                 "--prompt", "p1", "--out", d("heat")}),
            kExitOk);
  EXPECT_TRUE(fs::exists(dir / "heat/scene_0_shifted_p1_recall.png"));
  ASSERT_EQ(run({"correlate", "--fn", d("eval/fn_vectors.jsonl"), "--out", d("corr")}), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "corr/pearson.csv"));
  ASSERT_EQ(run({"report", "--results", d("eval/results.jsonl"), "--name", "summary", "--out", d("report")}), kExitOk);
  EXPECT_EQ(parse_list(read_text_file(dir / "report/summary.csv")).size(), 11u);

  ASSERT_EQ(run({"probe", "--dataset", d("ingest/dataset.jsonl"), "--kind", "noise", "--color", "grey", "--out",
                 d("probe")}),
            kExitOk);
  EXPECT_EQ(parse_list(read_text_file(dir / "probe/dataset.jsonl")).size(), 5u);
}
