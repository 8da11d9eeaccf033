#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "lvl/cli.hpp"
#include "lvl/errors.hpp"
#include "lvl/io.hpp"

namespace lvl::cli {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lvl_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string sha(const fs::path& p) { return io::sha256_hex(io::read_file(p)); }

nlohmann::json manifest(const fs::path& out) {
  return nlohmann::json::parse(io::read_file(out.string() + ".manifest.json"));
}

qa::GenConfig small_gen(std::uint64_t seed = 1) {
  qa::GenConfig g;
  g.seed = seed;
  for (auto t : qa::kAllTasks) g.count(t) = 3;
  return g;
}

fs::path write_spec(const fs::path& dir, std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  const fs::path p = dir / ("spec" + std::to_string(seed) + ".json");
  io::write_file_atomic(p, spec_to_string(spec));
  return p;
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run(std::vector<std::string>{}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"scene", "gen", "--out", "x.json"}), 1);
  EXPECT_EQ(run({"fusion", "toy-train", "--task", "nope", "--out", (fresh_dir("task") / "t.json").string()}), 1);
}

TEST(Cli, SceneGenIsDeterministicWithManifest) {
  const fs::path d = fresh_dir("scene");
  const fs::path spec = write_spec(d, 7);
  fs::create_directories(d / "a");
  fs::create_directories(d / "b");
  ASSERT_EQ(run({"scene", "gen", "--spec", spec.string(), "--out", (d / "a" / "s.json").string()}), 0);
  ASSERT_EQ(run({"scene", "gen", "--spec", spec.string(), "--out", (d / "b" / "s.json").string()}), 0);
  EXPECT_EQ(sha(d / "a" / "s.json"), sha(d / "b" / "s.json"));
  EXPECT_EQ(sha(d / "a" / "s.json.manifest.json"), sha(d / "b" / "s.json.manifest.json"));
  const auto m = manifest(d / "a" / "s.json");
  EXPECT_EQ(m["subcommand"], "scene gen");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["outputs"][0]["sha256"], sha(d / "a" / "s.json"));
  EXPECT_EQ(m["inputs"][0]["sha256"], sha(spec));

  const fs::path other = write_spec(d, 8);
  ASSERT_EQ(run({"scene", "gen", "--spec", other.string(), "--out", (d / "c.json").string()}), 0);
  EXPECT_NE(manifest(d / "c.json")["config_hash"], m["config_hash"]);
}

TEST(Cli, QaGenWithImages) {
  const fs::path d = fresh_dir("qa");
  ASSERT_EQ(run({"scene", "gen", "--spec", write_spec(d, 3).string(), "--out", (d / "s.json").string()}), 0);
  io::write_file_atomic(d / "cfg.json", qa::config_to_string(small_gen()));
  ASSERT_EQ(run({"qa", "gen", "--scene", (d / "s.json").string(), "--config", (d / "cfg.json").string(), "--out",
                 (d / "qa.jsonl").string(), "--emit-images", (d / "img").string()}),
            0);
  const auto records = qa::from_jsonl(io::read_file(d / "qa.jsonl"));
  EXPECT_GT(records.size(), 10u);
  const auto m = manifest(d / "qa.jsonl");
  int ppm = 0;
  for (const auto& o : m["outputs"]) {
    if (o["name"].get<std::string>().ends_with(".ppm")) {
      ++ppm;
      EXPECT_EQ(io::read_file(d / "img" / o["name"].get<std::string>()).substr(0, 3), "P6\n");
    }
  }
  EXPECT_GT(ppm, 0);
}

TEST(Cli, EvalRejectsBadInputs) {
  const fs::path d = fresh_dir("bad");
  ASSERT_EQ(run({"scene", "gen", "--spec", write_spec(d, 3).string(), "--out", (d / "s.json").string()}), 0);
  io::write_file_atomic(d / "empty.jsonl", "# nothing\n\n");
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"eval", "planning", "--pred", (d / "empty.jsonl").string(), "--gt", (d / "s.json").string(),
                 "--out", (d / "r.json").string()}),
            1);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("empty.jsonl"), std::string::npos);
  EXPECT_FALSE(fs::exists(d / "r.json"));

  const std::string scene = io::read_file(d / "s.json");
  io::write_file_atomic(d / "cut.json", scene.substr(0, scene.size() / 3));
  io::write_file_atomic(d / "p.jsonl", "{\"id\": \"x\", \"text\": \"\"}\n");
  EXPECT_EQ(run({"eval", "planning", "--pred", (d / "p.jsonl").string(), "--gt", (d / "cut.json").string(), "--out",
                 (d / "r.json").string()}),
            1);
  // unknown prediction id
  EXPECT_EQ(run({"eval", "planning", "--pred", (d / "p.jsonl").string(), "--gt", (d / "s.json").string(), "--out",
                 (d / "r.json").string()}),
            1);
  io::write_file_atomic(d / "dup.jsonl", "{\"id\": \"x\", \"text\": \"a\"}\n{\"id\": \"x\", \"text\": \"b\"}\n");
  EXPECT_EQ(run({"eval", "text", "--pred", (d / "dup.jsonl").string(), "--gt", (d / "s.json").string(), "--out",
                 (d / "r.json").string()}),
            1);
}

TEST(Cli, EvalPlanningWithGroundTruthPredictions) {
  const fs::path d = fresh_dir("plan");
  ASSERT_EQ(run({"scene", "gen", "--spec", write_spec(d, 5).string(), "--out", (d / "s.json").string()}), 0);
  std::vector<std::pair<std::string, std::string>> preds;
  for (const auto& s : metrics::planning_samples_from_scene(load_scene(d / "s.json"))) {
    preds.emplace_back(s.id, codec::format_waypoints(s.gt));
  }
  io::write_file_atomic(d / "p.jsonl", predictions_to_jsonl(preds));
  ASSERT_EQ(run({"eval", "planning", "--pred", (d / "p.jsonl").string(), "--gt", (d / "s.json").string(), "--out",
                 (d / "r.json").string()}),
            0);
  const auto r = nlohmann::json::parse(io::read_file(d / "r.json"));
  EXPECT_EQ(r["planning"]["samples"], preds.size());
  EXPECT_EQ(r["planning"]["unparseable"], 0);
  EXPECT_LT(r["planning"]["l2_m"]["avg"].get<double>(), 0.05);
  EXPECT_EQ(r["planning"]["collision_pct"]["avg"], 0.0);
  EXPECT_TRUE(fs::exists(d / "r.txt"));
  EXPECT_EQ(manifest(d / "r.json")["outputs"].size(), 2u);
}

TEST(Cli, PredictionsJsonl) {
  const auto p = predictions_from_jsonl("# header\n\n{\"id\": \"a\", \"text\": \"x\"}\n", "t");
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.at("a"), "x");
  EXPECT_THROW(predictions_from_jsonl("{\"id\": \"a\"}\n", "t"), ParseError);
  EXPECT_EQ(predictions_from_jsonl(predictions_to_jsonl({{"b", "y \"q\""}}), "t").at("b"), "y \"q\"");
}

TEST(Cli, PipelineOracleAndBlank) {
  PipelineConfig cfg;
  cfg.gen = small_gen(4);
  cfg.gen.grounding_benchmark = true;
  cfg.scene_seeds = {11, 12};
  const auto oracle = run_pipeline(cfg);
  ASSERT_TRUE(oracle.grounding && oracle.text && oracle.planning);
  EXPECT_EQ(oracle.grounding->miou, 1.0);
  EXPECT_EQ(oracle.text->bleu4, 1.0);
  EXPECT_EQ(oracle.planning->unparseable, 0u);
  cfg.mode = PredictionMode::kBlank;
  const auto blank = run_pipeline(cfg);
  EXPECT_EQ(blank.grounding->miou, 0.0);
  EXPECT_EQ(blank.planning->unparseable, blank.planning->samples);
  EXPECT_EQ(pipeline_config_to_string(pipeline_config_from_string(pipeline_config_to_string(cfg), "c")),
            pipeline_config_to_string(cfg));
}

TEST(Cli, ToyTrainTwiceIsIdentical) {
  const fs::path d = fresh_dir("toy");
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(run({"fusion", "toy-train", "--task", "point_noise", "--steps", "3", "--seed", "2", "--out",
                   (d / (std::string(name) + ".json")).string(), "--checkpoint",
                   (d / (std::string(name) + ".ckpt")).string()}),
              0);
  }
  EXPECT_EQ(sha(d / "a.json"), sha(d / "b.json"));
  EXPECT_EQ(sha(d / "a.ckpt"), sha(d / "b.ckpt"));
}

TEST(Cli, ExecutableRuns) {
  const std::string cmd = std::string("\"") + LVL_EXE + "\" --help > /dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  const std::string bad = std::string("\"") + LVL_EXE + "\" nope > /dev/null 2>&1";
  const int status = std::system(bad.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 1);
}

}  // namespace
}  // namespace lvl::cli
