#include "lvl/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <set>

#include "lvl/errors.hpp"
#include "lvl/fusion/checkpoint.hpp"
#include "lvl/fusion/grad_check.hpp"
#include "lvl/fusion/toy_fit.hpp"
#include "lvl/image.hpp"
#include "lvl/io.hpp"
#include "lvl/log.hpp"

namespace lvl::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Manifest {
  std::string subcommand;
  ordered_json config = ordered_json::object();  // flags other than paths
  std::optional<std::uint64_t> seed;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
};

fs::path manifest_path(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

// The config hash covers the subcommand, non-path flags and the bytes of every
// input, so it changes exactly when one of those does.
void write_manifest(const fs::path& beside, const Manifest& m) {
  ordered_json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["subcommand"] = m.subcommand;
  j["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
  j["config"] = m.config;
  std::string hashed = m.subcommand + "\n" + m.config.dump() + "\n";
  ordered_json inputs = ordered_json::array();
  for (const auto& p : m.inputs) {
    const std::string digest = io::sha256_hex(io::read_file(p));
    inputs.push_back({{"name", p.filename().string()}, {"sha256", digest}});
    hashed += digest + "\n";
  }
  j["inputs"] = std::move(inputs);
  j["config_hash"] = io::sha256_hex(hashed);
  ordered_json outputs = ordered_json::array();
  for (const auto& p : m.outputs) {
    outputs.push_back({{"name", p.filename().string()}, {"sha256", io::sha256_hex(io::read_file(p))}});
  }
  j["outputs"] = std::move(outputs);
  io::write_file_atomic(manifest_path(beside), j.dump(1) + "\n");
}

std::map<std::string, std::string> load_predictions(const fs::path& path) {
  auto preds = predictions_from_jsonl(io::read_file(path), path.string());
  if (preds.empty()) throw ConfigError(path.string() + ": predictions file contains no predictions");
  return preds;
}

void write_report(const fs::path& out, const metrics::MetricsReport& report, Manifest m) {
  const fs::path table = fs::path(out).replace_extension(".txt");
  io::write_file_atomic(out, metrics::report_to_json(report).dump(1) + "\n");
  io::write_file_atomic(table, metrics::report_to_table(report));
  m.outputs = {out, table};
  write_manifest(out, m);
  std::cerr << metrics::report_to_table(report);
}

// ---- subcommands ------------------------------------------------------------

void scene_gen(const fs::path& spec_path, const fs::path& out) {
  const SceneSpec spec = spec_from_string(io::read_file(spec_path), spec_path.string());
  const Scene scene = generate_scene(spec);
  save_scene(out, scene);
  Manifest m{"scene gen", ordered_json::object(), spec.seed, {spec_path}, {out}};
  write_manifest(out, m);
  log::info("wrote ", scene.frames.size(), " frames to ", out.string());
}

void qa_gen(const fs::path& scene_path, const fs::path& config_path, const fs::path& out,
            const std::optional<fs::path>& image_dir) {
  const Scene scene = load_scene(scene_path);
  const qa::GenConfig cfg = qa::config_from_string(io::read_file(config_path), config_path.string());
  const auto records = qa::generate_all(scene, cfg);
  const std::string header = "lvl-qa scene=" + scene.scene_id + " seed=" + std::to_string(cfg.seed);
  io::write_file_atomic(out, qa::to_jsonl(records, header));
  Manifest m{"qa gen", ordered_json::object(), cfg.seed, {scene_path, config_path}, {out}};
  if (image_dir) {
    m.config["emit_images"] = true;
    for (const auto& r : records) {
      std::set<std::string> cams;
      for (const auto& op : r.overlays) cams.insert(op.camera);
      for (const auto& cam_name : cams) {
        const CameraModel& cam = scene.camera(cam_name);
        std::vector<qa::OverlayOp> ops;
        for (const auto& op : r.overlays) {
          if (op.camera == cam_name) ops.push_back(op);
        }
        const qa::Image img = qa::rasterize_overlays(qa::Image(cam.width, cam.height, {128, 128, 128}), ops);
        const fs::path p = *image_dir / (r.id + "_" + cam_name + ".ppm");
        io::write_file_atomic(p, qa::to_ppm(img));
        m.outputs.push_back(p);
      }
    }
  }
  write_manifest(out, m);
  log::info("wrote ", records.size(), " records to ", out.string());
}

void eval_planning(const fs::path& pred, const std::vector<fs::path>& gt, const fs::path& out) {
  const auto preds = load_predictions(pred);
  std::vector<Scene> scenes;
  for (const auto& p : gt) scenes.push_back(load_scene(p));
  const auto samples = planning_samples(scenes, preds);
  if (samples.empty()) throw ConfigError("eval planning: the scenes yield no planning samples");
  metrics::MetricsReport report;
  report.planning = metrics::evaluate_planning(samples);
  Manifest m{"eval planning", ordered_json::object(), std::nullopt, {pred}, {}};
  m.inputs.insert(m.inputs.end(), gt.begin(), gt.end());
  write_report(out, report, std::move(m));
}

std::vector<qa::QARecord> load_records(const std::vector<fs::path>& gt) {
  std::vector<qa::QARecord> records;
  for (const auto& p : gt) {
    auto recs = qa::from_jsonl(io::read_file(p), p.string());
    records.insert(records.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  return records;
}

void eval_grounding(const fs::path& pred, const std::vector<fs::path>& gt, const fs::path& out) {
  const auto preds = load_predictions(pred);
  const auto samples = grounding_samples(load_records(gt), preds);
  if (samples.empty()) throw ConfigError("eval grounding: ground truth has no object-identification records");
  metrics::MetricsReport report;
  report.grounding = metrics::grounding_miou(samples);
  Manifest m{"eval grounding", ordered_json::object(), std::nullopt, {pred}, {}};
  m.inputs.insert(m.inputs.end(), gt.begin(), gt.end());
  write_report(out, report, std::move(m));
}

void eval_text(const fs::path& pred, const std::vector<fs::path>& gt, const fs::path& out) {
  const auto preds = load_predictions(pred);
  const auto records = load_records(gt);
  if (records.empty()) throw ConfigError("eval text: ground truth has no records");
  const auto [cands, refs] = text_pairs(records, preds);
  metrics::MetricsReport report;
  report.text = metrics::evaluate_text(cands, refs);
  Manifest m{"eval text", ordered_json::object(), std::nullopt, {pred}, {}};
  m.inputs.insert(m.inputs.end(), gt.begin(), gt.end());
  write_report(out, report, std::move(m));
}

bool fusion_check(const std::optional<fs::path>& out) {
  const auto outcomes = fusion::run_check_suite();
  bool all = true;
  ordered_json results = ordered_json::array();
  for (const auto& o : outcomes) {
    char line[256];
    std::snprintf(line, sizeof line, "%s  %-72s %.3e (threshold %.1e)\n", o.passed ? "PASS" : "FAIL",
                  o.name.c_str(), o.value, o.threshold);
    std::cerr << line;
    all = all && o.passed;
    results.push_back({{"name", o.name}, {"value", o.value}, {"threshold", o.threshold}, {"passed", o.passed}});
  }
  if (out) {
    ordered_json j;
    j["passed"] = all;
    j["checks"] = std::move(results);
    io::write_file_atomic(*out, j.dump(1) + "\n");
    write_manifest(*out, Manifest{"fusion check", ordered_json::object(), std::nullopt, {}, {*out}});
  }
  return all;
}

void fusion_toy_train(const std::string& task, std::uint64_t seed, int steps, const fs::path& out,
                      const std::optional<fs::path>& checkpoint) {
  fusion::ToyConfig cfg;
  cfg.task = fusion::toy_task_from_name(task);
  cfg.seed = seed;
  cfg.steps = steps;
  const auto report = fusion::toy_fit(cfg);
  io::write_file_atomic(out, report.to_json().dump(1) + "\n");
  Manifest m{"fusion toy-train", {{"task", task}, {"steps", steps}}, seed, {}, {out}};
  if (checkpoint) {
    io::write_file_atomic(*checkpoint, fusion::checkpoint_to_string(report.final_params));
    m.outputs.push_back(*checkpoint);
  }
  write_manifest(out, m);
  log::info(task, ": loss ", report.initial_eval_loss, " -> ", report.final_eval_loss, ", max |tanh g| ",
            report.max_abs_gate());
}

void pipeline(const fs::path& config_path, const fs::path& out_dir) {
  const PipelineConfig cfg = pipeline_config_from_string(io::read_file(config_path), config_path.string());
  const auto report = run_pipeline(cfg, &out_dir);
  Manifest m{"pipeline", ordered_json::object(), cfg.gen.seed, {config_path}, {}};
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && !name.ends_with(".manifest.json")) m.outputs.push_back(entry.path());
  }
  std::sort(m.outputs.begin(), m.outputs.end());
  write_manifest(out_dir / "report.json", m);
  std::cerr << metrics::report_to_table(report);
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"lvl: synthetic driving scenes, spatial QA generation, evaluation and fusion checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  auto* scene = app.add_subcommand("scene", "Scene generation")->require_subcommand(1);
  auto* scene_gen_cmd = scene->add_subcommand("gen", "Generate a scene from a spec");
  fs::path spec_path, out;
  scene_gen_cmd->add_option("--spec", spec_path, "Scene spec JSON")->required()->check(CLI::ExistingFile);
  scene_gen_cmd->add_option("--out", out, "Output scene JSON")->required();

  auto* qa = app.add_subcommand("qa", "Question-answer generation")->require_subcommand(1);
  auto* qa_gen_cmd = qa->add_subcommand("gen", "Generate QA records for a scene");
  fs::path scene_path, config_path;
  std::optional<fs::path> image_dir;
  qa_gen_cmd->add_option("--scene", scene_path, "Scene JSON")->required()->check(CLI::ExistingFile);
  qa_gen_cmd->add_option("--config", config_path, "Generator config JSON")->required()->check(CLI::ExistingFile);
  qa_gen_cmd->add_option("--out", out, "Output JSONL")->required();
  qa_gen_cmd->add_option("--emit-images", image_dir, "Directory for PPM overlay images");

  auto* eval = app.add_subcommand("eval", "Evaluate predictions")->require_subcommand(1);
  fs::path pred;
  std::vector<fs::path> gt;
  std::vector<CLI::App*> eval_cmds;
  for (const char* name : {"planning", "grounding", "text"}) {
    auto* cmd = eval->add_subcommand(name, std::string("Evaluate ") + name + " predictions");
    cmd->add_option("--pred", pred, "Predictions JSONL {id, text}")->required()->check(CLI::ExistingFile);
    cmd->add_option("--gt", gt, "Ground truth: scene JSON for planning, QA JSONL otherwise")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Report JSON (table written beside it as .txt)")->required();
    eval_cmds.push_back(cmd);
  }

  auto* fusion_cmd = app.add_subcommand("fusion", "Fusion Q-Former verification")->require_subcommand(1);
  auto* check_cmd = fusion_cmd->add_subcommand("check", "Run the gradient and gate checks");
  std::optional<fs::path> check_out;
  check_cmd->add_option("--out", check_out, "Optional JSON summary");
  auto* toy_cmd = fusion_cmd->add_subcommand("toy-train", "Train the toy gate-dynamics task");
  std::string task;
  std::uint64_t seed = 0;
  int steps = 500;
  std::optional<fs::path> checkpoint;
  toy_cmd->add_option("--task", task, "point_exclusive or point_noise")->required();
  toy_cmd->add_option("--out", out, "TrainReport JSON")->required();
  toy_cmd->add_option("--seed", seed, "Seed")->capture_default_str();
  toy_cmd->add_option("--steps", steps, "Gradient steps")->capture_default_str()->check(CLI::PositiveNumber);
  toy_cmd->add_option("--checkpoint", checkpoint, "Also write the trained parameters");

  auto* pipe_cmd = app.add_subcommand("pipeline", "Scenes -> QA -> predictions -> evaluation");
  pipe_cmd->add_option("--config", config_path, "Pipeline config JSON")->required()->check(CLI::ExistingFile);
  pipe_cmd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "lvl: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (scene_gen_cmd->parsed()) {
    scene_gen(spec_path, out);
  } else if (qa_gen_cmd->parsed()) {
    qa_gen(scene_path, config_path, out, image_dir);
  } else if (eval_cmds[0]->parsed()) {
    eval_planning(pred, gt, out);
  } else if (eval_cmds[1]->parsed()) {
    eval_grounding(pred, gt, out);
  } else if (eval_cmds[2]->parsed()) {
    eval_text(pred, gt, out);
  } else if (check_cmd->parsed()) {
    return fusion_check(check_out) ? 0 : 1;
  } else if (toy_cmd->parsed()) {
    fusion_toy_train(task, seed, steps, out, checkpoint);
  } else if (pipe_cmd->parsed()) {
    pipeline(config_path, out);
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  try {
    return dispatch(argc, argv);
  } catch (const InvariantError& e) {
    log::error("internal invariant violated: ", e.what());
    return 2;
  } catch (const Error& e) {
    log::error(e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    log::error("malformed JSON: ", e.what());
    return 1;
  } catch (const std::exception& e) {
    log::error("internal error: ", e.what());
    return 2;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{kToolName};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace lvl::cli
