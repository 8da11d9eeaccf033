#include <set>

#include "lvl/answer_codec.hpp"
#include "lvl/cli.hpp"
#include "lvl/io.hpp"
#include "lvl/json_util.hpp"
#include "lvl/log.hpp"

namespace lvl::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool is_identify(qa::Task t) {
  return t == qa::Task::kSP02 || t == qa::Task::kSP03 || t == qa::Task::kSP04;
}

void reject_unknown(const std::map<std::string, std::string>& preds, const std::set<std::string>& known,
                    const char* what) {
  for (const auto& [id, text] : preds) {
    if (!known.contains(id)) throw ConfigError(std::string(what) + ": prediction id '" + id + "' has no ground truth");
  }
}

const std::string* lookup(const std::map<std::string, std::string>& preds, const std::string& id) {
  auto it = preds.find(id);
  return it == preds.end() ? nullptr : &it->second;
}

}  // namespace

std::map<std::string, std::string> predictions_from_jsonl(const std::string& text, const std::string& source) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const json j = jsonu::parse_document(line, where);
    if (!j.is_object()) throw ParseError(where, "prediction must be a JSON object");
    std::string id = jsonu::get_string(j, "id", "", where);
    std::string t = jsonu::get_string(j, "text", "", where);
    if (out.contains(id)) throw ParseError(where, "duplicate prediction id '" + id + "'");
    out.emplace(std::move(id), std::move(t));
  }
  return out;
}

std::string predictions_to_jsonl(const std::vector<std::pair<std::string, std::string>>& preds) {
  std::string out;
  for (const auto& [id, text] : preds) {
    ordered_json j;
    j["id"] = id;
    j["text"] = text;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<metrics::PlanningSample> planning_samples(const std::vector<Scene>& scenes,
                                                      const std::map<std::string, std::string>& preds) {
  std::vector<metrics::PlanningSample> out;
  std::set<std::string> known;
  std::size_t missing = 0;
  for (const auto& scene : scenes) {
    for (auto& s : metrics::planning_samples_from_scene(scene)) {
      known.insert(s.id);
      if (const std::string* text = lookup(preds, s.id)) {
        auto parsed = codec::parse_waypoints(*text);
        if (parsed) s.pred = parsed.value();
      } else {
        ++missing;
      }
      out.push_back(std::move(s));
    }
  }
  reject_unknown(preds, known, "planning");
  if (missing > 0) log::warn("planning: ", missing, " samples have no prediction and count as unparseable");
  return out;
}

std::vector<metrics::GroundingSample> grounding_samples(const std::vector<qa::QARecord>& records,
                                                        const std::map<std::string, std::string>& preds) {
  std::vector<metrics::GroundingSample> out;
  std::set<std::string> known;
  std::size_t missing = 0;
  for (const auto& r : records) {
    known.insert(r.id);
    if (!is_identify(r.task)) continue;
    const auto gt = codec::parse_object_answer(r.answer);
    if (!gt) throw ParseError(r.id, "ground-truth answer does not parse: " + gt.failure().message());
    if (!r.meta.contains("distance") || !r.meta["distance"].is_number()) {
      throw ParseError(r.id, "missing field 'meta.distance'");
    }
    metrics::GroundingSample s;
    s.id = r.id;
    s.gt = gt->to_bev();
    s.gt_distance = r.meta["distance"].get<double>();
    if (const std::string* text = lookup(preds, r.id)) {
      s.predicted_text = *text;
    } else {
      ++missing;
    }
    out.push_back(std::move(s));
  }
  reject_unknown(preds, known, "grounding");
  if (missing > 0) log::warn("grounding: ", missing, " samples have no prediction and score 0");
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> text_pairs(
    const std::vector<qa::QARecord>& records, const std::map<std::string, std::string>& preds) {
  std::vector<std::string> cands, refs;
  std::set<std::string> known;
  std::size_t missing = 0;
  for (const auto& r : records) {
    known.insert(r.id);
    const std::string* text = lookup(preds, r.id);
    if (text == nullptr) ++missing;
    cands.push_back(text ? *text : std::string());
    refs.push_back(r.answer);
  }
  reject_unknown(preds, known, "text");
  if (missing > 0) log::warn("text: ", missing, " records have no prediction and are scored as empty");
  return {std::move(cands), std::move(refs)};
}

PipelineConfig pipeline_config_from_string(const std::string& text, const std::string& src) {
  const json doc = jsonu::parse_document(text, src);
  if (!doc.is_object()) throw ParseError(src, "pipeline config must be a JSON object");
  PipelineConfig cfg;
  if (doc.contains("scene_spec")) cfg.spec = spec_from_string(doc["scene_spec"].dump(), src + ":scene_spec");
  if (doc.contains("scene_seeds")) {
    const auto& seeds = jsonu::get_array(doc, "scene_seeds", "", src);
    cfg.scene_seeds.clear();
    for (const auto& s : seeds) {
      if (!s.is_number_unsigned()) throw ParseError(src, "scene_seeds entries must be non-negative integers");
      cfg.scene_seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (doc.contains("qa")) cfg.gen = qa::config_from_string(doc["qa"].dump(), src + ":qa");
  if (doc.contains("predictions")) {
    const std::string mode = jsonu::get_string(doc, "predictions", "", src);
    if (mode == "oracle") {
      cfg.mode = PredictionMode::kOracle;
    } else if (mode == "blank") {
      cfg.mode = PredictionMode::kBlank;
    } else {
      throw ParseError(src, "field 'predictions' must be \"oracle\" or \"blank\"");
    }
  }
  if (cfg.scene_seeds.empty()) throw ConfigError(src + ": scene_seeds must not be empty");
  return cfg;
}

std::string pipeline_config_to_string(const PipelineConfig& cfg) {
  ordered_json j;
  j["scene_spec"] = ordered_json::parse(spec_to_string(cfg.spec));
  j["scene_seeds"] = cfg.scene_seeds;
  j["qa"] = ordered_json::parse(qa::config_to_string(cfg.gen));
  j["predictions"] = cfg.mode == PredictionMode::kOracle ? "oracle" : "blank";
  return j.dump(1) + "\n";
}

metrics::MetricsReport run_pipeline(const PipelineConfig& cfg, const std::filesystem::path* out_dir) {
  if (cfg.scene_seeds.empty()) throw ConfigError("pipeline: no scene seeds");
  if (std::set<std::uint64_t>(cfg.scene_seeds.begin(), cfg.scene_seeds.end()).size() != cfg.scene_seeds.size()) {
    throw ConfigError("pipeline: scene seeds must be distinct");
  }
  cfg.gen.validate();
  std::vector<Scene> scenes;
  std::vector<qa::QARecord> records;
  for (std::uint64_t seed : cfg.scene_seeds) {
    SceneSpec spec = cfg.spec;
    spec.seed = seed;
    scenes.push_back(generate_scene(spec));
    auto recs = qa::generate_all(scenes.back(), cfg.gen);
    records.insert(records.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }

  const bool blank = cfg.mode == PredictionMode::kBlank;
  std::vector<std::pair<std::string, std::string>> qa_preds, plan_preds;
  for (const auto& r : records) qa_preds.emplace_back(r.id, blank ? std::string() : r.answer);
  for (const auto& scene : scenes) {
    for (const auto& s : metrics::planning_samples_from_scene(scene)) {
      plan_preds.emplace_back(s.id, blank ? std::string() : codec::format_waypoints(s.gt));
    }
  }
  const std::map<std::string, std::string> qa_map(qa_preds.begin(), qa_preds.end());
  const std::map<std::string, std::string> plan_map(plan_preds.begin(), plan_preds.end());

  metrics::MetricsReport report;
  const auto plan = planning_samples(scenes, plan_map);
  if (!plan.empty()) report.planning = metrics::evaluate_planning(plan);
  const auto ground = grounding_samples(records, qa_map);
  if (!ground.empty()) report.grounding = metrics::grounding_miou(ground);
  if (!records.empty()) {
    const auto [cands, refs] = text_pairs(records, qa_map);
    report.text = metrics::evaluate_text(cands, refs);
  }

  if (out_dir != nullptr) {
    for (const auto& scene : scenes) save_scene(*out_dir / (scene.scene_id + ".json"), scene);
    io::write_file_atomic(*out_dir / "qa.jsonl", qa::to_jsonl(records, "lvl qa"));
    io::write_file_atomic(*out_dir / "predictions.jsonl", predictions_to_jsonl(qa_preds));
    io::write_file_atomic(*out_dir / "planning_predictions.jsonl", predictions_to_jsonl(plan_preds));
    io::write_file_atomic(*out_dir / "report.json", metrics::report_to_json(report).dump(1) + "\n");
    io::write_file_atomic(*out_dir / "report.txt", metrics::report_to_table(report));
  }
  return report;
}

}  // namespace lvl::cli
