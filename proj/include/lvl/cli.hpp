#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lvl/metrics.hpp"
#include "lvl/qa.hpp"
#include "lvl/scene.hpp"

namespace lvl::cli {

inline constexpr const char* kToolName = "lvl";
inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 validation or parse failure, 2 internal
// invariant violation. Diagnostics go to stderr only.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // without the program name

// ---- predictions and ground truth -------------------------------------------

// Predictions JSONL: {"id": ..., "text": ...} per line; '#' lines and blank
// lines are skipped. Duplicate ids are a ParseError.
std::map<std::string, std::string> predictions_from_jsonl(const std::string& text, const std::string& source);
std::string predictions_to_jsonl(const std::vector<std::pair<std::string, std::string>>& preds);

// Ground truth from scenes; samples without a prediction count as
// unparseable (warned). Unknown prediction ids are a ConfigError.
std::vector<metrics::PlanningSample> planning_samples(const std::vector<Scene>& scenes,
                                                      const std::map<std::string, std::string>& preds);
// Object-identification records (SP-02/03/04, including the grounding
// benchmark); the gt box is the record's own answer parsed by the codec.
std::vector<metrics::GroundingSample> grounding_samples(const std::vector<qa::QARecord>& records,
                                                        const std::map<std::string, std::string>& preds);
// (candidates, references) over every record; a missing prediction is "".
std::pair<std::vector<std::string>, std::vector<std::string>> text_pairs(
    const std::vector<qa::QARecord>& records, const std::map<std::string, std::string>& preds);

// ---- end-to-end ----------------------------------------------------------------

enum class PredictionMode { kOracle, kBlank };

struct PipelineConfig {
  SceneSpec spec;                        // seed replaced per entry of scene_seeds
  std::vector<std::uint64_t> scene_seeds = {1, 2, 3};
  qa::GenConfig gen;
  PredictionMode mode = PredictionMode::kOracle;
};

PipelineConfig pipeline_config_from_string(const std::string& text, const std::string& source);
std::string pipeline_config_to_string(const PipelineConfig& cfg);

// Scenes -> QA -> predictions (ground-truth answers, or all blank) -> eval.
// When out_dir is given, every intermediate and the report are written there.
metrics::MetricsReport run_pipeline(const PipelineConfig& cfg, const std::filesystem::path* out_dir = nullptr);

}  // namespace lvl::cli
