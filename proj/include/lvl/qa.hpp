#pragma once

#include <array>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lvl/camera.hpp"
#include "lvl/rng.hpp"
#include "lvl/scene.hpp"

namespace lvl::qa {

enum class Task { kSP01, kSP02, kSP03, kSP04, kSR01, kSR02, kSR03, kSR04 };
inline constexpr std::array<Task, 8> kAllTasks = {Task::kSP01, Task::kSP02, Task::kSP03,
                                                  Task::kSP04, Task::kSR01, Task::kSR02,
                                                  Task::kSR03, Task::kSR04};

const char* task_name(Task t);  // "SP-01", ...
Task task_from_name(const std::string& name);

struct OverlayOp {
  enum class Kind { kArrow, kMaskRect };
  Kind kind = Kind::kArrow;
  std::string camera;
  Vec2 tail = Vec2::Zero();  // arrow only
  Vec2 head = Vec2::Zero();  // arrow only
  Rect2D rect;               // mask only

  static OverlayOp arrow(std::string camera, const Vec2& tail, const Vec2& head);
  static OverlayOp mask(std::string camera, const Rect2D& rect);
};

struct QARecord {
  std::string id;
  std::string scene_id;
  std::size_t frame_index = 0;
  Task task = Task::kSP01;
  std::string question;
  std::string answer;
  std::vector<OverlayOp> overlays;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

struct GenConfig {
  std::uint64_t seed = 0;
  std::array<int, 8> counts{};  // indexed by Task
  // SP-01 query region, ego frame
  double sp01_x_min = 5.0, sp01_x_max = 20.0;
  double sp01_y_min = -5.0, sp01_y_max = 5.0;
  double drivable_margin = 1.75;
  VisibilityFilter visibility;
  std::vector<double> sr04_intervals = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  int max_attempts = 8;
  bool grounding_benchmark = false;

  void validate() const;
  int& count(Task t) { return counts[static_cast<std::size_t>(t)]; }
  int count(Task t) const { return counts[static_cast<std::size_t>(t)]; }
};

GenConfig config_from_string(const std::string& text, const std::string& source = "<string>");
std::string config_to_string(const GenConfig& cfg);

// A projected annotation passing the visibility filter in one camera.
struct Candidate {
  std::size_t box_index = 0;
  std::string camera;
  Projection projection;
};

// Ego-frame view of one frame plus every (object, camera) pair that passes
// the visibility filter, in annotation-then-rig order.
struct FrameContext {
  EgoView view;
  std::vector<Candidate> candidates;
};
FrameContext build_context(const Scene& scene, std::size_t frame, const VisibilityFilter& filter);

enum class Cue { kBoxText, kArrow, kMask };

// Each generator returns nullopt (with a diagnostic) when its precondition
// does not hold for the frame.
std::optional<QARecord> gen_sp01(const Scene& scene, std::size_t frame, const GenConfig& cfg, Rng& rng);
std::optional<QARecord> gen_identify(const Scene& scene, std::size_t frame, const GenConfig& cfg,
                                     Rng& rng, Cue cue);
std::optional<QARecord> gen_sr01(const Scene& scene, std::size_t frame, const GenConfig& cfg, Rng& rng);
std::optional<QARecord> gen_sr02(const Scene& scene, std::size_t frame, const GenConfig& cfg, Rng& rng);
std::optional<QARecord> gen_sr03(const Scene& scene, std::size_t frame, const GenConfig& cfg, Rng& rng);
std::optional<QARecord> gen_sr04(const Scene& scene, std::size_t frame, const GenConfig& cfg, Rng& rng);

// Grounding benchmark: per frame, one visible object sampled from each
// ego-distance range [0,15), [15,30), [30,45), [45,inf), as SP-02 records.
std::vector<QARecord> gen_grounding_benchmark(const Scene& scene, const GenConfig& cfg, Rng& rng);

// Records for every task family per cfg counts, in task order. Skips are
// logged and never fatal. Pure function of (scene, cfg).
std::vector<QARecord> generate_all(const Scene& scene, const GenConfig& cfg);

// Camera whose optical axis is angularly closest to the ego-frame bearing.
const CameraModel& facing_camera(const Scene& scene, const Vec2& p_ego);

// JSONL: a "#" header comment line, then one record per line with keys in
// the order id, scene_id, frame_index, task, question, answer, overlays, meta.
std::string to_jsonl(const std::vector<QARecord>& records, const std::string& header);
std::vector<QARecord> from_jsonl(const std::string& text, const std::string& source = "<string>");
nlohmann::ordered_json record_to_json(const QARecord& r);

}  // namespace lvl::qa
