#pragma once

#include <array>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvl/answer_codec.hpp"
#include "lvl/geometry.hpp"
#include "lvl/scene.hpp"

namespace lvl::metrics {

inline constexpr int kSteps = 6;
inline constexpr double kDefaultEgoLength = 4.08;
inline constexpr double kDefaultEgoWidth = 1.73;
inline constexpr double kDefaultDrivableMargin = 1.75;
inline constexpr double kGroundingBinWidth = 15.0;

// ---- open-loop planning ----------------------------------------------------

struct PlanningSample {
  std::string id;
  std::optional<codec::WaypointList> pred;  // nullopt: unparseable answer
  codec::WaypointList gt;
  std::array<std::vector<BevBox>, kSteps> agents_per_step;
  std::vector<Polyline2D> lanes;  // ego frame
  double ego_length = kDefaultEgoLength;
  double ego_width = kDefaultEgoWidth;
};

// Per-step values plus the 1 s / 2 s / 3 s horizons (waypoints 2, 4, 6) and
// the mean over all six steps.
struct HorizonValues {
  std::array<double, kSteps> per_step{};
  double at_1s() const { return per_step[1]; }
  double at_2s() const { return per_step[3]; }
  double at_3s() const { return per_step[5]; }
  double avg() const;
};

struct PlanningMetrics {
  HorizonValues l2;                 // m; NaN when every sample was unparseable
  HorizonValues collision_rate;     // %
  HorizonValues intersection_rate;  // %
  std::size_t samples = 0;
  std::size_t unparseable = 0;  // excluded from L2, flagged at every step otherwise
};

// Heading at each predicted waypoint: direction of pred_k - pred_{k-1} with
// pred_0 at the origin; a zero displacement keeps the previous heading.
std::array<double, kSteps> waypoint_headings(const codec::WaypointList& w);

// Flag at step k = (event at k) OR flag at k-1.
std::array<bool, kSteps> collision_flags(const PlanningSample& s);
std::array<bool, kSteps> intersection_flags(const PlanningSample& s, double margin);

HorizonValues l2_displacement(std::span<const PlanningSample> samples, std::size_t* excluded = nullptr);
HorizonValues collision_rate(std::span<const PlanningSample> samples);
HorizonValues intersection_rate(std::span<const PlanningSample> samples,
                                double margin = kDefaultDrivableMargin);

// Per-sample work runs in parallel; reductions are in index order, so the
// result is bit-identical to the serial reference.
PlanningMetrics evaluate_planning(std::span<const PlanningSample> samples,
                                  double margin = kDefaultDrivableMargin);
namespace serial {
PlanningMetrics evaluate_planning(std::span<const PlanningSample> samples,
                                  double margin = kDefaultDrivableMargin);
}

// One sample per frame with six future frames: the ego's future path and
// agent boxes in that frame's ego coordinates. Predictions are left unset.
// Requires a timestep dividing 0.5 s.
std::vector<PlanningSample> planning_samples_from_scene(const Scene& scene);
std::string planning_sample_id(const std::string& scene_id, std::size_t frame);

// ---- grounding ---------------------------------------------------------------

struct GroundingSample {
  std::string id;
  std::string predicted_text;
  BevBox gt;
  double gt_distance = 0.0;
};

struct GroundingMetrics {
  std::array<std::optional<double>, 4> bin_iou;  // empty bins: nullopt
  std::array<std::size_t, 4> bin_count{};
  double miou = 0.0;
  std::size_t samples = 0;
  std::size_t parse_failures = 0;
};

std::size_t distance_bin(double distance);
const char* distance_bin_label(std::size_t bin);

// IoU of the parsed prediction against gt; any parse failure scores 0.
double grounding_iou(const GroundingSample& s);
GroundingMetrics grounding_miou(std::span<const GroundingSample> samples);
namespace serial {
GroundingMetrics grounding_miou(std::span<const GroundingSample> samples);
}

// ---- text --------------------------------------------------------------------

// Lowercased; whitespace separates tokens; each ASCII punctuation character
// is a token of its own.
std::vector<std::string> tokenize(std::string_view text);

// Corpus BLEU-4, uniform weights, brevity penalty, no smoothing.
double bleu4(std::span<const std::string> candidates, std::span<const std::string> references);
// Mean per-pair LCS F-measure with beta = 1.2.
double rouge_l(std::span<const std::string> candidates, std::span<const std::string> references,
               double beta = 1.2);
// Plain CIDEr: TF-IDF vectors over the reference n-gram vocabulary,
// IDF = log(N / df) over N reference sets, cosine x10 averaged over n=1..4.
double cider(std::span<const std::string> candidates, std::span<const std::string> references);

struct TextMetrics {
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  std::size_t samples = 0;
};
TextMetrics evaluate_text(std::span<const std::string> candidates,
                          std::span<const std::string> references);

// ---- report ------------------------------------------------------------------

struct MetricsReport {
  std::optional<PlanningMetrics> planning;
  std::optional<GroundingMetrics> grounding;
  std::optional<TextMetrics> text;
};

nlohmann::ordered_json report_to_json(const MetricsReport& report);
std::string report_to_table(const MetricsReport& report);

}  // namespace lvl::metrics
