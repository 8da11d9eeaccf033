#include <cmath>
#include <limits>

#include "lvl/errors.hpp"
#include "lvl/log.hpp"
#include "lvl/metrics.hpp"

namespace lvl::metrics {
namespace {

struct SampleOutcome {
  bool parsed = false;
  std::array<double, kSteps> l2{};
  std::array<bool, kSteps> collision{};
  std::array<bool, kSteps> intersection{};
};

void check_samples(std::span<const PlanningSample> samples) {
  for (const auto& s : samples) {
    if (!(s.ego_length > 0.0 && s.ego_width > 0.0)) throw DomainError(s.id + ": ego footprint must be positive");
    for (const auto& step : s.agents_per_step) {
      for (const auto& b : step) {
        if (!(b.length > 0.0 && b.width > 0.0)) throw DomainError(s.id + ": degenerate agent box");
      }
    }
  }
}

SampleOutcome evaluate_sample(const PlanningSample& s, double margin) {
  SampleOutcome out;
  if (!s.pred) {
    out.collision.fill(true);
    out.intersection.fill(true);
    return out;
  }
  out.parsed = true;
  for (int k = 0; k < kSteps; ++k) out.l2[k] = (s.pred->points[k] - s.gt.points[k]).norm();
  out.collision = collision_flags(s);
  out.intersection = intersection_flags(s, margin);
  return out;
}

PlanningMetrics reduce(std::span<const SampleOutcome> outcomes) {
  PlanningMetrics m;
  m.samples = outcomes.size();
  std::array<double, kSteps> l2_sum{};
  std::array<std::size_t, kSteps> col{}, inter{};
  std::size_t parsed = 0;
  for (const auto& o : outcomes) {
    if (o.parsed) {
      ++parsed;
      for (int k = 0; k < kSteps; ++k) l2_sum[k] += o.l2[k];
    }
    for (int k = 0; k < kSteps; ++k) {
      col[k] += o.collision[k];
      inter[k] += o.intersection[k];
    }
  }
  m.unparseable = m.samples - parsed;
  for (int k = 0; k < kSteps; ++k) {
    m.l2.per_step[k] = parsed > 0 ? l2_sum[k] / static_cast<double>(parsed)
                                  : std::numeric_limits<double>::quiet_NaN();
    m.collision_rate.per_step[k] = 100.0 * static_cast<double>(col[k]) / static_cast<double>(m.samples);
    m.intersection_rate.per_step[k] =
        100.0 * static_cast<double>(inter[k]) / static_cast<double>(m.samples);
  }
  return m;
}

}  // namespace

double HorizonValues::avg() const {
  double sum = 0.0;
  for (double v : per_step) sum += v;
  return sum / kSteps;
}

std::array<double, kSteps> waypoint_headings(const codec::WaypointList& w) {
  std::array<double, kSteps> out{};
  Vec2 prev = Vec2::Zero();
  double heading = 0.0;
  for (int k = 0; k < kSteps; ++k) {
    const Vec2 d = w.points[k] - prev;
    if (d.norm() > 1e-6) heading = std::atan2(d.y(), d.x());
    out[k] = heading;
    prev = w.points[k];
  }
  return out;
}

std::array<bool, kSteps> collision_flags(const PlanningSample& s) {
  std::array<bool, kSteps> flags{};
  if (!s.pred) {
    flags.fill(true);
    return flags;
  }
  const auto headings = waypoint_headings(*s.pred);
  bool hit = false;
  for (int k = 0; k < kSteps; ++k) {
    if (!hit) {
      const BevBox ego{s.pred->points[k].x(), s.pred->points[k].y(), s.ego_length, s.ego_width, headings[k]};
      for (const auto& agent : s.agents_per_step[k]) {
        if (bev_iou(ego, agent) > 0.0) {
          hit = true;
          break;
        }
      }
    }
    flags[k] = hit;
  }
  return flags;
}

std::array<bool, kSteps> intersection_flags(const PlanningSample& s, double margin) {
  std::array<bool, kSteps> flags{};
  if (!s.pred || s.lanes.empty()) {
    flags.fill(true);
    return flags;
  }
  bool out = false;
  for (int k = 0; k < kSteps; ++k) {
    out = out || !drivable_contains(s.lanes, s.pred->points[k], margin);
    flags[k] = out;
  }
  return flags;
}

HorizonValues l2_displacement(std::span<const PlanningSample> samples, std::size_t* excluded) {
  if (samples.empty()) throw DomainError("l2_displacement: no samples");
  const PlanningMetrics m = serial::evaluate_planning(samples);
  if (excluded != nullptr) *excluded = m.unparseable;
  return m.l2;
}

HorizonValues collision_rate(std::span<const PlanningSample> samples) {
  if (samples.empty()) throw DomainError("collision_rate: no samples");
  return serial::evaluate_planning(samples).collision_rate;
}

HorizonValues intersection_rate(std::span<const PlanningSample> samples, double margin) {
  if (samples.empty()) throw DomainError("intersection_rate: no samples");
  return serial::evaluate_planning(samples, margin).intersection_rate;
}

PlanningMetrics evaluate_planning(std::span<const PlanningSample> samples, double margin) {
  if (samples.empty()) throw DomainError("planning evaluation: no samples");
  check_samples(samples);
  for (const auto& s : samples) {
    if (s.pred && s.lanes.empty()) {
      log::warn("planning sample ", s.id, ": no lanes, every step counts as off-road");
    }
  }
  std::vector<SampleOutcome> outcomes(samples.size());
  const long n = static_cast<long>(samples.size());
#pragma omp parallel for schedule(dynamic, 8) if (n > 32)
  for (long i = 0; i < n; ++i) outcomes[i] = evaluate_sample(samples[i], margin);
  return reduce(outcomes);
}

namespace serial {
PlanningMetrics evaluate_planning(std::span<const PlanningSample> samples, double margin) {
  if (samples.empty()) throw DomainError("planning evaluation: no samples");
  check_samples(samples);
  std::vector<SampleOutcome> outcomes;
  outcomes.reserve(samples.size());
  for (const auto& s : samples) outcomes.push_back(evaluate_sample(s, margin));
  return reduce(outcomes);
}
}  // namespace serial

std::string planning_sample_id(const std::string& scene_id, std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu", frame);
  return scene_id + "-PLAN-" + buf;
}

std::vector<PlanningSample> planning_samples_from_scene(const Scene& scene) {
  std::vector<PlanningSample> out;
  if (scene.frames.size() < 2) return out;
  const double dt = scene.frames[1].timestamp - scene.frames[0].timestamp;
  const double ratio = 0.5 / dt;
  const long stride = std::lround(ratio);
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9) {
    throw DomainError("scene " + scene.scene_id + ": timestep does not divide the 0.5 s waypoint spacing");
  }
  for (std::size_t k = 0; k + static_cast<std::size_t>(stride * kSteps) < scene.frames.size(); ++k) {
    const EgoView view = to_ego_frame(scene, k);
    PlanningSample s;
    s.id = planning_sample_id(scene.scene_id, k);
    s.lanes = view.lanes;
    for (int j = 0; j < kSteps; ++j) {
      const Frame& fut = scene.frames[k + static_cast<std::size_t>(stride * (j + 1))];
      s.gt.points[j] = view.global_to_ego.apply(fut.ego_pose.translation).head<2>();
      for (const auto& b : fut.annotations) {
        s.agents_per_step[j].push_back(to_bev(transform_box(view.global_to_ego, b)));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lvl::metrics
