#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "lvl/answer_codec.hpp"
#include "lvl/errors.hpp"
#include "lvl/log.hpp"
#include "lvl/qa.hpp"

namespace lvl::qa {

using codec::format_tenths;
using nlohmann::ordered_json;

namespace {

constexpr double kGroundingBinWidth = 15.0;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

QARecord base_record(const Scene& scene, std::size_t frame, Task task) {
  QARecord r;
  r.scene_id = scene.scene_id;
  r.frame_index = frame;
  r.task = task;
  return r;
}

ordered_json box_json(const Box3D& b) {
  ordered_json o;
  o["category"] = b.category;
  o["x"] = b.center.x();
  o["y"] = b.center.y();
  o["z"] = b.center.z();
  o["length"] = b.length;
  o["width"] = b.width;
  o["height"] = b.height;
  o["yaw"] = b.yaw;
  return o;
}

ordered_json rect_json(const Rect2D& r) { return {r.x_min, r.y_min, r.x_max, r.y_max}; }

// Arrow pointing at `head`, tail about 100 px away along the first diagonal
// that stays inside the image.
OverlayOp arrow_to(const CameraModel& cam, const Vec2& head) {
  const double w = cam.width - 1.0;
  const double h = cam.height - 1.0;
  const Vec2 tip(std::clamp(head.x(), 0.0, w), std::clamp(head.y(), 0.0, h));
  const Vec2 dirs[4] = {{-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}, {1.0, 1.0}};
  const double len = 100.0 / std::numbers::sqrt2;
  for (const Vec2& d : dirs) {
    const Vec2 tail = tip + len * d;
    if (tail.x() >= 0.0 && tail.x() <= w && tail.y() >= 0.0 && tail.y() <= h) {
      return OverlayOp::arrow(cam.name, tail, tip);
    }
  }
  const Vec2 tail((tip.x() < 0.5 * w) ? w : 0.0, tip.y());
  return OverlayOp::arrow(cam.name, tail, tip);
}

std::string question_point(const Vec2& p) {
  return "(" + format_tenths(p.x()) + ", " + format_tenths(p.y()) + ")";
}

}  // namespace

const char* task_name(Task t) {
  switch (t) {
    case Task::kSP01: return "SP-01";
    case Task::kSP02: return "SP-02";
    case Task::kSP03: return "SP-03";
    case Task::kSP04: return "SP-04";
    case Task::kSR01: return "SR-01";
    case Task::kSR02: return "SR-02";
    case Task::kSR03: return "SR-03";
    case Task::kSR04: return "SR-04";
  }
  return "";
}

Task task_from_name(const std::string& name) {
  for (Task t : kAllTasks) {
    if (name == task_name(t)) return t;
  }
  throw ParseError("", "unknown task '" + name + "'");
}

OverlayOp OverlayOp::arrow(std::string camera, const Vec2& tail, const Vec2& head) {
  OverlayOp op;
  op.kind = Kind::kArrow;
  op.camera = std::move(camera);
  op.tail = tail;
  op.head = head;
  return op;
}

OverlayOp OverlayOp::mask(std::string camera, const Rect2D& rect) {
  OverlayOp op;
  op.kind = Kind::kMaskRect;
  op.camera = std::move(camera);
  op.rect = rect;
  return op;
}

void GenConfig::validate() const {
  for (int c : counts) {
    if (c < 0) throw ConfigError("qa config: counts must be >= 0");
  }
  if (!(drivable_margin > 0.0)) throw ConfigError("qa config: drivable margin must be > 0");
  if (!(sp01_x_min <= sp01_x_max && sp01_y_min <= sp01_y_max)) {
    throw ConfigError("qa config: empty SP-01 region");
  }
  for (double t : sr04_intervals) {
    if (!(t > 0.0)) throw ConfigError("qa config: SR-04 intervals must be > 0");
  }
  if (max_attempts < 1) throw ConfigError("qa config: max_attempts must be >= 1");
}

const CameraModel& facing_camera(const Scene& scene, const Vec2& p_ego) {
  const double bearing = std::atan2(p_ego.y(), p_ego.x());
  const CameraModel* best = nullptr;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& cam : scene.cameras) {
    const double gap = std::abs(normalize_angle(bearing - cam.yaw_in_ego()));
    if (gap < best_gap) {
      best_gap = gap;
      best = &cam;
    }
  }
  if (best == nullptr) throw DomainError("scene " + scene.scene_id + " has no cameras");
  return *best;
}

FrameContext build_context(const Scene& scene, std::size_t frame, const VisibilityFilter& filter) {
  FrameContext ctx;
  ctx.view = to_ego_frame(scene, frame);
  for (std::size_t i = 0; i < ctx.view.boxes.size(); ++i) {
    for (const auto& cam : scene.cameras) {
      auto proj = project_box_to_image(cam, ctx.view.boxes[i]);
      if (proj && filter.passes(*proj)) ctx.candidates.push_back({i, cam.name, *proj});
    }
  }
  return ctx;
}

std::optional<QARecord> gen_sp01(const Scene& scene, std::size_t frame, const GenConfig& cfg,
                                 Rng& rng) {
  if (scene.lanes.empty()) {
    log::info("SP-01 skipped: scene ", scene.scene_id, " has no lanes");
    return std::nullopt;
  }
  const EgoView view = to_ego_frame(scene, frame);
  // The question shows the point at 0.1 m; the answer uses that same point.
  const Vec2 q(codec::round_tenths(rng.uniform(cfg.sp01_x_min, cfg.sp01_x_max)),
               codec::round_tenths(rng.uniform(cfg.sp01_y_min, cfg.sp01_y_max)));
  const bool inside = drivable_contains(view.lanes, q, cfg.drivable_margin);
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& lane : view.lanes) nearest = std::min(nearest, point_polyline_distance(q, lane));

  QARecord r = base_record(scene, frame, Task::kSP01);
  r.question = "For a potential future position at " + question_point(q) +
               ", is it in a drivable area?";
  r.answer = inside ? "Yes" : "No";
  r.meta["query"] = {q.x(), q.y()};
  r.meta["margin"] = cfg.drivable_margin;
  r.meta["min_lane_distance"] = nearest;
  r.meta["drivable"] = inside;
  return r;
}

std::optional<QARecord> gen_identify(const Scene& scene, std::size_t frame, const GenConfig& cfg,
                                     Rng& rng, Cue cue) {
  const FrameContext ctx = build_context(scene, frame, cfg.visibility);
  const Task task = cue == Cue::kBoxText ? Task::kSP02 : cue == Cue::kArrow ? Task::kSP03 : Task::kSP04;
  if (ctx.candidates.empty()) {
    log::info(task_name(task), " skipped: no visible candidates in ", scene.scene_id, " frame ", frame);
    return std::nullopt;
  }
  const Candidate& c = ctx.candidates[rng.index(ctx.candidates.size())];
  const Box3D& box = ctx.view.boxes[c.box_index];
  const Rect2D& rect = c.projection.rect;

  QARecord r = base_record(scene, frame, task);
  switch (cue) {
    case Cue::kBoxText:
      r.question = "Identify the object in <" + c.camera + ", " + format_tenths(rect.x_min) + ", " +
                   format_tenths(rect.y_min) + ", " + format_tenths(rect.x_max) + ", " +
                   format_tenths(rect.y_max) + "> and describe its 3D information.";
      break;
    case Cue::kArrow:
      r.question = "Identify the object cued by the arrow and describe its 3D information.";
      r.overlays.push_back(arrow_to(scene.camera(c.camera), rect.center()));
      break;
    case Cue::kMask:
      r.question = "Identify the object in the masked region and describe its 3D information.";
      r.overlays.push_back(OverlayOp::mask(c.camera, rect));
      break;
  }
  r.answer = codec::format_object_answer(box, box.category, c.camera);
  r.meta["track_ids"] = {box.track_id};
  r.meta["cameras"] = {c.camera};
  r.meta["rect"] = rect_json(rect);
  r.meta["visibility"] = c.projection.visibility;
  r.meta["distance"] = box.center.norm();
  r.meta["gt_box"] = box_json(box);
  return r;
}

std::optional<QARecord> gen_sr01(const Scene& scene, std::size_t frame, const GenConfig& cfg,
                                 Rng& rng) {
  if (scene.lanes.empty()) {
    log::info("SR-01 skipped: scene ", scene.scene_id, " has no lanes");
    return std::nullopt;
  }
  const EgoView view = to_ego_frame(scene, frame);
  const std::size_t lane_index = rng.index(view.lanes.size());
  const Polyline2D& lane = view.lanes[lane_index];

  // Three points 10 m apart, starting near the ego's closest approach.
  const double total = lane.length();
  double s_closest = 0.0;
  {
    double walked = 0.0, best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < lane.points.size(); ++i) {
      const double d = point_segment_distance(Vec2::Zero(), lane.points[i - 1], lane.points[i]);
      if (d < best) {
        best = d;
        s_closest = walked;
      }
      walked += (lane.points[i] - lane.points[i - 1]).norm();
    }
  }
  const double spacing = std::min(10.0, total / 3.0);
  const double start =
      std::clamp(s_closest + rng.uniform(-10.0, 10.0), 0.0, std::max(0.0, total - 2.0 * spacing));
  std::array<Vec2, 3> pts;
  for (int i = 0; i < 3; ++i) pts[i] = lane.point_at_fraction((start + i * spacing) / total);

  std::vector<std::size_t> on_lane;
  for (std::size_t i = 0; i < view.boxes.size(); ++i) {
    if (point_polyline_distance(view.boxes[i].center.head<2>(), lane) <= cfg.drivable_margin) {
      on_lane.push_back(i);
    }
  }
  std::sort(on_lane.begin(), on_lane.end(), [&](std::size_t a, std::size_t b) {
    return view.boxes[a].track_id < view.boxes[b].track_id;
  });

  QARecord r = base_record(scene, frame, Task::kSR01);
  r.question = "What objects are on the lane defined by points " + question_point(pts[0]) + ", " +
               question_point(pts[1]) + ", " + question_point(pts[2]) + "?";
  if (on_lane.empty()) {
    r.answer = "There is no object on this lane.";
  } else {
    for (std::size_t k = 0; k < on_lane.size(); ++k) {
      const Box3D& b = view.boxes[on_lane[k]];
      if (k > 0) r.answer += " ";
      r.answer += codec::format_object_answer(b, b.category, "");
    }
  }
  ordered_json ids = ordered_json::array();
  for (std::size_t i : on_lane) ids.push_back(view.boxes[i].track_id);
  r.meta["lane_id"] = lane.id;
  r.meta["lane_points"] = {{pts[0].x(), pts[0].y()}, {pts[1].x(), pts[1].y()}, {pts[2].x(), pts[2].y()}};
  r.meta["margin"] = cfg.drivable_margin;
  r.meta["track_ids"] = std::move(ids);
  return r;
}

std::optional<QARecord> gen_sr02(const Scene& scene, std::size_t frame, const GenConfig& /*cfg*/,
                                 Rng& rng) {
  const EgoView view = to_ego_frame(scene, frame);
  std::vector<Sector> sectors = {Sector::kFrontLeft, Sector::kFrontRight, Sector::kBackLeft,
                                 Sector::kBackRight};
  while (!sectors.empty()) {
    const std::size_t pick = rng.index(sectors.size());
    const Sector sector = sectors[pick];
    sectors.erase(sectors.begin() + static_cast<long>(pick));
    const Box3D* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& b : view.boxes) {
      const Vec2 p = b.center.head<2>();
      if (sector_of(p) != sector) continue;
      const double d = p.norm();
      if (d < best_d || (d == best_d && best != nullptr && b.track_id < best->track_id)) {
        best_d = d;
        best = &b;
      }
    }
    if (best == nullptr) continue;
    const std::string cam = facing_camera(scene, best->center.head<2>()).name;
    QARecord r = base_record(scene, frame, Task::kSR02);
    r.question = std::string("What is the nearest object in the ") + sector_phrase(sector) +
                 " direction?";
    r.answer = codec::format_object_answer(*best, best->category, cam);
    r.meta["sector"] = sector_phrase(sector);
    r.meta["track_ids"] = {best->track_id};
    r.meta["cameras"] = {cam};
    r.meta["distance"] = best_d;
    r.meta["gt_box"] = box_json(*best);
    return r;
  }
  log::info("SR-02 skipped: every sector empty in ", scene.scene_id, " frame ", frame);
  return std::nullopt;
}

std::optional<QARecord> gen_sr03(const Scene& scene, std::size_t frame, const GenConfig& cfg,
                                 Rng& rng) {
  const FrameContext ctx = build_context(scene, frame, cfg.visibility);
  std::map<std::size_t, std::vector<const Candidate*>> by_object;
  for (const auto& c : ctx.candidates) by_object[c.box_index].push_back(&c);
  if (by_object.size() < 2) {
    log::info("SR-03 skipped: fewer than two visible objects in ", scene.scene_id, " frame ", frame);
    return std::nullopt;
  }
  std::vector<std::size_t> objects;
  for (const auto& [idx, _] : by_object) objects.push_back(idx);
  const std::size_t ia = rng.index(objects.size());
  std::size_t ib = rng.index(objects.size() - 1);
  if (ib >= ia) ++ib;
  const auto& cands_a = by_object[objects[ia]];
  const auto& cands_b = by_object[objects[ib]];
  const Candidate& ca = *cands_a[rng.index(cands_a.size())];
  const Candidate& cb = *cands_b[rng.index(cands_b.size())];
  const Box3D& a = ctx.view.boxes[ca.box_index];
  const Box3D& b = ctx.view.boxes[cb.box_index];
  const double d = (a.centroid() - b.centroid()).norm();

  QARecord r = base_record(scene, frame, Task::kSR03);
  r.question = "Please determine the metric distance (in meters) separating the two indicated objects.";
  r.answer = codec::format_scalar_answer(d);
  r.overlays.push_back(arrow_to(scene.camera(ca.camera), ca.projection.rect.center()));
  r.overlays.push_back(arrow_to(scene.camera(cb.camera), cb.projection.rect.center()));
  r.meta["track_ids"] = {a.track_id, b.track_id};
  r.meta["cameras"] = {ca.camera, cb.camera};
  r.meta["rects"] = {rect_json(ca.projection.rect), rect_json(cb.projection.rect)};
  r.meta["distance"] = d;
  return r;
}

std::optional<QARecord> gen_sr04(const Scene& scene, std::size_t frame, const GenConfig& cfg,
                                 Rng& rng) {
  if (scene.frames.size() < 2) {
    log::info("SR-04 skipped: single-frame scene ", scene.scene_id);
    return std::nullopt;
  }
  const double dt = scene.frames[1].timestamp - scene.frames[0].timestamp;
  struct Option {
    double interval;
    std::size_t future;
  };
  // Only intervals landing exactly on an annotated frame.
  std::vector<Option> options;
  for (double t : cfg.sr04_intervals) {
    const double steps = t / dt;
    const long m = std::lround(steps);
    if (m < 1 || std::abs(steps - static_cast<double>(m)) > 1e-9) continue;
    const std::size_t future = frame + static_cast<std::size_t>(m);
    if (future >= scene.frames.size()) continue;
    if (std::abs(scene.frames[future].timestamp - scene.frames[frame].timestamp - t) > 1e-9) continue;
    options.push_back({t, future});
  }
  if (options.empty()) {
    log::info("SR-04 skipped: no interval fits the horizon of ", scene.scene_id, " from frame ", frame);
    return std::nullopt;
  }
  const Option opt = options[rng.index(options.size())];
  const Frame& now = scene.frames[frame];
  const Frame& later = scene.frames[opt.future];
  std::vector<std::pair<std::size_t, std::size_t>> persistent;  // (now idx, later idx)
  for (std::size_t i = 0; i < now.annotations.size(); ++i) {
    for (std::size_t j = 0; j < later.annotations.size(); ++j) {
      if (later.annotations[j].track_id == now.annotations[i].track_id) persistent.emplace_back(i, j);
    }
  }
  if (persistent.empty()) {
    log::info("SR-04 skipped: no persistent tracks in ", scene.scene_id, " frame ", frame);
    return std::nullopt;
  }
  const auto [i_now, i_later] = persistent[rng.index(persistent.size())];
  const Pose global_to_ego = now.ego_pose.inverse();
  const Vec2 cur = global_to_ego.apply(now.annotations[i_now].center).head<2>();
  const Vec2 fut = global_to_ego.apply(later.annotations[i_later].center).head<2>();

  QARecord r = base_record(scene, frame, Task::kSR04);
  r.question = "What is the future position of the object at " + question_point(cur) + " after " +
               format_tenths(opt.interval) + " second?";
  r.answer = codec::format_coordinate_answer(fut);
  r.meta["track_ids"] = {now.annotations[i_now].track_id};
  r.meta["interval"] = opt.interval;
  r.meta["future_frame_index"] = opt.future;
  r.meta["current"] = {cur.x(), cur.y()};
  r.meta["future"] = {fut.x(), fut.y()};
  return r;
}

std::vector<QARecord> gen_grounding_benchmark(const Scene& scene, const GenConfig& cfg, Rng& rng) {
  std::vector<QARecord> out;
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const FrameContext ctx = build_context(scene, f, cfg.visibility);
    std::array<std::vector<const Candidate*>, 4> bins;
    for (const auto& c : ctx.candidates) {
      const double d = ctx.view.boxes[c.box_index].center.norm();
      bins[std::min<std::size_t>(3, static_cast<std::size_t>(d / kGroundingBinWidth))].push_back(&c);
    }
    for (std::size_t bin = 0; bin < bins.size(); ++bin) {
      if (bins[bin].empty()) continue;
      const Candidate& c = *bins[bin][rng.index(bins[bin].size())];
      const Box3D& box = ctx.view.boxes[c.box_index];
      const Rect2D& rect = c.projection.rect;
      QARecord r = base_record(scene, f, Task::kSP02);
      r.id = scene.scene_id + "-GRD-" + std::to_string(f) + "-" + std::to_string(bin);
      r.question = "Identify the object in <" + c.camera + ", " + format_tenths(rect.x_min) + ", " +
                   format_tenths(rect.y_min) + ", " + format_tenths(rect.x_max) + ", " +
                   format_tenths(rect.y_max) + "> and describe its 3D information.";
      r.answer = codec::format_object_answer(box, box.category, c.camera);
      r.meta["benchmark"] = "grounding";
      r.meta["distance_bin"] = bin;
      r.meta["track_ids"] = {box.track_id};
      r.meta["cameras"] = {c.camera};
      r.meta["rect"] = rect_json(rect);
      r.meta["visibility"] = c.projection.visibility;
      r.meta["distance"] = box.center.norm();
      r.meta["gt_box"] = box_json(box);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<QARecord> generate_all(const Scene& scene, const GenConfig& cfg) {
  cfg.validate();
  Rng rng(Rng::derive(cfg.seed, fnv1a(scene.scene_id)));
  std::vector<QARecord> out;
  for (Task task : kAllTasks) {
    const int n = cfg.count(task);
    int produced = 0;
    for (int i = 0; i < n; ++i) {
      std::optional<QARecord> rec;
      for (int attempt = 0; attempt < cfg.max_attempts && !rec; ++attempt) {
        const std::size_t frame = rng.index(scene.frames.size());
        switch (task) {
          case Task::kSP01: rec = gen_sp01(scene, frame, cfg, rng); break;
          case Task::kSP02: rec = gen_identify(scene, frame, cfg, rng, Cue::kBoxText); break;
          case Task::kSP03: rec = gen_identify(scene, frame, cfg, rng, Cue::kArrow); break;
          case Task::kSP04: rec = gen_identify(scene, frame, cfg, rng, Cue::kMask); break;
          case Task::kSR01: rec = gen_sr01(scene, frame, cfg, rng); break;
          case Task::kSR02: rec = gen_sr02(scene, frame, cfg, rng); break;
          case Task::kSR03: rec = gen_sr03(scene, frame, cfg, rng); break;
          case Task::kSR04: rec = gen_sr04(scene, frame, cfg, rng); break;
        }
      }
      if (!rec) {
        log::warn(task_name(task), " record ", i, " skipped for scene ", scene.scene_id,
                  " after ", cfg.max_attempts, " attempts");
        continue;
      }
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "%04d", produced++);
      rec->id = scene.scene_id + "-" + task_name(task) + "-" + suffix;
      out.push_back(std::move(*rec));
    }
  }
  if (cfg.grounding_benchmark) {
    for (auto& r : gen_grounding_benchmark(scene, cfg, rng)) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lvl::qa
