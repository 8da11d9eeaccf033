#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <regex>
#include <sstream>
#include <vector>

namespace lvl::oracle {
namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  a -= kPi;
  return a == -kPi ? kPi : a;
}

std::string degrees(double yaw) {
  const double d = wrap(yaw) * 180.0 / kPi * 10.0;
  long long t = static_cast<long long>(std::floor(std::fabs(d) + 0.5));
  if (d < 0.0) t = -t;
  if (t <= -1800) t += 3600;
  return tenths(static_cast<double>(t) / 10.0);
}

struct Obj {
  double x, y, z, l, w, h, yaw;
  std::string category;
  std::int64_t id;
};

// Ego frame of one annotated frame, from the stored pose matrix.
struct EgoFrame {
  double c, s, tx, ty, tz, heading;
  explicit EgoFrame(const Pose& p)
      : c(p.rotation(0, 0)), s(p.rotation(1, 0)), tx(p.translation.x()), ty(p.translation.y()),
        tz(p.translation.z()), heading(std::atan2(p.rotation(1, 0), p.rotation(0, 0))) {}
  Vec2 xy(double gx, double gy) const {
    const double dx = gx - tx, dy = gy - ty;
    return {c * dx + s * dy, -s * dx + c * dy};
  }
  Obj box(const Box3D& b) const {
    const Vec2 p = xy(b.center.x(), b.center.y());
    return {p.x(), p.y(), b.center.z() - tz, b.length, b.width, b.height, wrap(b.yaw - heading), b.category,
            b.track_id};
  }
};

std::string describe(const Obj& o, const std::string& cam) {
  std::string s = "The object is a " + o.category;
  if (!cam.empty()) s += " in the " + cam;
  return s + ", location: (" + tenths(o.x) + ", " + tenths(o.y) + "), length: " + tenths(o.l) +
         ", width: " + tenths(o.w) + ", height: " + tenths(o.h) + ", angles in degree: " + degrees(o.yaw) + ".";
}

std::vector<Vec3> corners(const Obj& o) {
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  std::vector<Vec3> out;
  for (double z : {o.z, o.z + o.h}) {
    for (double lx : {0.5 * o.l, -0.5 * o.l}) {
      for (double ly : {0.5 * o.w, -0.5 * o.w}) {
        out.emplace_back(o.x + c * lx - s * ly, o.y + s * lx + c * ly, z);
      }
    }
  }
  return out;
}

struct Proj {
  Rect2D rect;
  double visibility;
  std::vector<Vec2> pixels;  // unclamped, positive-depth corners
};

std::optional<Proj> project(const CameraModel& cam, const Obj& o) {
  const Mat3& r = cam.ego_to_cam.rotation;
  const Vec3& t = cam.ego_to_cam.translation;
  const Mat3& k = cam.intrinsics;
  Proj p{};
  int inside = 0;
  for (const Vec3& q : corners(o)) {
    const double xc = r(0, 0) * q.x() + r(0, 1) * q.y() + r(0, 2) * q.z() + t.x();
    const double yc = r(1, 0) * q.x() + r(1, 1) * q.y() + r(1, 2) * q.z() + t.y();
    const double zc = r(2, 0) * q.x() + r(2, 1) * q.y() + r(2, 2) * q.z() + t.z();
    if (!(zc > 0.0)) continue;
    const double u = (k(0, 0) * xc + k(0, 1) * yc) / zc + k(0, 2);
    const double v = k(1, 1) * yc / zc + k(1, 2);
    p.pixels.emplace_back(u, v);
    if (u >= 0.0 && u <= cam.width && v >= 0.0 && v <= cam.height) ++inside;
  }
  if (p.pixels.empty() || inside == 0) return std::nullopt;
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const Vec2& px : p.pixels) {
    x0 = std::min(x0, px.x());
    y0 = std::min(y0, px.y());
    x1 = std::max(x1, px.x());
    y1 = std::max(y1, px.y());
  }
  const double w = cam.width, h = cam.height;
  p.rect = {std::clamp(x0, 0.0, w), std::clamp(y0, 0.0, h), std::clamp(x1, 0.0, w), std::clamp(y1, 0.0, h)};
  p.visibility = inside / 8.0;
  return p;
}

// Thresholds get 1e-6 of slack: the oracle's arithmetic differs from the
// library's in the last bits.
bool visible(const Proj& p, const VisibilityFilter& f) {
  constexpr double slack = 1e-6;
  return p.visibility >= f.min_visible_fraction && p.rect.area() >= f.min_area - slack &&
         p.rect.width() >= f.min_side - slack && p.rect.height() >= f.min_side - slack;
}

double seg_dist(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

double lane_dist(const Vec2& p, const std::vector<Vec2>& lane) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < lane.size(); ++i) best = std::min(best, seg_dist(p, lane[i - 1], lane[i]));
  return best;
}

std::vector<Vec2> ego_lane(const EgoFrame& ef, const Polyline2D& lane) {
  std::vector<Vec2> out;
  for (const Vec2& p : lane.points) out.push_back(ef.xy(p.x(), p.y()));
  return out;
}

std::vector<Vec2> points_in(const std::string& text) {
  static const std::regex re(R"(\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\))");
  std::vector<Vec2> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    out.emplace_back(std::stod((*it)[1].str()), std::stod((*it)[2].str()));
  }
  return out;
}

const CameraModel* find_camera(const Scene& scene, const std::string& name) {
  for (const auto& c : scene.cameras) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Box3D* find_track(const Frame& f, std::int64_t id) {
  for (const auto& b : f.annotations) {
    if (b.track_id == id) return &b;
  }
  return nullptr;
}

std::string rect_text(const Rect2D& r) {
  return tenths(r.x_min) + ", " + tenths(r.y_min) + ", " + tenths(r.x_max) + ", " + tenths(r.y_max);
}

bool near(const Vec2& a, const Vec2& b, double tol) { return (a - b).norm() <= tol; }

template <typename... Args>
std::string why(const qa::QARecord& r, const Args&... args) {
  std::ostringstream os;
  os << r.id << ": ";
  (os << ... << args);
  return os.str();
}

std::string check_identify(const Scene& scene, const qa::QARecord& r, const qa::GenConfig& cfg,
                           const EgoFrame& ef, const Frame& frame) {
  const auto id = r.meta.at("track_ids").at(0).get<std::int64_t>();
  const auto cam_name = r.meta.at("cameras").at(0).get<std::string>();
  const Box3D* b = find_track(frame, id);
  const CameraModel* cam = find_camera(scene, cam_name);
  if (b == nullptr || cam == nullptr) return why(r, "unknown track or camera");
  const Obj o = ef.box(*b);
  const auto proj = project(*cam, o);
  if (!proj || !visible(*proj, cfg.visibility)) return why(r, "target not visible in ", cam_name);
  if (r.answer != describe(o, cam_name)) return why(r, "answer '", r.answer, "' expected '", describe(o, cam_name), "'");
  const Rect2D& rect = proj->rect;
  const Vec2 center = rect.center();
  if (r.task == qa::Task::kSP02) {
    const std::string q = "Identify the object in <" + cam_name + ", " + rect_text(rect) +
                          "> and describe its 3D information.";
    if (r.question != q) return why(r, "question '", r.question, "' expected '", q, "'");
    if (!r.overlays.empty()) return why(r, "unexpected overlay");
  } else if (r.task == qa::Task::kSP03) {
    if (r.overlays.size() != 1 || r.overlays[0].kind != qa::OverlayOp::Kind::kArrow ||
        r.overlays[0].camera != cam_name || !near(r.overlays[0].head, center, 0.5)) {
      return why(r, "arrow does not point at the target box center");
    }
  } else {
    if (r.overlays.size() != 1 || r.overlays[0].kind != qa::OverlayOp::Kind::kMaskRect ||
        r.overlays[0].camera != cam_name) {
      return why(r, "missing mask");
    }
    const Rect2D& m = r.overlays[0].rect;
    const double e = 1e-9;
    if (std::abs(m.x_min - rect.x_min) > e || std::abs(m.y_min - rect.y_min) > e ||
        std::abs(m.x_max - rect.x_max) > e || std::abs(m.y_max - rect.y_max) > e) {
      return why(r, "mask differs from the target's clamped box");
    }
    for (const Vec2& px : proj->pixels) {
      const Vec2 c(std::clamp(px.x(), 0.0, double(cam->width)), std::clamp(px.y(), 0.0, double(cam->height)));
      if (!m.contains(c, 1e-9)) return why(r, "mask misses a projected corner");
    }
  }
  if (r.meta.contains("distance_bin")) {
    const double d = std::sqrt(o.x * o.x + o.y * o.y + o.z * o.z);
    const auto bin = std::min<std::size_t>(3, static_cast<std::size_t>(std::floor(d / 15.0)));
    if (r.meta["distance_bin"].get<std::size_t>() != bin) return why(r, "wrong distance bin");
  }
  return {};
}

std::string check_sp01(const Scene& scene, const qa::QARecord& r, const qa::GenConfig& cfg, const EgoFrame& ef) {
  const auto pts = points_in(r.question);
  if (pts.size() != 1) return why(r, "question has no query point");
  const Vec2 q = pts[0];
  const std::string expect_q = "For a potential future position at (" + tenths(q.x()) + ", " + tenths(q.y()) +
                               "), is it in a drivable area?";
  if (r.question != expect_q) return why(r, "question template mismatch");
  if (q.x() < cfg.sp01_x_min - 0.05 || q.x() > cfg.sp01_x_max + 0.05 || q.y() < cfg.sp01_y_min - 0.05 ||
      q.y() > cfg.sp01_y_max + 0.05) {
    return why(r, "query point outside the sampling region");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& lane : scene.lanes) best = std::min(best, lane_dist(q, ego_lane(ef, lane)));
  const std::string expect = best <= cfg.drivable_margin ? "Yes" : "No";
  if (r.answer != expect) return why(r, "answer ", r.answer, " but lane distance ", best);
  return {};
}

std::string check_sr01(const Scene& scene, const qa::QARecord& r, const qa::GenConfig& cfg, const EgoFrame& ef,
                       const Frame& frame) {
  const auto lane_id = r.meta.at("lane_id").get<std::int64_t>();
  const Polyline2D* lane = nullptr;
  for (const auto& l : scene.lanes) {
    if (l.id == lane_id) lane = &l;
  }
  if (lane == nullptr) return why(r, "unknown lane");
  const auto pl = ego_lane(ef, *lane);
  const auto pts = points_in(r.question);
  if (pts.size() != 3) return why(r, "question needs three lane points");
  for (const Vec2& p : pts) {
    // rounding moves a point by at most 0.05 per axis
    if (lane_dist(p, pl) > 0.0708) return why(r, "question point off the lane");
  }
  std::vector<Obj> on;
  for (const auto& b : frame.annotations) {
    const Obj o = ef.box(b);
    if (lane_dist({o.x, o.y}, pl) <= cfg.drivable_margin) on.push_back(o);
  }
  std::sort(on.begin(), on.end(), [](const Obj& a, const Obj& b) { return a.id < b.id; });
  std::string expect;
  for (const auto& o : on) expect += (expect.empty() ? "" : " ") + describe(o, "");
  if (on.empty()) expect = "There is no object on this lane.";
  if (r.answer != expect) return why(r, "answer '", r.answer, "' expected '", expect, "'");
  return {};
}

std::string check_sr02(const Scene& scene, const qa::QARecord& r, const EgoFrame& ef, const Frame& frame) {
  static const std::regex re(R"(^What is the nearest object in the (front|back)-(left|right) direction\?$)");
  std::smatch m;
  if (!std::regex_match(r.question, m, re)) return why(r, "question template mismatch");
  const bool front = m[1] == "front", left = m[2] == "left";
  const Obj* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  std::vector<Obj> objs;
  for (const auto& b : frame.annotations) objs.push_back(ef.box(b));
  for (const auto& o : objs) {
    if ((o.x > 0.0) != front || (o.y >= 0.0) != left) continue;
    const double d = std::hypot(o.x, o.y);
    if (d < best_d || (d == best_d && o.id < best->id)) {
      best_d = d;
      best = &o;
    }
  }
  if (best == nullptr) return why(r, "asked about an empty sector");
  const double bearing = std::atan2(best->y, best->x);
  const CameraModel* facing = nullptr;
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& cam : scene.cameras) {
    const Mat3& rot = cam.ego_to_cam.rotation;  // row 2 is the optical axis in ego coordinates
    const double g = std::abs(wrap(bearing - std::atan2(rot(2, 1), rot(2, 0))));
    if (g < gap) {
      gap = g;
      facing = &cam;
    }
  }
  const std::string expect = describe(*best, facing->name);
  if (r.answer != expect) return why(r, "answer '", r.answer, "' expected '", expect, "'");
  return {};
}

std::string check_sr03(const Scene& scene, const qa::QARecord& r, const qa::GenConfig& cfg, const EgoFrame& ef,
                       const Frame& frame) {
  const auto& ids = r.meta.at("track_ids");
  const auto& cams = r.meta.at("cameras");
  if (ids.size() != 2 || cams.size() != 2 || r.overlays.size() != 2) return why(r, "needs two targets");
  const auto ia = ids[0].get<std::int64_t>(), ib = ids[1].get<std::int64_t>();
  if (ia == ib) return why(r, "targets not distinct");
  const Box3D* a = find_track(frame, ia);
  const Box3D* b = find_track(frame, ib);
  if (a == nullptr || b == nullptr) return why(r, "unknown track");
  for (int i = 0; i < 2; ++i) {
    const CameraModel* cam = find_camera(scene, cams[i].get<std::string>());
    if (cam == nullptr) return why(r, "unknown camera");
    const auto proj = project(*cam, ef.box(i == 0 ? *a : *b));
    if (!proj || !visible(*proj, cfg.visibility)) return why(r, "target ", i, " not visible");
    const auto& op = r.overlays[static_cast<std::size_t>(i)];
    if (op.kind != qa::OverlayOp::Kind::kArrow || op.camera != cam->name ||
        !near(op.head, proj->rect.center(), 0.5)) {
      return why(r, "arrow ", i, " does not point at its target");
    }
  }
  // centroid distance in the global frame; rigid motion preserves it
  const double dx = a->center.x() - b->center.x();
  const double dy = a->center.y() - b->center.y();
  const double dz = (a->center.z() + 0.5 * a->height) - (b->center.z() + 0.5 * b->height);
  const std::string expect = tenths(std::sqrt(dx * dx + dy * dy + dz * dz)) + ".";
  if (r.answer != expect) return why(r, "answer ", r.answer, " expected ", expect);
  return {};
}

std::string check_sr04(const Scene& scene, const qa::QARecord& r, const qa::GenConfig& cfg, const EgoFrame& ef,
                       const Frame& frame) {
  static const std::regex re(R"(after ([0-9.]+) second\?$)");
  std::smatch m;
  if (!std::regex_search(r.question, m, re)) return why(r, "question has no interval");
  const double t = std::stod(m[1].str());
  bool allowed = false;
  for (double c : cfg.sr04_intervals) allowed = allowed || std::abs(c - t) < 1e-9;
  if (!allowed) return why(r, "interval not among the configured choices");
  const Frame* later = nullptr;
  for (const auto& f : scene.frames) {
    if (std::abs(f.timestamp - frame.timestamp - t) < 1e-9) later = &f;
  }
  if (later == nullptr) return why(r, "no annotated frame at t + T");
  const auto id = r.meta.at("track_ids").at(0).get<std::int64_t>();
  const Box3D* now = find_track(frame, id);
  const Box3D* fut = find_track(*later, id);
  if (now == nullptr || fut == nullptr) return why(r, "track missing");
  const Vec2 cur = ef.xy(now->center.x(), now->center.y());
  const Vec2 nxt = ef.xy(fut->center.x(), fut->center.y());
  const std::string q = "What is the future position of the object at (" + tenths(cur.x()) + ", " +
                        tenths(cur.y()) + ") after " + tenths(t) + " second?";
  if (r.question != q) return why(r, "question '", r.question, "' expected '", q, "'");
  const std::string expect = "(" + tenths(nxt.x()) + ", " + tenths(nxt.y()) + ").";
  if (r.answer != expect) return why(r, "answer ", r.answer, " expected ", expect);
  return {};
}

}  // namespace

std::string tenths(double v) {
  const long long t = static_cast<long long>(std::floor(std::fabs(v) * 10.0 + 0.5));
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%lld", (v < 0.0 && t != 0) ? "-" : "", t / 10, t % 10);
  return buf;
}

double mc_iou(const BevBox& a, const BevBox& b, int grid) {
  struct Rot {
    double x, y, c, s, hl, hw;
    bool in(double px, double py) const {
      const double dx = px - x, dy = py - y;
      return std::abs(c * dx + s * dy) <= hl && std::abs(-s * dx + c * dy) <= hw;
    }
  };
  const Rot ra{a.x, a.y, std::cos(a.yaw), std::sin(a.yaw), 0.5 * a.length, 0.5 * a.width};
  const Rot rb{b.x, b.y, std::cos(b.yaw), std::sin(b.yaw), 0.5 * b.length, 0.5 * b.width};
  // bounding circles are enough for the raster window
  const double r1 = std::hypot(ra.hl, ra.hw), r2 = std::hypot(rb.hl, rb.hw);
  const double x0 = std::min(a.x - r1, b.x - r2), x1 = std::max(a.x + r1, b.x + r2);
  const double y0 = std::min(a.y - r1, b.y - r2), y1 = std::max(a.y + r1, b.y + r2);
  const double sx = (x1 - x0) / grid, sy = (y1 - y0) / grid;
  long long both = 0, either = 0;
#pragma omp parallel for reduction(+ : both, either) schedule(static)
  for (int i = 0; i < grid; ++i) {
    const double py = y0 + (i + 0.5) * sy;
    for (int j = 0; j < grid; ++j) {
      const double px = x0 + (j + 0.5) * sx;
      const bool ia = ra.in(px, py), ib = rb.in(px, py);
      both += ia && ib;
      either += ia || ib;
    }
  }
  return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

std::string check_record(const Scene& scene, const qa::QARecord& r, const qa::GenConfig& cfg) {
  if (r.scene_id != scene.scene_id) return why(r, "scene id mismatch");
  if (r.frame_index >= scene.frames.size()) return why(r, "frame index out of range");
  const Frame& frame = scene.frames[r.frame_index];
  const EgoFrame ef(frame.ego_pose);
  switch (r.task) {
    case qa::Task::kSP01: return check_sp01(scene, r, cfg, ef);
    case qa::Task::kSP02:
    case qa::Task::kSP03:
    case qa::Task::kSP04: return check_identify(scene, r, cfg, ef, frame);
    case qa::Task::kSR01: return check_sr01(scene, r, cfg, ef, frame);
    case qa::Task::kSR02: return check_sr02(scene, r, ef, frame);
    case qa::Task::kSR03: return check_sr03(scene, r, cfg, ef, frame);
    case qa::Task::kSR04: return check_sr04(scene, r, cfg, ef, frame);
  }
  return why(r, "unknown task");
}

}  // namespace lvl::oracle
