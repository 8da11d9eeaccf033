#include "lvl/scene.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "lvl/errors.hpp"
#include "lvl/rng.hpp"

namespace lvl {
namespace {

struct CategoryShape {
  const char* name;
  double length, width, height;
  double max_speed;
  double weight;
};

constexpr CategoryShape kCategories[] = {
    {"car", 4.5, 1.9, 1.6, 12.0, 0.55},      {"truck", 6.5, 2.5, 3.0, 10.0, 0.10},
    {"bus", 11.0, 2.9, 3.4, 9.0, 0.05},      {"pedestrian", 0.7, 0.7, 1.75, 1.5, 0.20},
    {"bicycle", 1.8, 0.6, 1.4, 5.0, 0.10},
};

const CategoryShape& pick_category(Rng& rng) {
  double u = rng.uniform();
  for (const auto& c : kCategories) {
    if (u < c.weight) return c;
    u -= c.weight;
  }
  return kCategories[0];
}

// Gently curving lanes, parallel to global x.
struct LaneShape {
  double offset, amplitude, wavelength, phase;
  double y(double x) const { return offset + amplitude * std::sin(x / wavelength + phase); }
  double heading(double x) const {
    return std::atan(amplitude / wavelength * std::cos(x / wavelength + phase));
  }
};

}  // namespace

void SceneSpec::validate() const {
  if (n_frames < 1) throw ConfigError("scene spec: n_frames must be >= 1");
  if (n_agents < 0) throw ConfigError("scene spec: n_agents must be >= 0");
  if (n_lanes < 0) throw ConfigError("scene spec: n_lanes must be >= 0");
  if (!(timestep > 0.0)) throw ConfigError("scene spec: timestep must be > 0");
  if (!(map_extent > 10.0)) throw ConfigError("scene spec: map_extent must be > 10 m");
  if (rig != "surround6") throw ConfigError("scene spec: unknown camera rig '" + rig + "'");
}

bool Frame::operator==(const Frame& o) const {
  if (timestamp != o.timestamp || ego_pose.rotation != o.ego_pose.rotation ||
      ego_pose.translation != o.ego_pose.translation || lidar != o.lidar ||
      annotations.size() != o.annotations.size()) {
    return false;
  }
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const Box3D& a = annotations[i];
    const Box3D& b = o.annotations[i];
    if (a.center != b.center || a.length != b.length || a.width != b.width ||
        a.height != b.height || a.yaw != b.yaw || a.velocity != b.velocity ||
        a.category != b.category || a.track_id != b.track_id) {
      return false;
    }
  }
  return true;
}

bool Scene::operator==(const Scene& o) const {
  if (scene_id != o.scene_id || frames != o.frames || cameras.size() != o.cameras.size() ||
      lanes.size() != o.lanes.size()) {
    return false;
  }
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const auto& a = cameras[i];
    const auto& b = o.cameras[i];
    if (a.name != b.name || a.intrinsics != b.intrinsics || a.width != b.width ||
        a.height != b.height || a.ego_to_cam.rotation != b.ego_to_cam.rotation ||
        a.ego_to_cam.translation != b.ego_to_cam.translation) {
      return false;
    }
  }
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    if (lanes[i].id != o.lanes[i].id || lanes[i].frame != o.lanes[i].frame ||
        lanes[i].points != o.lanes[i].points) {
      return false;
    }
  }
  return true;
}

void Scene::validate() const {
  if (frames.empty()) throw DomainError("scene " + scene_id + ": no frames");
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (!(frames[k].timestamp > frames[k - 1].timestamp)) {
      throw DomainError("scene " + scene_id + ": timestamps not strictly increasing");
    }
  }
  // track ids unique within a frame; category/size persistent across frames
  std::map<std::int64_t, std::string> categories;
  for (const auto& f : frames) {
    f.ego_pose.validate();
    std::set<std::int64_t> seen;
    for (const auto& b : f.annotations) {
      b.validate();
      if (!seen.insert(b.track_id).second) {
        throw DomainError("scene " + scene_id + ": duplicate track id in a frame");
      }
      auto [it, inserted] = categories.emplace(b.track_id, b.category);
      if (!inserted && it->second != b.category) {
        throw DomainError("scene " + scene_id + ": track changes category");
      }
    }
  }
  for (const auto& cam : cameras) cam.validate();
  for (const auto& lane : lanes) lane.validate();
}

const CameraModel& Scene::camera(const std::string& name) const {
  for (const auto& c : cameras) {
    if (c.name == name) return c;
  }
  throw DomainError("scene " + scene_id + " has no camera " + name);
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Scene scene;
  scene.scene_id = "scene-" + std::to_string(spec.seed);
  scene.cameras = surround_rig();

  const double amplitude = rng.uniform(0.0, 3.0);
  const double wavelength = rng.uniform(40.0, 80.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<LaneShape> shapes;
  for (int i = 0; i < spec.n_lanes; ++i) {
    const double offset = (i - 0.5 * (spec.n_lanes - 1)) * 3.5;
    shapes.push_back({offset, amplitude, wavelength, phase});
    Polyline2D lane;
    lane.id = i;
    lane.frame = FrameTag::kGlobal;
    for (double x = -spec.map_extent; x <= spec.map_extent + 1e-9; x += 2.0) {
      lane.points.emplace_back(x, shapes.back().y(x));
    }
    scene.lanes.push_back(std::move(lane));
  }
  // A random ego lane puts the road edge inside the SP-01 query region on
  // outer lanes, so both drivable labels occur.
  const std::size_t ego_index = shapes.empty() ? 0 : rng.index(shapes.size());
  const LaneShape ego_lane = shapes.empty() ? LaneShape{0.0, 0.0, 1.0, 0.0} : shapes[ego_index];

  const double ego_x0 = rng.uniform(-20.0, 0.0);
  const double ego_speed = rng.uniform(3.0, 10.0);

  // Agents travel along lane-parallel paths and never use the ego lane, so
  // the ground-truth ego trajectory is collision-free.
  struct AgentState {
    Box3D box;
    LaneShape path;
    double direction;  // +1 along the lanes, -1 against
    double speed;
  };
  std::vector<AgentState> agents;
  for (int j = 0; j < spec.n_agents; ++j) {
    AgentState a{};
    const CategoryShape& cat = pick_category(rng);
    a.box.category = cat.name;
    a.box.track_id = j + 1;
    a.box.length = cat.length * rng.uniform(0.9, 1.1);
    a.box.width = cat.width * rng.uniform(0.9, 1.1);
    a.box.height = cat.height * rng.uniform(0.9, 1.1);
    const bool on_lane = shapes.size() > 1 && cat.max_speed > 2.0 && rng.uniform() < 0.75;
    // rejection sampling keeps spawns apart from the ego and each other
    for (int attempt = 0; attempt < 50; ++attempt) {
      if (on_lane) {
        std::size_t lane = rng.index(shapes.size() - 1);
        if (lane >= ego_index) ++lane;
        a.path = shapes[lane];
        a.path.offset += std::clamp(rng.normal(0.0, 0.3), -0.5, 0.5);
        a.direction = rng.uniform() < 0.2 ? -1.0 : 1.0;
      } else {
        const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
        a.path = ego_lane;
        a.path.offset += side * rng.uniform(8.0, 25.0);
        a.direction = rng.uniform() < 0.5 ? -1.0 : 1.0;
      }
      const double x = ego_x0 + rng.uniform(-40.0, 60.0);
      a.box.center = Vec3(x, a.path.y(x), 0.0);
      bool clear = std::hypot(x - ego_x0, a.box.center.y() - ego_lane.y(ego_x0)) > 8.0;
      for (const auto& other : agents) {
        if ((other.box.center - a.box.center).head<2>().norm() < 6.0) clear = false;
      }
      if (clear) break;
    }
    const bool moving = rng.uniform() >= 0.15;
    a.speed = moving ? rng.uniform(0.3, 1.0) * cat.max_speed : 0.0;
    // Parked agents off the road keep an arbitrary heading.
    const double yaw_offset = !moving && !on_lane ? rng.uniform(-std::numbers::pi, std::numbers::pi)
                              : a.direction < 0.0 ? std::numbers::pi
                                                  : 0.0;
    a.box.yaw = normalize_angle(a.path.heading(a.box.center.x()) + yaw_offset);
    a.box.velocity = a.speed * Vec2(std::cos(a.box.yaw), std::sin(a.box.yaw));
    if (!moving) a.box.velocity = Vec2::Zero();
    agents.push_back(a);
  }

  for (int k = 0; k < spec.n_frames; ++k) {
    Frame frame;
    frame.timestamp = k * spec.timestep;
    const double ex = ego_x0 + ego_speed * frame.timestamp;
    frame.ego_pose = Pose::from_yaw(ego_lane.heading(ex), Vec3(ex, ego_lane.y(ex), 0.0));
    for (const auto& a : agents) frame.annotations.push_back(a.box);
    scene.frames.push_back(std::move(frame));
    for (auto& a : agents) {
      if (a.speed == 0.0) continue;
      const double x0 = a.box.center.x();
      const double step = a.direction * a.speed * spec.timestep * std::cos(a.path.heading(x0));
      const double x = x0 + step;
      a.box.center = Vec3(x, a.path.y(x), 0.0);
      a.box.yaw = normalize_angle(a.path.heading(x) + (a.direction < 0.0 ? std::numbers::pi : 0.0));
      a.box.velocity = a.speed * Vec2(std::cos(a.box.yaw), std::sin(a.box.yaw));
    }
  }
  return scene;
}

EgoView to_ego_frame(const Scene& scene, std::size_t frame_index) {
  if (frame_index >= scene.frames.size()) {
    throw DomainError("frame index " + std::to_string(frame_index) + " out of range for scene " +
                      scene.scene_id);
  }
  const Frame& frame = scene.frames[frame_index];
  EgoView view;
  view.global_to_ego = frame.ego_pose.inverse();
  for (const auto& b : frame.annotations) view.boxes.push_back(transform_box(view.global_to_ego, b));
  const Eigen::Matrix2d r = view.global_to_ego.rotation.topLeftCorner<2, 2>();
  const Vec2 t = view.global_to_ego.translation.head<2>();
  for (const auto& lane : scene.lanes) {
    Polyline2D out;
    out.id = lane.id;
    out.frame = FrameTag::kEgo;
    for (const auto& p : lane.points) out.points.push_back(r * p + t);
    view.lanes.push_back(std::move(out));
  }
  return view;
}

}  // namespace lvl
