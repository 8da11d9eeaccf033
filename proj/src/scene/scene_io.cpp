#include <algorithm>

#include "lvl/io.hpp"
#include "lvl/json_util.hpp"
#include "lvl/scene.hpp"

namespace lvl {

namespace jsonu {

nlohmann::json parse_document(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n');
    throw ParseError(source, "line " + std::to_string(line) + ": malformed JSON (" +
                                 std::string(e.what()) + ")");
  }
}

const nlohmann::json& require(const nlohmann::json& obj, const std::string& key,
                              const std::string& path, const std::string& source) {
  const std::string full = path.empty() ? key : path + "." + key;
  if (!obj.is_object()) throw ParseError(source, "field '" + path + "' must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, "missing field '" + full + "'");
  return *it;
}

double get_number(const nlohmann::json& obj, const std::string& key, const std::string& path,
                  const std::string& source) {
  const auto& v = require(obj, key, path, source);
  if (!v.is_number()) {
    throw ParseError(source, "field '" + (path.empty() ? key : path + "." + key) +
                                 "' must be a number");
  }
  return v.get<double>();
}

std::int64_t get_int(const nlohmann::json& obj, const std::string& key, const std::string& path,
                     const std::string& source) {
  const auto& v = require(obj, key, path, source);
  if (!v.is_number_integer()) {
    throw ParseError(source, "field '" + (path.empty() ? key : path + "." + key) +
                                 "' must be an integer");
  }
  return v.get<std::int64_t>();
}

std::string get_string(const nlohmann::json& obj, const std::string& key,
                       const std::string& path, const std::string& source) {
  const auto& v = require(obj, key, path, source);
  if (!v.is_string()) {
    throw ParseError(source, "field '" + (path.empty() ? key : path + "." + key) +
                                 "' must be a string");
  }
  return v.get<std::string>();
}

const nlohmann::json& get_array(const nlohmann::json& obj, const std::string& key,
                                const std::string& path, const std::string& source,
                                std::size_t expected_size) {
  const auto& v = require(obj, key, path, source);
  const std::string full = path.empty() ? key : path + "." + key;
  if (!v.is_array()) throw ParseError(source, "field '" + full + "' must be an array");
  if (expected_size != 0 && v.size() != expected_size) {
    throw ParseError(source, "field '" + full + "' must have " + std::to_string(expected_size) +
                                 " elements");
  }
  for (const auto& e : v) {
    if (expected_size != 0 && !e.is_number()) {
      throw ParseError(source, "field '" + full + "' must contain numbers");
    }
  }
  return v;
}

}  // namespace jsonu

namespace {

using jsonu::ordered_json;
using nlohmann::json;

ordered_json mat3_json(const Mat3& m) {
  ordered_json a = ordered_json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json pose_json(const Pose& p) {
  ordered_json o;
  o["rotation"] = mat3_json(p.rotation);
  o["translation"] = vec_json(p.translation);
  return o;
}

Mat3 read_mat3(const json& obj, const std::string& key, const std::string& path,
               const std::string& src) {
  const auto& a = jsonu::get_array(obj, key, path, src, 9);
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = a[r * 3 + c].get<double>();
  return m;
}

Vec3 read_vec3(const json& obj, const std::string& key, const std::string& path,
               const std::string& src) {
  const auto& a = jsonu::get_array(obj, key, path, src, 3);
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

Vec2 read_vec2(const json& obj, const std::string& key, const std::string& path,
               const std::string& src) {
  const auto& a = jsonu::get_array(obj, key, path, src, 2);
  return {a[0].get<double>(), a[1].get<double>()};
}

Pose read_pose(const json& obj, const std::string& key, const std::string& path,
               const std::string& src) {
  const auto& p = jsonu::require(obj, key, path, src);
  const std::string sub = path.empty() ? key : path + "." + key;
  Pose pose;
  pose.rotation = read_mat3(p, "rotation", sub, src);
  pose.translation = read_vec3(p, "translation", sub, src);
  return pose;
}

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

}  // namespace

std::string scene_to_string(const Scene& scene) {
  ordered_json doc;
  doc["schema_version"] = kSceneSchemaVersion;
  doc["scene_id"] = scene.scene_id;
  ordered_json cams = ordered_json::array();
  for (const auto& c : scene.cameras) {
    ordered_json o;
    o["name"] = c.name;
    o["width"] = c.width;
    o["height"] = c.height;
    o["intrinsics"] = mat3_json(c.intrinsics);
    o["ego_to_cam"] = pose_json(c.ego_to_cam);
    cams.push_back(std::move(o));
  }
  doc["cameras"] = std::move(cams);
  ordered_json lanes = ordered_json::array();
  for (const auto& l : scene.lanes) {
    ordered_json o;
    o["id"] = l.id;
    o["frame"] = l.frame == FrameTag::kGlobal ? "global" : "ego";
    ordered_json pts = ordered_json::array();
    for (const auto& p : l.points) pts.push_back({p.x(), p.y()});
    o["points"] = std::move(pts);
    lanes.push_back(std::move(o));
  }
  doc["lanes"] = std::move(lanes);
  ordered_json frames = ordered_json::array();
  for (const auto& f : scene.frames) {
    ordered_json o;
    o["timestamp"] = f.timestamp;
    o["ego_pose"] = pose_json(f.ego_pose);
    ordered_json anns = ordered_json::array();
    for (const auto& b : f.annotations) {
      ordered_json a;
      a["track_id"] = b.track_id;
      a["category"] = b.category;
      a["center"] = vec_json(b.center);
      a["size"] = {b.length, b.width, b.height};
      a["yaw"] = b.yaw;
      a["velocity"] = vec_json(b.velocity);
      anns.push_back(std::move(a));
    }
    o["annotations"] = std::move(anns);
    if (!f.lidar.empty()) {
      ordered_json pts = ordered_json::array();
      for (const auto& p : f.lidar) pts.push_back({p.x(), p.y(), p.z()});
      o["lidar"] = std::move(pts);
    }
    frames.push_back(std::move(o));
  }
  doc["frames"] = std::move(frames);
  return doc.dump(1) + "\n";
}

Scene scene_from_string(const std::string& text, const std::string& src) {
  const json doc = jsonu::parse_document(text, src);
  if (!doc.is_object()) throw ParseError(src, "scene document must be a JSON object");
  const std::string version = jsonu::get_string(doc, "schema_version", "", src);
  if (version != kSceneSchemaVersion) {
    throw VersionError(src + ": unsupported scene schema version '" + version + "' (expected '" +
                       kSceneSchemaVersion + "')");
  }
  Scene scene;
  scene.scene_id = jsonu::get_string(doc, "scene_id", "", src);

  const auto& cams = jsonu::get_array(doc, "cameras", "", src);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string p = idx("cameras", i);
    CameraModel c;
    c.name = jsonu::get_string(cams[i], "name", p, src);
    c.width = static_cast<int>(jsonu::get_int(cams[i], "width", p, src));
    c.height = static_cast<int>(jsonu::get_int(cams[i], "height", p, src));
    c.intrinsics = read_mat3(cams[i], "intrinsics", p, src);
    c.ego_to_cam = read_pose(cams[i], "ego_to_cam", p, src);
    scene.cameras.push_back(std::move(c));
  }

  const auto& lanes = jsonu::get_array(doc, "lanes", "", src);
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const std::string p = idx("lanes", i);
    Polyline2D lane;
    lane.id = jsonu::get_int(lanes[i], "id", p, src);
    const std::string frame = jsonu::get_string(lanes[i], "frame", p, src);
    if (frame != "global" && frame != "ego") throw ParseError(src, "field '" + p + ".frame' invalid");
    lane.frame = frame == "global" ? FrameTag::kGlobal : FrameTag::kEgo;
    const auto& pts = jsonu::get_array(lanes[i], "points", p, src);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (!pts[k].is_array() || pts[k].size() != 2 || !pts[k][0].is_number() ||
          !pts[k][1].is_number()) {
        throw ParseError(src, "field '" + idx(p + ".points", k) + "' must be [x, y]");
      }
      lane.points.emplace_back(pts[k][0].get<double>(), pts[k][1].get<double>());
    }
    scene.lanes.push_back(std::move(lane));
  }

  const auto& frames = jsonu::get_array(doc, "frames", "", src);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string p = idx("frames", i);
    Frame f;
    f.timestamp = jsonu::get_number(frames[i], "timestamp", p, src);
    f.ego_pose = read_pose(frames[i], "ego_pose", p, src);
    const auto& anns = jsonu::get_array(frames[i], "annotations", p, src);
    for (std::size_t k = 0; k < anns.size(); ++k) {
      const std::string q = idx(p + ".annotations", k);
      Box3D b;
      b.track_id = jsonu::get_int(anns[k], "track_id", q, src);
      b.category = jsonu::get_string(anns[k], "category", q, src);
      b.center = read_vec3(anns[k], "center", q, src);
      const Vec3 size = read_vec3(anns[k], "size", q, src);
      b.length = size.x();
      b.width = size.y();
      b.height = size.z();
      b.yaw = jsonu::get_number(anns[k], "yaw", q, src);
      b.velocity = read_vec2(anns[k], "velocity", q, src);
      f.annotations.push_back(std::move(b));
    }
    if (frames[i].contains("lidar")) {
      const auto& pts = jsonu::get_array(frames[i], "lidar", p, src);
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (!pts[k].is_array() || pts[k].size() != 3) {
          throw ParseError(src, "field '" + idx(p + ".lidar", k) + "' must be [x, y, z]");
        }
        f.lidar.emplace_back(pts[k][0].get<double>(), pts[k][1].get<double>(),
                             pts[k][2].get<double>());
      }
    }
    scene.frames.push_back(std::move(f));
  }
  try {
    scene.validate();
  } catch (const Error& e) {
    throw ParseError(src, std::string("invalid scene: ") + e.what());
  }
  return scene;
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  io::write_file_atomic(path, scene_to_string(scene));
}

Scene load_scene(const std::filesystem::path& path) {
  return scene_from_string(io::read_file(path), path.string());
}

std::string spec_to_string(const SceneSpec& spec) {
  ordered_json o;
  o["seed"] = spec.seed;
  o["n_frames"] = spec.n_frames;
  o["n_agents"] = spec.n_agents;
  o["n_lanes"] = spec.n_lanes;
  o["map_extent"] = spec.map_extent;
  o["rig"] = spec.rig;
  o["timestep"] = spec.timestep;
  return o.dump(2) + "\n";
}

SceneSpec spec_from_string(const std::string& text, const std::string& src) {
  const json doc = jsonu::parse_document(text, src);
  if (!doc.is_object()) throw ParseError(src, "scene spec must be a JSON object");
  SceneSpec spec;
  // every field optional, defaults documented on SceneSpec
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ParseError(src, "field 'seed' must be a non-negative integer");
    spec.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("n_frames")) spec.n_frames = static_cast<int>(jsonu::get_int(doc, "n_frames", "", src));
  if (doc.contains("n_agents")) spec.n_agents = static_cast<int>(jsonu::get_int(doc, "n_agents", "", src));
  if (doc.contains("n_lanes")) spec.n_lanes = static_cast<int>(jsonu::get_int(doc, "n_lanes", "", src));
  if (doc.contains("map_extent")) spec.map_extent = jsonu::get_number(doc, "map_extent", "", src);
  if (doc.contains("rig")) spec.rig = jsonu::get_string(doc, "rig", "", src);
  if (doc.contains("timestep")) spec.timestep = jsonu::get_number(doc, "timestep", "", src);
  spec.validate();
  return spec;
}

}  // namespace lvl
