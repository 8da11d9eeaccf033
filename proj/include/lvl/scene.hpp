#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lvl/camera.hpp"
#include "lvl/geometry.hpp"

namespace lvl {

inline constexpr const char* kSceneSchemaVersion = "lvl-scene/1";

struct SceneSpec {
  std::uint64_t seed = 0;
  int n_frames = 12;
  int n_agents = 16;
  int n_lanes = 3;
  double map_extent = 100.0;  // lanes span [-extent, extent] along global x
  std::string rig = "surround6";
  double timestep = 0.5;

  void validate() const;
};

struct Frame {
  double timestamp = 0.0;
  Pose ego_pose;                   // ego -> global
  std::vector<Box3D> annotations;  // global frame
  std::vector<Vec3> lidar;         // ego frame, may be empty

  bool operator==(const Frame& other) const;
};

struct Scene {
  std::string scene_id;
  std::vector<Frame> frames;
  std::vector<CameraModel> cameras;
  std::vector<Polyline2D> lanes;  // global frame

  // Time ordering, persistent track ids, camera and lane validity.
  void validate() const;
  const CameraModel& camera(const std::string& name) const;
  bool operator==(const Scene& other) const;
};

// Bit-deterministic for a fixed spec. Agents move at constant speed along
// lane-parallel paths that avoid the ego lane and persist through every frame.
Scene generate_scene(const SceneSpec& spec);

struct EgoView {
  std::vector<Box3D> boxes;        // same order as Frame::annotations
  std::vector<Polyline2D> lanes;   // same order as Scene::lanes
  Pose global_to_ego;
};

// Throws DomainError for an out-of-range index.
EgoView to_ego_frame(const Scene& scene, std::size_t frame_index);

// Ego-frame sensor points: `points_per_agent` samples on each annotation's
// box surface (annotation order) followed by `ground_points` samples on the
// z = 0 plane within 50 m.
std::vector<Vec3> synth_lidar(const Scene& scene, std::size_t frame_index, int points_per_agent,
                              int ground_points, std::uint64_t seed);

// Scene file ("lvl-scene/1" JSON document).
std::string scene_to_string(const Scene& scene);
Scene scene_from_string(const std::string& text, const std::string& source = "<string>");
void save_scene(const std::filesystem::path& path, const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

std::string spec_to_string(const SceneSpec& spec);
SceneSpec spec_from_string(const std::string& text, const std::string& source = "<string>");

// Scene-producing interface; the synthetic generator is the only backend.
// A dataset adapter would implement the same interface.
class SceneProvider {
 public:
  virtual ~SceneProvider() = default;
  virtual Scene produce() const = 0;
};

class SyntheticSceneProvider final : public SceneProvider {
 public:
  explicit SyntheticSceneProvider(SceneSpec spec) : spec_(std::move(spec)) {}
  Scene produce() const override { return generate_scene(spec_); }

 private:
  SceneSpec spec_;
};

}  // namespace lvl
