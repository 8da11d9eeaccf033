#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <set>

#include "lvl/errors.hpp"
#include <json.hpp>

#include "lvl/io.hpp"
#include "lvl/scene.hpp"

namespace lvl {
namespace {

Scene one_frame(const Pose& ego, std::vector<Box3D> boxes) {
  Scene s;
  s.scene_id = "hand";
  s.cameras = surround_rig();
  Frame f;
  f.ego_pose = ego;
  f.annotations = std::move(boxes);
  s.frames.push_back(f);
  return s;
}

Box3D box_at(double x, double y, std::int64_t id = 1) {
  Box3D b;
  b.center = Vec3(x, y, 0);
  b.length = 4;
  b.width = 2;
  b.height = 1.5;
  b.category = "car";
  b.track_id = id;
  return b;
}

TEST(Generate, DeterministicBytes) {
  SceneSpec spec;
  spec.seed = 42;
  EXPECT_EQ(scene_to_string(generate_scene(spec)), scene_to_string(generate_scene(spec)));
}

TEST(Generate, NoAgents) {
  SceneSpec spec;
  spec.n_agents = 0;
  const Scene s = generate_scene(spec);
  ASSERT_EQ(s.frames.size(), static_cast<std::size_t>(spec.n_frames));
  for (const auto& f : s.frames) EXPECT_TRUE(f.annotations.empty());
}

TEST(Generate, SeedsAreDistinct) {
  std::set<std::string> seen;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    const Scene s = generate_scene(spec);
    std::string key;
    for (const auto& b : s.frames[0].annotations) key += std::to_string(b.center.x()) + ",";
    seen.insert(key);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Generate, InvariantsHold) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    const Scene s = generate_scene(spec);
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.cameras.size(), 6u);
    EXPECT_EQ(s.lanes.size(), static_cast<std::size_t>(spec.n_lanes));
    // every agent persists through every frame
    for (const auto& f : s.frames) EXPECT_EQ(f.annotations.size(), static_cast<std::size_t>(spec.n_agents));
    for (std::size_t k = 1; k < s.frames.size(); ++k) {
      EXPECT_NEAR(s.frames[k].timestamp - s.frames[k - 1].timestamp, spec.timestep, 1e-12);
    }
  }
}

TEST(Generate, AgentsMoveAtConstantSpeedAlongTheirHeading) {
  SceneSpec spec;
  spec.seed = 3;
  const Scene s = generate_scene(spec);
  for (std::size_t i = 0; i < s.frames[0].annotations.size(); ++i) {
    for (std::size_t k = 1; k < s.frames.size(); ++k) {
      const Box3D& a = s.frames[k - 1].annotations[i];
      const Box3D& b = s.frames[k].annotations[i];
      const double step = (b.center - a.center).head<2>().norm();
      // arc along a gentle curve: displacement within 1% of speed * dt
      EXPECT_NEAR(step, a.velocity.norm() * spec.timestep, 0.01 * a.velocity.norm() * spec.timestep + 1e-12);
    }
  }
}

TEST(Generate, RejectsBadSpec) {
  SceneSpec spec;
  spec.n_frames = 0;
  EXPECT_THROW(generate_scene(spec), ConfigError);
  spec = SceneSpec{};
  spec.timestep = 0;
  EXPECT_THROW(generate_scene(spec), ConfigError);
}

TEST(Provider, SyntheticMatchesGenerator) {
  SceneSpec spec;
  spec.seed = 8;
  const SyntheticSceneProvider p(spec);
  EXPECT_EQ(p.produce(), generate_scene(spec));
}

TEST(EgoFrame, IdentityPose) {
  const Scene s = one_frame(Pose{}, {box_at(3, 4)});
  const EgoView v = to_ego_frame(s, 0);
  EXPECT_EQ(v.boxes[0].center, Vec3(3, 4, 0));
}

TEST(EgoFrame, Translation) {
  const Scene s = one_frame(Pose::from_yaw(0, Vec3(10, 0, 0)), {box_at(12, 0)});
  EXPECT_NEAR((to_ego_frame(s, 0).boxes[0].center - Vec3(2, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(EgoFrame, QuarterTurn) {
  Box3D b = box_at(0, 5);
  b.yaw = std::numbers::pi / 2;
  const Scene s = one_frame(Pose::from_yaw(std::numbers::pi / 2), {b});
  const Box3D e = to_ego_frame(s, 0).boxes[0];
  EXPECT_NEAR(e.center.x(), 5.0, 1e-12);
  EXPECT_NEAR(e.center.y(), 0.0, 1e-12);
  EXPECT_NEAR(e.yaw, 0.0, 1e-12);
}

TEST(EgoFrame, OutOfRange) {
  const Scene s = one_frame(Pose{}, {});
  EXPECT_THROW(to_ego_frame(s, 1), DomainError);
}

TEST(EgoFrame, ComposingWithPoseRecoversGlobal) {
  SceneSpec spec;
  spec.seed = 5;
  const Scene s = generate_scene(spec);
  for (std::size_t k = 0; k < s.frames.size(); ++k) {
    const EgoView v = to_ego_frame(s, k);
    for (std::size_t i = 0; i < v.boxes.size(); ++i) {
      const Box3D g = transform_box(s.frames[k].ego_pose, v.boxes[i]);
      const Box3D& want = s.frames[k].annotations[i];
      EXPECT_LT((g.center - want.center).norm(), 1e-9);
      EXPECT_LT(std::abs(normalize_angle(g.yaw - want.yaw)), 1e-9);
      EXPECT_LT((g.velocity - want.velocity).norm(), 1e-9);
    }
  }
}

TEST(SceneIo, RoundTrip) {
  SceneSpec spec;
  spec.seed = 17;
  Scene s = generate_scene(spec);
  s.frames[0].lidar = synth_lidar(s, 0, 5, 10, 1);
  const Scene back = scene_from_string(scene_to_string(s));
  EXPECT_EQ(back, s);
  EXPECT_EQ(scene_to_string(back), scene_to_string(s));
}

TEST(SceneIo, SaveLoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "lvl_scene_io_test.json";
  SceneSpec spec;
  spec.seed = 2;
  const Scene s = generate_scene(spec);
  save_scene(path, s);
  EXPECT_EQ(load_scene(path), s);
  std::filesystem::remove(path);
}

TEST(SceneIo, MissingFramesKey) {
  SceneSpec spec;
  auto doc = nlohmann::json::parse(scene_to_string(generate_scene(spec)));
  doc.erase("frames");
  try {
    scene_from_string(doc.dump(), "s.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("frames"), std::string::npos);
  }
}

TEST(SceneIo, Truncated) {
  SceneSpec spec;
  const std::string text = scene_to_string(generate_scene(spec));
  EXPECT_THROW(scene_from_string(text.substr(0, text.size() / 2)), ParseError);
}

TEST(SceneIo, VersionMismatch) {
  SceneSpec spec;
  auto doc = nlohmann::json::parse(scene_to_string(generate_scene(spec)));
  EXPECT_EQ(doc["schema_version"], kSceneSchemaVersion);
  doc["schema_version"] = "lvl-scene/2";
  EXPECT_THROW(scene_from_string(doc.dump()), VersionError);
}

TEST(SceneIo, SpecRoundTrip) {
  SceneSpec spec;
  spec.seed = 99;
  spec.n_agents = 7;
  spec.timestep = 0.25;
  const SceneSpec back = spec_from_string(spec_to_string(spec));
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.n_agents, 7);
  EXPECT_EQ(back.timestep, 0.25);
}

TEST(Lidar, EmptyCloud) {
  SceneSpec spec;
  spec.n_agents = 0;
  EXPECT_TRUE(synth_lidar(generate_scene(spec), 0, 10, 0, 1).empty());
}

bool on_surface(const Box3D& b, const Vec3& p) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const Vec3 d = p - b.center;
  const double u = c * d.x() + s * d.y(), v = -s * d.x() + c * d.y(), w = d.z();
  const double e = 1e-9;
  const bool inside = std::abs(u) <= b.length / 2 + e && std::abs(v) <= b.width / 2 + e && w >= -e &&
                      w <= b.height + e;
  const bool face = std::abs(std::abs(u) - b.length / 2) <= e || std::abs(std::abs(v) - b.width / 2) <= e ||
                    std::abs(w) <= e || std::abs(w - b.height) <= e;
  return inside && face;
}

TEST(Lidar, PointsLieOnBoxSurface) {
  Box3D b = box_at(8, -3);
  b.yaw = 0.6;
  const Scene s = one_frame(Pose{}, {b});
  const auto pts = synth_lidar(s, 0, 100, 0, 4);
  ASSERT_EQ(pts.size(), 100u);
  for (const auto& p : pts) EXPECT_TRUE(on_surface(b, p));
}

TEST(Lidar, NearestBoxRecoversSource) {
  const Scene s = one_frame(Pose::from_yaw(0.3, Vec3(5, 5, 0)), {box_at(20, 0, 1), box_at(-20, 10, 2)});
  const auto pts = synth_lidar(s, 0, 100, 0, 9);
  const EgoView v = to_ego_frame(s, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t src = i / 100;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < v.boxes.size(); ++j) {
      const double d = (v.boxes[j].centroid() - pts[i]).norm();
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    EXPECT_EQ(arg, src);
  }
}

TEST(Lidar, DeterministicPerSeed) {
  SceneSpec spec;
  const Scene s = generate_scene(spec);
  EXPECT_EQ(synth_lidar(s, 2, 8, 50, 5), synth_lidar(s, 2, 8, 50, 5));
  EXPECT_NE(synth_lidar(s, 2, 8, 50, 5), synth_lidar(s, 2, 8, 50, 6));
}

}  // namespace
}  // namespace lvl
