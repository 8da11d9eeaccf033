#include <cmath>

#include "lvl/rng.hpp"
#include "lvl/scene.hpp"

namespace lvl {
namespace {

// Uniform sample on the surface of a box in its own frame (bottom-center
// origin), faces chosen proportionally to area.
Vec3 sample_surface(const Box3D& b, Rng& rng) {
  const double l = b.length, w = b.width, h = b.height;
  const double areas[3] = {l * w, l * h, w * h};
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  double u = rng.uniform() * total;
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double s = rng.uniform() - 0.5;
  const double t = rng.uniform() - 0.5;
  if (u < 2.0 * areas[0]) {  // top / bottom
    return {s * l, t * w, sign > 0 ? h : 0.0};
  }
  u -= 2.0 * areas[0];
  if (u < 2.0 * areas[1]) {  // left / right
    return {s * l, sign * 0.5 * w, (t + 0.5) * h};
  }
  return {sign * 0.5 * l, s * w, (t + 0.5) * h};  // front / back
}

}  // namespace

std::vector<Vec3> synth_lidar(const Scene& scene, std::size_t frame_index, int points_per_agent,
                              int ground_points, std::uint64_t seed) {
  const EgoView view = to_ego_frame(scene, frame_index);
  Rng rng(Rng::derive(seed, frame_index));
  std::vector<Vec3> points;
  points.reserve(view.boxes.size() * std::max(points_per_agent, 0) + std::max(ground_points, 0));
  for (const Box3D& b : view.boxes) {
    const Pose box_to_ego = Pose::from_yaw(b.yaw, b.center);
    for (int i = 0; i < points_per_agent; ++i) points.push_back(box_to_ego.apply(sample_surface(b, rng)));
  }
  for (int i = 0; i < ground_points; ++i) {
    points.emplace_back(rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0), 0.0);
  }
  return points;
}

}  // namespace lvl
