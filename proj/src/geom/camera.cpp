#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "lvl/camera.hpp"
#include "lvl/errors.hpp"

namespace lvl {

bool is_camera_name(const std::string& name) {
  return std::find(std::begin(kCameraNames), std::end(kCameraNames), name) !=
         std::end(kCameraNames);
}

void CameraModel::validate() const {
  if (!is_camera_name(name)) throw ConfigError("unknown camera name '" + name + "'");
  if (width <= 0 || height <= 0) throw ConfigError(name + ": image size must be positive");
  const Mat3& k = intrinsics;
  if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0) {
    throw ConfigError(name + ": intrinsics must be upper-triangular");
  }
  if (!(k(0, 0) > 0.0 && k(1, 1) > 0.0)) {
    throw ConfigError(name + ": focal lengths must be positive");
  }
  if (!(std::abs(k.determinant()) > 1e-12)) throw ConfigError(name + ": singular intrinsics");
  ego_to_cam.validate();
}

double CameraModel::yaw_in_ego() const {
  // Optical axis is the camera z axis; in ego coordinates it is the third
  // row of the ego->cam rotation.
  const Vec3 axis = ego_to_cam.rotation.row(2).transpose();
  return std::atan2(axis.y(), axis.x());
}

std::vector<CameraModel> surround_rig() {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const struct {
    const char* name;
    double yaw_deg;
  } layout[6] = {{"CAM_FRONT", 0.0},   {"CAM_FRONT_LEFT", 55.0},  {"CAM_FRONT_RIGHT", -55.0},
                 {"CAM_BACK", 180.0},  {"CAM_BACK_LEFT", 110.0},  {"CAM_BACK_RIGHT", -110.0}};
  Mat3 k;
  k << 1266.0, 0.0, 800.0, 0.0, 1266.0, 450.0, 0.0, 0.0, 1.0;
  std::vector<CameraModel> rig;
  for (const auto& entry : layout) {
    const double psi = entry.yaw_deg * kDeg;
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    // Camera axes expressed in ego coordinates.
    const Vec3 x_axis(s, -c, 0.0);
    const Vec3 y_axis(0.0, 0.0, -1.0);
    const Vec3 z_axis(c, s, 0.0);
    Mat3 cam_to_ego;
    cam_to_ego.col(0) = x_axis;
    cam_to_ego.col(1) = y_axis;
    cam_to_ego.col(2) = z_axis;
    const Vec3 mount(1.0 * c, 0.5 * s, 1.6);
    CameraModel cam;
    cam.name = entry.name;
    cam.intrinsics = k;
    cam.ego_to_cam.rotation = cam_to_ego.transpose();
    cam.ego_to_cam.translation = -(cam_to_ego.transpose() * mount);
    cam.width = 1600;
    cam.height = 900;
    rig.push_back(cam);
  }
  return rig;
}

std::optional<Vec2> project_point(const CameraModel& cam, const Vec3& p_ego) {
  const Vec3 pc = cam.ego_to_cam.apply(p_ego);
  if (!(pc.z() > 0.0)) return std::nullopt;
  const Vec3 h = cam.intrinsics * pc;
  return Vec2(h.x() / h.z(), h.y() / h.z());
}

std::optional<Projection> project_box_to_image(const CameraModel& cam, const Box3D& box) {
  if (!(std::abs(cam.intrinsics.determinant()) > 1e-12) || !(cam.intrinsics(0, 0) > 0.0) ||
      !(cam.intrinsics(1, 1) > 0.0)) {
    throw ConfigError(cam.name + ": singular intrinsics");
  }
  const double w = cam.width;
  const double h = cam.height;
  double x_min = std::numeric_limits<double>::infinity();
  double y_min = x_min;
  double x_max = -x_min;
  double y_max = -x_min;
  int in_front = 0;
  int in_bounds = 0;
  for (const Vec3& corner : box_corners_3d(box)) {
    const auto uv = project_point(cam, corner);
    if (!uv) continue;
    ++in_front;
    x_min = std::min(x_min, uv->x());
    y_min = std::min(y_min, uv->y());
    x_max = std::max(x_max, uv->x());
    y_max = std::max(y_max, uv->y());
    if (uv->x() >= 0.0 && uv->x() <= w && uv->y() >= 0.0 && uv->y() <= h) ++in_bounds;
  }
  if (in_front == 0 || in_bounds == 0) return std::nullopt;
  Projection out;
  out.rect = Rect2D{std::clamp(x_min, 0.0, w), std::clamp(y_min, 0.0, h), std::clamp(x_max, 0.0, w),
                    std::clamp(y_max, 0.0, h)};
  out.visibility = in_bounds / 8.0;
  return out;
}

}  // namespace lvl
