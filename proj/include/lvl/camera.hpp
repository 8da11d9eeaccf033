#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lvl/geometry.hpp"

namespace lvl {

inline constexpr const char* kCameraNames[6] = {"CAM_FRONT",      "CAM_FRONT_LEFT",
                                                "CAM_FRONT_RIGHT", "CAM_BACK",
                                                "CAM_BACK_LEFT",  "CAM_BACK_RIGHT"};

bool is_camera_name(const std::string& name);

// Pinhole camera. ego_to_cam maps ego-frame points into the optical frame
// (x right, y down, z along the optical axis).
struct CameraModel {
  std::string name;
  Mat3 intrinsics = Mat3::Identity();
  Pose ego_to_cam;
  int width = 0;
  int height = 0;

  // Throws ConfigError for unknown names, non-pinhole or singular intrinsics.
  void validate() const;
  // Optical-axis heading in the ego frame.
  double yaw_in_ego() const;
};

// Six-camera surround rig: yaw offsets 0, +-55, +-110, 180 degrees, shared
// 1600x900 intrinsics with a 1266 px focal length.
std::vector<CameraModel> surround_rig();

struct Projection {
  Rect2D rect;
  // Fraction of the 8 corners with positive depth that land inside the image.
  double visibility = 0.0;
};

// Absent when no corner has positive depth or no positive-depth corner
// projects inside the image. Otherwise the min/max over positive-depth corner
// projections, clamped to [0, width] x [0, height].
std::optional<Projection> project_box_to_image(const CameraModel& cam, const Box3D& box);

// Returns the pixel of an ego-frame point, or nullopt when depth <= 0.
std::optional<Vec2> project_point(const CameraModel& cam, const Vec3& p_ego);

struct VisibilityFilter {
  double min_visible_fraction = 0.25;
  double min_area = 1024.0;
  double min_side = 16.0;

  bool passes(const Projection& p) const {
    return p.visibility >= min_visible_fraction && p.rect.area() >= min_area &&
           p.rect.width() >= min_side && p.rect.height() >= min_side;
  }
};

}  // namespace lvl
