#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lvl {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rigid transform mapping points from a source frame into a target frame:
// p_target = rotation * p_source + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose from_yaw(double yaw, const Vec3& translation = Vec3::Zero());

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const;
  Pose compose(const Pose& inner) const;  // this * inner
  // Heading of the rotated x axis in the xy plane.
  double yaw() const;
  // Throws DomainError unless R is orthonormal with det +1 (tolerance 1e-9).
  void validate() const;
};

// Wraps an angle into (-pi, pi].
double normalize_angle(double radians);

// 3D box, bottom-center origin: the bottom face sits at z = center.z and the
// top face at center.z + height. yaw rotates the length axis from +x toward +y.
struct Box3D {
  Vec3 center = Vec3::Zero();
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  double yaw = 0.0;
  Vec2 velocity = Vec2::Zero();
  std::string category;
  std::int64_t track_id = 0;

  void validate() const;
  Vec3 centroid() const { return center + Vec3(0.0, 0.0, 0.5 * height); }
};

// Corners 0..3 are the bottom face and 4..7 the top face. Within each face,
// in the box's own frame: (+l/2,+w/2), (+l/2,-w/2), (-l/2,-w/2), (-l/2,+w/2).
std::array<Vec3, 8> box_corners_3d(const Box3D& box);

// Rigid change of frame for a box: center transformed, yaw offset by the
// frame's heading, velocity rotated.
Box3D transform_box(const Pose& pose, const Box3D& box);

std::vector<Vec3> transform_points(const Pose& pose, std::span<const Vec3> points);

struct BevBox {
  double x = 0.0;
  double y = 0.0;
  double length = 1.0;
  double width = 1.0;
  double yaw = 0.0;
};

BevBox to_bev(const Box3D& box);

// Counter-clockwise corners of the rotated rectangle.
std::array<Vec2, 4> bev_corners(const BevBox& box);

// Intersection over union of two rotated rectangles via convex polygon
// clipping and shoelace areas. Throws DomainError on a zero-area box.
double bev_iou(const BevBox& a, const BevBox& b);

// Area of a simple polygon (positive for counter-clockwise order).
double polygon_area(std::span<const Vec2> polygon);

// Clips `subject` against the convex counter-clockwise polygon `clip`.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

// Element-wise IoU over box pairs. The parallel version splits pairs across
// OpenMP threads and returns values bit-identical to the serial reference.
std::vector<double> bev_iou_batch(std::span<const BevBox> a, std::span<const BevBox> b);
namespace serial {
std::vector<double> bev_iou_batch(std::span<const BevBox> a, std::span<const BevBox> b);
}

enum class FrameTag { kEgo, kGlobal };

struct Polyline2D {
  std::vector<Vec2> points;
  FrameTag frame = FrameTag::kGlobal;
  std::int64_t id = 0;

  // >= 2 points, consecutive points distinct.
  void validate() const;
  double length() const;
  // Point at arc-length fraction t in [0, 1].
  Vec2 point_at_fraction(double t) const;
};

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
double point_polyline_distance(const Vec2& p, const Polyline2D& line);

// Drivable area = union of centerlines buffered by `margin`, boundary
// inclusive. An empty centerline list contains nothing (with a warning).
bool drivable_contains(std::span<const Polyline2D> centerlines, const Vec2& p,
                       double margin);

enum class Sector { kFrontLeft, kFrontRight, kBackLeft, kBackRight };

// Ego convention: +x forward, +y left. x > 0 is front; y >= 0 is left.
Sector sector_of(const Vec2& p);
const char* sector_phrase(Sector s);  // "front-left", ...

struct Rect2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= x_min - tol && p.x() <= x_max + tol && p.y() >= y_min - tol &&
           p.y() <= y_max + tol;
  }
  bool operator==(const Rect2D&) const = default;
};

}  // namespace lvl
