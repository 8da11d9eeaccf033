#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lvl/errors.hpp"
#include "lvl/geometry.hpp"
#include "lvl/log.hpp"

namespace lvl {

Pose Pose::from_yaw(double yaw, const Vec3& translation) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  p.translation = translation;
  return p;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Pose Pose::compose(const Pose& inner) const {
  Pose out;
  out.rotation = rotation * inner.rotation;
  out.translation = rotation * inner.translation + translation;
  return out;
}

double Pose::yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

void Pose::validate() const {
  const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9)) throw DomainError("pose rotation is not orthonormal");
  if (!(std::abs(rotation.determinant() - 1.0) <= 1e-9)) {
    throw DomainError("pose rotation determinant is not +1");
  }
  if (!translation.allFinite()) throw DomainError("pose translation is not finite");
}

double normalize_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(radians, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

void Box3D::validate() const {
  if (!(length > 0.0 && width > 0.0 && height > 0.0)) {
    throw DomainError("box dimensions must be positive");
  }
  if (!center.allFinite() || !std::isfinite(yaw)) throw DomainError("box is not finite");
}

std::array<Vec3, 8> box_corners_3d(const Box3D& box) {
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const std::array<Vec2, 4> local = {Vec2(hl, hw), Vec2(hl, -hw), Vec2(-hl, -hw), Vec2(-hl, hw)};
  std::array<Vec3, 8> out;
  for (int i = 0; i < 4; ++i) {
    const double x = box.center.x() + c * local[i].x() - s * local[i].y();
    const double y = box.center.y() + s * local[i].x() + c * local[i].y();
    out[i] = Vec3(x, y, box.center.z());
    out[i + 4] = Vec3(x, y, box.center.z() + box.height);
  }
  return out;
}

Box3D transform_box(const Pose& pose, const Box3D& box) {
  Box3D out = box;
  out.center = pose.apply(box.center);
  out.yaw = normalize_angle(box.yaw + pose.yaw());
  out.velocity = pose.rotation.topLeftCorner<2, 2>() * box.velocity;
  return out;
}

std::vector<Vec3> transform_points(const Pose& pose, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(pose.apply(p));
  return out;
}

BevBox to_bev(const Box3D& box) {
  return {box.center.x(), box.center.y(), box.length, box.width, box.yaw};
}

void Polyline2D::validate() const {
  if (points.size() < 2) throw DomainError("polyline needs at least two points");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i] == points[i - 1]) throw DomainError("polyline has repeated consecutive points");
  }
}

double Polyline2D::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
  return total;
}

Vec2 Polyline2D::point_at_fraction(double t) const {
  const double target = std::clamp(t, 0.0, 1.0) * length();
  double walked = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double seg = (points[i] - points[i - 1]).norm();
    if (walked + seg >= target && seg > 0.0) {
      return points[i - 1] + (target - walked) / seg * (points[i] - points[i - 1]);
    }
    walked += seg;
  }
  return points.back();
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double point_polyline_distance(const Vec2& p, const Polyline2D& line) {
  double best = std::numeric_limits<double>::infinity();
  if (line.points.size() == 1) return (p - line.points.front()).norm();
  for (std::size_t i = 1; i < line.points.size(); ++i) {
    best = std::min(best, point_segment_distance(p, line.points[i - 1], line.points[i]));
  }
  return best;
}

bool drivable_contains(std::span<const Polyline2D> centerlines, const Vec2& p, double margin) {
  if (!(margin > 0.0)) throw DomainError("drivable margin must be positive");
  if (centerlines.empty()) {
    log::warn("drivable_contains: empty centerline list, nothing is drivable");
    return false;
  }
  for (const auto& line : centerlines) {
    if (point_polyline_distance(p, line) <= margin) return true;
  }
  return false;
}

Sector sector_of(const Vec2& p) {
  const bool front = p.x() > 0.0;
  const bool left = p.y() >= 0.0;
  if (front) return left ? Sector::kFrontLeft : Sector::kFrontRight;
  return left ? Sector::kBackLeft : Sector::kBackRight;
}

const char* sector_phrase(Sector s) {
  switch (s) {
    case Sector::kFrontLeft: return "front-left";
    case Sector::kFrontRight: return "front-right";
    case Sector::kBackLeft: return "back-left";
    case Sector::kBackRight: return "back-right";
  }
  return "";
}

}  // namespace lvl
