#include <omp.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "lvl/errors.hpp"
#include "lvl/geometry.hpp"

namespace lvl {
namespace {

constexpr double kEdgeEps = 1e-9;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool same_box(const BevBox& a, const BevBox& b) {
  return a.x == b.x && a.y == b.y && a.length == b.length && a.width == b.width &&
         a.yaw == b.yaw;
}

bool ordered_before(const BevBox& a, const BevBox& b) {
  return std::tie(a.x, a.y, a.length, a.width, a.yaw) <
         std::tie(b.x, b.y, b.length, b.width, b.yaw);
}

}  // namespace

std::array<Vec2, 4> bev_corners(const BevBox& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  // counter-clockwise starting at the rear-right corner
  const std::array<Vec2, 4> local = {Vec2(-hl, -hw), Vec2(hl, -hw), Vec2(hl, hw), Vec2(-hl, hw)};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = Vec2(box.x + c * local[i].x() - s * local[i].y(),
                  box.y + s * local[i].x() + c * local[i].y());
  }
  return out;
}

double polygon_area(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) twice += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * twice;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> output(subject.begin(), subject.end());
  std::vector<Vec2> input;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % m];
    const Vec2 edge = b - a;
    const double scale = edge.norm();
    input.swap(output);
    output.clear();
    // signed distance to the edge line; >= -eps counts as inside
    auto side = [&](const Vec2& p) { return cross(edge, p - a) / scale; };
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + input.size() - 1) % input.size()];
      const double dc = side(cur);
      const double dp = side(prev);
      const bool cur_in = dc >= -kEdgeEps;
      const bool prev_in = dp >= -kEdgeEps;
      if (cur_in != prev_in) {
        const double t = dp / (dp - dc);
        output.push_back(prev + t * (cur - prev));
      }
      if (cur_in) output.push_back(cur);
    }
  }
  return output;
}

double bev_iou(const BevBox& a, const BevBox& b) {
  const double area_a = a.length * a.width;
  const double area_b = b.length * b.width;
  if (!(a.length > 0.0 && a.width > 0.0 && b.length > 0.0 && b.width > 0.0)) {
    throw DomainError("bev_iou: degenerate (zero-area) box");
  }
  if (same_box(a, b)) return 1.0;
  // Fixed argument order makes the result exactly symmetric.
  const BevBox& first = ordered_before(a, b) ? a : b;
  const BevBox& second = ordered_before(a, b) ? b : a;
  const auto pa = bev_corners(first);
  const auto pb = bev_corners(second);

  // Quick reject on circumscribed circles.
  const double ra = 0.5 * std::hypot(first.length, first.width);
  const double rb = 0.5 * std::hypot(second.length, second.width);
  if (std::hypot(first.x - second.x, first.y - second.y) > ra + rb) return 0.0;

  const auto inter_poly = clip_convex(pa, pb);
  const double inter = std::max(0.0, polygon_area(inter_poly));
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<double> bev_iou_batch(std::span<const BevBox> a, std::span<const BevBox> b) {
  if (a.size() != b.size()) throw DomainError("bev_iou_batch: size mismatch");
  std::vector<double> out(a.size());
  const long n = static_cast<long>(a.size());
  // Degenerate boxes are checked up front: exceptions must not escape the
  // parallel region.
  for (long i = 0; i < n; ++i) {
    if (!(a[i].length > 0.0 && a[i].width > 0.0 && b[i].length > 0.0 && b[i].width > 0.0)) {
      throw DomainError("bev_iou: degenerate (zero-area) box");
    }
  }
#pragma omp parallel for schedule(static) if (n > 256)
  for (long i = 0; i < n; ++i) out[i] = bev_iou(a[i], b[i]);
  return out;
}

namespace serial {
std::vector<double> bev_iou_batch(std::span<const BevBox> a, std::span<const BevBox> b) {
  if (a.size() != b.size()) throw DomainError("bev_iou_batch: size mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = bev_iou(a[i], b[i]);
  return out;
}
}  // namespace serial

}  // namespace lvl
