#include "lvl/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lvl/errors.hpp"

namespace lvl::qa {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < rgb.size(); i += 3) std::copy(fill.begin(), fill.end(), rgb.begin() + i);
}

Rgb Image::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  std::copy(c.begin(), c.end(), rgb.begin() + i);
}

namespace {

void fill_rect(Image& img, const Rect2D& r) {
  const int x0 = std::max(0, static_cast<int>(std::floor(r.x_min)));
  const int y0 = std::max(0, static_cast<int>(std::floor(r.y_min)));
  const int x1 = std::min(img.width, static_cast<int>(std::ceil(r.x_max)));
  const int y1 = std::min(img.height, static_cast<int>(std::ceil(r.y_max)));
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) img.set(x, y, kMaskColor);
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

void draw_arrow(Image& img, Vec2 tail, Vec2 head) {
  const Vec2 lim(img.width - 1.0, img.height - 1.0);
  head = head.cwiseMax(Vec2::Zero()).cwiseMin(lim);
  tail = tail.cwiseMax(Vec2::Zero()).cwiseMin(lim);
  const Vec2 d = head - tail;
  const double len = d.norm();
  const Vec2 dir = len > 0.0 ? Vec2(d / len) : Vec2(1.0, 0.0);
  const Vec2 normal(-dir.y(), dir.x());
  // triangle: tip at head, base 12 px back, half-width 6 px
  const Vec2 base = head - 12.0 * dir;
  const Vec2 t0 = head, t1 = base + 6.0 * normal, t2 = base - 6.0 * normal;

  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({tail.x(), t1.x(), t2.x(), head.x()}))) - 2);
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max({tail.x(), t1.x(), t2.x(), head.x()}))) + 2);
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min({tail.y(), t1.y(), t2.y(), head.y()}))) - 2);
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max({tail.y(), t1.y(), t2.y(), head.y()}))) + 2);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Vec2 p(x, y);
      bool hit = point_segment_distance(p, tail, head) <= 1.0;
      if (!hit) {
        const double c0 = cross(t1 - t0, p - t0);
        const double c1 = cross(t2 - t1, p - t1);
        const double c2 = cross(t0 - t2, p - t2);
        hit = (c0 >= 0 && c1 >= 0 && c2 >= 0) || (c0 <= 0 && c1 <= 0 && c2 <= 0);
      }
      if (hit) img.set(x, y, kArrowColor);
    }
  }
  img.set(static_cast<int>(std::lround(head.x())), static_cast<int>(std::lround(head.y())), kArrowColor);
}

}  // namespace

Image rasterize_overlays(Image image, std::span<const OverlayOp> ops) {
  for (const auto& op : ops) {
    if (op.kind == OverlayOp::Kind::kMaskRect) {
      fill_rect(image, op.rect);
    } else {
      draw_arrow(image, op.tail, op.head);
    }
  }
  return image;
}

std::string to_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  return out;
}

Image from_ppm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) throw ParseError("<ppm>", "unsupported PPM header");
  in.get();
  Image img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) throw ParseError("<ppm>", "truncated pixel data");
  return img;
}

}  // namespace lvl::qa
