#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lvl/qa.hpp"

namespace lvl::qa {

using Rgb = std::array<std::uint8_t, 3>;

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(int w, int h, Rgb fill);
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  bool operator==(const Image&) const = default;
};

inline constexpr Rgb kMaskColor = {0, 0, 0};
inline constexpr Rgb kArrowColor = {255, 0, 0};

// MaskRect fills its pixels black; Arrow draws a 3 px wide shaft and a
// filled triangular head whose tip is the head pixel. Ops for other cameras
// are the caller's business: every op given is drawn.
Image rasterize_overlays(Image image, std::span<const OverlayOp> ops);

// Binary PPM (P6, maxval 255).
std::string to_ppm(const Image& image);
Image from_ppm(const std::string& bytes);

}  // namespace lvl::qa
