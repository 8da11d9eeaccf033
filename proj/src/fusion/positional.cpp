#include "lvl/fusion/positional.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lvl/errors.hpp"

namespace lvl::fusion {

int PeConfig::resolved_bands(int channels) const { return bands > 0 ? bands : channels / 6; }

std::vector<double> PeConfig::bin_depths() const {
  std::vector<double> d(static_cast<std::size_t>(depth_bins));
  const double step = (depth_max - depth_min) / depth_bins;
  for (int i = 0; i < depth_bins; ++i) d[static_cast<std::size_t>(i)] = depth_min + (i + 0.5) * step;
  return d;
}

void PeConfig::validate(int channels) const {
  const int b = resolved_bands(channels);
  if (b < 1 || 6 * b > channels) {
    throw ConfigError("positional embedding: " + std::to_string(b) + " bands per axis do not fit " +
                      std::to_string(channels) + " channels");
  }
  if (!(temperature > 0.0)) throw ConfigError("positional embedding: temperature must be > 0");
  if (!(extent > 0.0)) throw ConfigError("positional embedding: extent must be > 0");
  if (depth_bins < 1) throw ConfigError("positional embedding: depth_bins must be >= 1");
  if (!(depth_min > 0.0 && depth_max > depth_min)) {
    throw ConfigError("positional embedding: need 0 < depth_min < depth_max");
  }
}

Tensor2D pe_3d(const Tensor2D& points, const PeConfig& cfg, int channels) {
  cfg.validate(channels);
  if (points.cols() != 3) throw ConfigError("pe_3d: points must have 3 columns");
  const int bands = cfg.resolved_bands(channels);
  std::vector<double> freq(static_cast<std::size_t>(bands));
  for (int k = 0; k < bands; ++k) {
    freq[static_cast<std::size_t>(k)] =
        (2.0 * std::numbers::pi / cfg.extent) / std::pow(cfg.temperature, static_cast<double>(k) / bands);
  }
  Tensor2D out = Tensor2D::Zero(points.rows(), channels);
  for (Index i = 0; i < points.rows(); ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 0; k < bands; ++k) {
        const double a = freq[static_cast<std::size_t>(k)] * points(i, axis);
        const Index col = 2 * (axis * bands + k);
        out(i, col) = std::sin(a);
        out(i, col + 1) = std::cos(a);
      }
    }
  }
  require_finite(out, "pe_3d");
  return out;
}

Tensor2D pixel_pe(const Tensor2D& origins, const Tensor2D& dirs, const Tensor2D& depth_probs,
                  const PeConfig& cfg, int channels) {
  cfg.validate(channels);
  const Index n = origins.rows();
  require_shape(origins, n, 3, "pixel_pe origins");
  require_shape(dirs, n, 3, "pixel_pe directions");
  require_shape(depth_probs, n, cfg.depth_bins, "pixel_pe depth distribution");
  for (Index i = 0; i < n; ++i) {
    if ((depth_probs.row(i).array() < 0.0).any()) {
      throw DomainError("pixel_pe: negative depth probability in row " + std::to_string(i));
    }
    if (std::abs(depth_probs.row(i).sum() - 1.0) > 1e-9) {
      throw DomainError("pixel_pe: depth distribution in row " + std::to_string(i) + " does not sum to 1");
    }
  }
  const auto depths = cfg.bin_depths();
  Tensor2D out = Tensor2D::Zero(n, channels);
  Tensor2D pts(cfg.depth_bins, 3);
  for (Index i = 0; i < n; ++i) {
    for (int d = 0; d < cfg.depth_bins; ++d) {
      pts.row(d) = origins.row(i) + depths[static_cast<std::size_t>(d)] * dirs.row(i);
    }
    const Tensor2D pe = pe_3d(pts, cfg, channels);
    for (int d = 0; d < cfg.depth_bins; ++d) out.row(i) += depth_probs(i, d) * pe.row(d);
  }
  return out;
}

}  // namespace lvl::fusion
