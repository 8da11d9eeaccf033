#pragma once

#include <vector>

#include "lvl/fusion/tensor.hpp"

namespace lvl::fusion {

struct PeConfig {
  int bands = 0;  // per axis; 0 means floor(channels / 6)
  double temperature = 10000.0;
  double extent = 100.0;  // m; lowest frequency completes one period over this length
  int depth_bins = 8;
  double depth_min = 1.0;
  double depth_max = 60.0;

  int resolved_bands(int channels) const;
  std::vector<double> bin_depths() const;  // bin centers
  void validate(int channels) const;       // ConfigError
};

// Per axis, interleaved (sin, cos) pairs at frequencies
// (2*pi/extent) / temperature^(k/bands); axes concatenated x, y, z.
// Columns past 6*bands stay zero.
Tensor2D pe_3d(const Tensor2D& points, const PeConfig& cfg, int channels);

// Sum over depth bins of p(d) * pe_3d(origin + depth_d * dir).
// DomainError when a distribution row is negative or does not sum to 1.
Tensor2D pixel_pe(const Tensor2D& origins, const Tensor2D& dirs, const Tensor2D& depth_probs,
                  const PeConfig& cfg, int channels);

}  // namespace lvl::fusion
