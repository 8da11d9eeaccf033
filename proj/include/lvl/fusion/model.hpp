#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lvl/fusion/attention.hpp"

namespace lvl::fusion {

struct ModelConfig {
  int channels = 16;
  int heads = 4;
  int blocks = 2;
  int n_carrier = 3;
  int n_instance = 3;
  PeConfig pe;
  std::uint64_t seed = 0;

  int n_tokens() const { return n_carrier + n_instance; }
  void validate() const;  // ConfigError
};

// Learnable carrier and instance tokens, each tied to a 3D reference point.
struct TokenSet {
  Tensor2D carrier;           // N_carrier x C
  Tensor2D instance;          // N_instance x C
  Tensor2D reference_points;  // N_L x 3, carrier rows first

  Tensor2D stacked() const { return vstack(carrier, instance); }
  void validate(int channels, const PeConfig& pe) const;
};

// Uniform BEV grid over [-extent/2, extent/2]^2 at z = 0, row-major cell centers.
Tensor2D grid_reference_points(int n, double extent);

struct BlockParams {
  AttnParams self_attn;
  AttnParams cross_attn;
  GateParams gates;
};

struct ModelParams {
  ModelConfig config;
  TokenSet tokens;
  std::vector<BlockParams> blocks;

  // Random projections, unit-normal tokens, grid reference points, gates at 0.
  static ModelParams init(const ModelConfig& config);
  // Same layout with every learnable entry zero (gradient accumulator).
  ModelParams zeros_like() const;

  // Learnable arrays in a fixed order; reference points are not learnable.
  std::vector<std::pair<std::string, Tensor2D*>> parameters();
  std::vector<std::pair<std::string, const Tensor2D*>> parameters() const;
  std::size_t parameter_count() const;
};

std::vector<double> flatten(const ModelParams& p);
void unflatten(std::span<const double> flat, ModelParams& p);

struct ModelOutput {
  Tensor2D carrier;
  Tensor2D instance;
  MemoryBank memory;  // final instance tokens, active
};

struct ModelCache {
  Tensor2D ref_pe;
  std::vector<SelfAttnCache> self;
  std::vector<CrossAttnCache> cross;
};

// Each block applies self_attend then gated_cross_attend. The same memory
// feeds every block's self-attention.
ModelOutput model_forward(const ModelParams& params, const MemoryBank& memory, const EmbeddedFeatures& feats,
                          ModelCache* cache = nullptr);
// d_out covers all N_L rows, carrier rows first. Returns parameter gradients.
ModelParams model_backward(const ModelParams& params, const ModelCache& cache, const Tensor2D& d_out);

// Random rays from a roof-mounted origin with normalized random depth
// distributions, and points inside the perception range.
ModalityFeatures synthetic_features(Rng& rng, int channels, int n_image, int n_point, const PeConfig& pe);

}  // namespace lvl::fusion
