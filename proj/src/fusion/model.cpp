#include "lvl/fusion/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lvl/errors.hpp"

namespace lvl::fusion {

void ModelConfig::validate() const {
  if (channels < 1) throw ConfigError("model: channels must be >= 1");
  if (heads < 1 || channels % heads != 0) throw ConfigError("model: channels must be divisible by heads");
  if (blocks < 1) throw ConfigError("model: at least one block required");
  if (n_carrier < 0 || n_instance < 0 || n_tokens() < 1) throw ConfigError("model: need at least one token");
  pe.validate(channels);
}

void TokenSet::validate(int channels, const PeConfig& pe) const {
  require_shape(carrier, carrier.rows(), channels, "carrier tokens");
  require_shape(instance, instance.rows(), channels, "instance tokens");
  require_shape(reference_points, carrier.rows() + instance.rows(), 3, "reference points");
  const double half = pe.extent / 2.0;
  if ((reference_points.array().abs() > half).any()) {
    throw DomainError("reference points outside the perception range");
  }
}

Tensor2D grid_reference_points(int n, double extent) {
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double cell = extent / side;
  Tensor2D pts = Tensor2D::Zero(n, 3);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = -extent / 2.0 + (i / side + 0.5) * cell;
    pts(i, 1) = -extent / 2.0 + (i % side + 0.5) * cell;
  }
  return pts;
}

ModelParams ModelParams::init(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ModelParams p;
  p.config = config;
  p.tokens.carrier = random_normal(rng, config.n_carrier, config.channels);
  p.tokens.instance = random_normal(rng, config.n_instance, config.channels);
  p.tokens.reference_points = grid_reference_points(config.n_tokens(), config.pe.extent);
  for (int b = 0; b < config.blocks; ++b) {
    BlockParams block;
    block.self_attn = AttnParams::random(rng, config.channels, config.heads);
    block.cross_attn = AttnParams::random(rng, config.channels, config.heads);
    block.gates = GateParams::zeros(config.heads);
    p.blocks.push_back(std::move(block));
  }
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.config = config;
  z.tokens.carrier = Tensor2D::Zero(tokens.carrier.rows(), tokens.carrier.cols());
  z.tokens.instance = Tensor2D::Zero(tokens.instance.rows(), tokens.instance.cols());
  z.tokens.reference_points = tokens.reference_points;
  for (const auto& b : blocks) {
    BlockParams zb;
    zb.self_attn = AttnParams::zeros(config.channels, b.self_attn.heads);
    zb.cross_attn = AttnParams::zeros(config.channels, b.cross_attn.heads);
    zb.gates = GateParams::zeros(b.gates.heads());
    z.blocks.push_back(std::move(zb));
  }
  return z;
}

namespace {

template <typename Self, typename Ptr>
std::vector<std::pair<std::string, Ptr>> collect(Self& p) {
  std::vector<std::pair<std::string, Ptr>> out;
  out.emplace_back("tokens.carrier", &p.tokens.carrier);
  out.emplace_back("tokens.instance", &p.tokens.instance);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const std::string pre = "block" + std::to_string(b) + ".";
    auto& blk = p.blocks[b];
    out.emplace_back(pre + "self.wq", &blk.self_attn.wq);
    out.emplace_back(pre + "self.wk", &blk.self_attn.wk);
    out.emplace_back(pre + "self.wv", &blk.self_attn.wv);
    out.emplace_back(pre + "self.wo", &blk.self_attn.wo);
    out.emplace_back(pre + "cross.wq", &blk.cross_attn.wq);
    out.emplace_back(pre + "cross.wk", &blk.cross_attn.wk);
    out.emplace_back(pre + "cross.wv", &blk.cross_attn.wv);
    out.emplace_back(pre + "cross.wo", &blk.cross_attn.wo);
    out.emplace_back(pre + "gate", &blk.gates.g);
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Tensor2D*>> ModelParams::parameters() {
  return collect<ModelParams, Tensor2D*>(*this);
}

std::vector<std::pair<std::string, const Tensor2D*>> ModelParams::parameters() const {
  return collect<const ModelParams, const Tensor2D*>(*this);
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : parameters()) n += static_cast<std::size_t>(t->size());
  return n;
}

std::vector<double> flatten(const ModelParams& p) {
  std::vector<double> flat;
  flat.reserve(p.parameter_count());
  for (const auto& [name, t] : p.parameters()) flat.insert(flat.end(), t->data(), t->data() + t->size());
  return flat;
}

void unflatten(std::span<const double> flat, ModelParams& p) {
  if (flat.size() != p.parameter_count()) throw ConfigError("unflatten: parameter count mismatch");
  std::size_t off = 0;
  for (auto& [name, t] : p.parameters()) {
    std::copy_n(flat.begin() + static_cast<long>(off), t->size(), t->data());
    off += static_cast<std::size_t>(t->size());
  }
}

ModelOutput model_forward(const ModelParams& params, const MemoryBank& memory, const EmbeddedFeatures& feats,
                          ModelCache* cache) {
  const auto& cfg = params.config;
  if (params.blocks.empty()) throw ConfigError("model: empty block stack");
  params.tokens.validate(cfg.channels, cfg.pe);
  Tensor2D ref_pe = pe_3d(params.tokens.reference_points, cfg.pe, cfg.channels);
  Tensor2D x = params.tokens.stacked();
  if (cache != nullptr) {
    cache->self.assign(params.blocks.size(), {});
    cache->cross.assign(params.blocks.size(), {});
  }
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    const auto& blk = params.blocks[b];
    x = self_attend(x, ref_pe, memory, blk.self_attn, cache ? &cache->self[b] : nullptr);
    x = gated_cross_attend(x, ref_pe, feats, blk.cross_attn, blk.gates, cache ? &cache->cross[b] : nullptr);
  }
  if (cache != nullptr) cache->ref_pe = std::move(ref_pe);
  ModelOutput out;
  out.carrier = x.topRows(cfg.n_carrier);
  out.instance = x.bottomRows(cfg.n_instance);
  out.memory.tokens = out.instance;
  out.memory.active = true;
  out.memory.pose = memory.pose;
  return out;
}

ModelParams model_backward(const ModelParams& params, const ModelCache& cache, const Tensor2D& d_out) {
  const auto& cfg = params.config;
  require_shape(d_out, cfg.n_tokens(), cfg.channels, "output gradient");
  ModelParams g = params.zeros_like();
  Tensor2D dx = d_out;
  for (std::size_t b = params.blocks.size(); b-- > 0;) {
    const auto& blk = params.blocks[b];
    auto& gb = g.blocks[b];
    dx = gated_cross_attend_backward(dx, cache.cross[b], blk.cross_attn, gb.cross_attn, gb.gates.g);
    dx = self_attend_backward(dx, cache.self[b], blk.self_attn, gb.self_attn);
  }
  g.tokens.carrier = dx.topRows(cfg.n_carrier);
  g.tokens.instance = dx.bottomRows(cfg.n_instance);
  return g;
}

ModalityFeatures synthetic_features(Rng& rng, int channels, int n_image, int n_point, const PeConfig& pe) {
  ModalityFeatures f;
  f.image = random_normal(rng, n_image, channels);
  f.image_origins = Tensor2D::Zero(n_image, 3);
  f.image_dirs.resize(n_image, 3);
  f.depth_probs.resize(n_image, pe.depth_bins);
  for (int i = 0; i < n_image; ++i) {
    f.image_origins(i, 2) = 1.6;
    const double yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double pitch = rng.uniform(-0.2, 0.05);
    f.image_dirs(i, 0) = std::cos(pitch) * std::cos(yaw);
    f.image_dirs(i, 1) = std::cos(pitch) * std::sin(yaw);
    f.image_dirs(i, 2) = std::sin(pitch);
    for (int d = 0; d < pe.depth_bins; ++d) f.depth_probs(i, d) = rng.uniform() + 1e-3;
    f.depth_probs.row(i) /= f.depth_probs.row(i).sum();
  }
  f.point = random_normal(rng, n_point, channels);
  f.point_xyz.resize(n_point, 3);
  const double half = 0.8 * pe.extent / 2.0;
  for (int i = 0; i < n_point; ++i) {
    f.point_xyz(i, 0) = rng.uniform(-half, half);
    f.point_xyz(i, 1) = rng.uniform(-half, half);
    f.point_xyz(i, 2) = rng.uniform(-2.0, 2.0);
  }
  return f;
}

}  // namespace lvl::fusion
