#include "lvl/fusion/attention.hpp"

#include <cmath>
#include <string>

#include "lvl/errors.hpp"

namespace lvl::fusion {
namespace {

int head_dim(const Tensor2D& q, int heads) { return static_cast<int>(q.cols()) / heads; }

void check_tokens(const Tensor2D& tokens, const Tensor2D& ref_pe, int channels, const char* what) {
  if (tokens.rows() == 0) throw ConfigError(std::string(what) + ": no query tokens");
  require_shape(tokens, tokens.rows(), channels, what);
  require_shape(ref_pe, tokens.rows(), channels, std::string(what) + " reference embedding");
}

// Shared by the gated and image-only paths so that a zero gate reproduces
// the image-only result bit for bit.
Tensor2D cross_core(const Tensor2D& tokens, const Tensor2D& ref_pe, const Tensor2D& image,
                    const Tensor2D& image_pe, const Tensor2D* point, const Tensor2D* point_pe,
                    const AttnParams& p, const GateParams* gates, CrossAttnCache* cache) {
  p.validate();
  const int c = p.channels();
  check_tokens(tokens, ref_pe, c, "cross-attention");
  if (image.rows() == 0) throw ConfigError("cross-attention: no image tokens");
  require_shape(image, image.rows(), c, "image features");
  require_shape(image_pe, image.rows(), c, "image embedding");
  const bool with_points = point != nullptr && point->rows() > 0;
  if (with_points) {
    require_shape(*point, point->rows(), c, "point features");
    require_shape(*point_pe, point->rows(), c, "point embedding");
  }
  if (gates != nullptr && gates->heads() != p.heads) throw ConfigError("cross-attention: gate count != heads");

  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  Tensor2D q_in = tokens + ref_pe;
  Tensor2D q = q_in * p.wq;
  Tensor2D image_k_in = image + image_pe;
  Tensor2D k_image = image_k_in * p.wk;
  Tensor2D v_image = image * p.wv;
  std::vector<Tensor2D> probs_image;
  Tensor2D z = multi_head(q, k_image, v_image, p.heads, scale, cache ? &probs_image : nullptr);

  if (cache != nullptr) {
    cache->z_image = z;
    cache->tau.assign(static_cast<std::size_t>(p.heads), 0.0);
  }
  if (with_points) {
    std::vector<double> tau(static_cast<std::size_t>(p.heads), 0.0);
    bool any = false;
    for (int h = 0; h < p.heads; ++h) {
      tau[static_cast<std::size_t>(h)] = gates ? gates->tanh_at(h) : 0.0;
      any = any || tau[static_cast<std::size_t>(h)] != 0.0;
    }
    // The point branch is still needed for backward when every gate is 0.
    if (any || cache != nullptr) {
      Tensor2D point_k_in = *point + *point_pe;
      Tensor2D k_point = point_k_in * p.wk;
      Tensor2D v_point = *point * p.wv;
      std::vector<Tensor2D> probs_point;
      Tensor2D z_point = multi_head(q, k_point, v_point, p.heads, scale, cache ? &probs_point : nullptr);
      const int d = head_dim(q, p.heads);
      for (int h = 0; h < p.heads; ++h) {
        const double t = tau[static_cast<std::size_t>(h)];
        if (t != 0.0) z.middleCols(h * d, d) += t * z_point.middleCols(h * d, d);
      }
      if (cache != nullptr) {
        cache->point_k_in = std::move(point_k_in);
        cache->point_v_in = *point;
        cache->k_point = std::move(k_point);
        cache->v_point = std::move(v_point);
        cache->z_point = std::move(z_point);
        cache->probs_point = std::move(probs_point);
        cache->tau = tau;
      }
    }
  }
  Tensor2D out = z * p.wo;
  require_finite(out, "cross-attention output");
  if (cache != nullptr) {
    cache->q_in = std::move(q_in);
    cache->q = std::move(q);
    cache->image_k_in = std::move(image_k_in);
    cache->image_v_in = image;
    cache->k_image = std::move(k_image);
    cache->v_image = std::move(v_image);
    cache->probs_image = std::move(probs_image);
    cache->z = std::move(z);
  }
  return out;
}

}  // namespace

void AttnParams::validate() const {
  const Index c = wq.rows();
  if (c == 0) throw ConfigError("attention: zero channels");
  for (const Tensor2D* w : {&wq, &wk, &wv, &wo}) require_shape(*w, c, c, "attention weight");
  if (heads < 1 || c % heads != 0) {
    throw ConfigError("attention: " + std::to_string(c) + " channels not divisible by " + std::to_string(heads) +
                      " heads");
  }
}

AttnParams AttnParams::random(Rng& rng, int channels, int heads) {
  const double s = 1.0 / std::sqrt(static_cast<double>(channels));
  AttnParams p;
  p.wq = random_normal(rng, channels, channels, s);
  p.wk = random_normal(rng, channels, channels, s);
  p.wv = random_normal(rng, channels, channels, s);
  p.wo = random_normal(rng, channels, channels, s);
  p.heads = heads;
  p.validate();
  return p;
}

AttnParams AttnParams::zeros(int channels, int heads) {
  AttnParams p;
  p.wq = p.wk = p.wv = p.wo = Tensor2D::Zero(channels, channels);
  p.heads = heads;
  return p;
}

double GateParams::tanh_at(int h) const { return std::tanh(g(0, h)); }

GateParams GateParams::zeros(int heads) { return {Tensor2D::Zero(1, heads)}; }

MemoryBank MemoryBank::empty(Index n_tokens, int channels) {
  MemoryBank m;
  m.tokens = Tensor2D::Zero(n_tokens, channels);
  return m;
}

void ModalityFeatures::validate(int channels, const PeConfig& pe) const {
  const Index ni = image.rows();
  if (ni == 0) throw ConfigError("modality features: at least one image token required");
  require_shape(image, ni, channels, "image features");
  require_shape(image_origins, ni, 3, "image ray origins");
  require_shape(image_dirs, ni, 3, "image ray directions");
  require_shape(depth_probs, ni, pe.depth_bins, "depth distributions");
  const Index np = point.rows();
  if (np > 0) require_shape(point, np, channels, "point features");
  require_shape(point_xyz, np, 3, "point locations");
  require_finite(image, "image features");
  require_finite(point, "point features");
}

EmbeddedFeatures embed(const ModalityFeatures& f, const PeConfig& pe, int channels) {
  f.validate(channels, pe);
  EmbeddedFeatures e;
  e.image = f.image;
  e.image_pe = pixel_pe(f.image_origins, f.image_dirs, f.depth_probs, pe, channels);
  e.point = f.point.rows() > 0 ? f.point : Tensor2D(0, channels);
  e.point_pe = pe_3d(f.point_xyz, pe, channels);
  return e;
}

Tensor2D multi_head(const Tensor2D& q, const Tensor2D& k, const Tensor2D& v, int heads, double scale,
                    std::vector<Tensor2D>* probs) {
  const int d = head_dim(q, heads);
  Tensor2D z(q.rows(), q.cols());
  for (int h = 0; h < heads; ++h) {
    Tensor2D scores = (q.middleCols(h * d, d) * k.middleCols(h * d, d).transpose()) * scale;
    Tensor2D a = softmax_rows(scores);
    z.middleCols(h * d, d) = a * v.middleCols(h * d, d);
    if (probs != nullptr) probs->push_back(std::move(a));
  }
  return z;
}

void multi_head_backward(const Tensor2D& dz, const Tensor2D& q, const Tensor2D& k, const Tensor2D& v,
                         const std::vector<Tensor2D>& probs, int heads, double scale, Tensor2D& dq,
                         Tensor2D& dk, Tensor2D& dv) {
  const int d = head_dim(q, heads);
  dq = Tensor2D::Zero(q.rows(), q.cols());
  dk = Tensor2D::Zero(k.rows(), k.cols());
  dv = Tensor2D::Zero(v.rows(), v.cols());
  for (int h = 0; h < heads; ++h) {
    const Tensor2D& a = probs[static_cast<std::size_t>(h)];
    const auto dzh = dz.middleCols(h * d, d);
    Tensor2D da = dzh * v.middleCols(h * d, d).transpose();
    dv.middleCols(h * d, d) = a.transpose() * dzh;
    const Eigen::VectorXd inner = (da.array() * a.array()).rowwise().sum();
    Tensor2D ds = a.array() * (da.colwise() - inner).array();
    dq.middleCols(h * d, d) = scale * (ds * k.middleCols(h * d, d));
    dk.middleCols(h * d, d) = scale * (ds.transpose() * q.middleCols(h * d, d));
  }
}

Tensor2D self_attend(const Tensor2D& tokens, const Tensor2D& ref_pe, const MemoryBank& memory,
                     const AttnParams& p, SelfAttnCache* cache) {
  p.validate();
  const int c = p.channels();
  check_tokens(tokens, ref_pe, c, "self-attention");
  Tensor2D q_in = tokens + ref_pe;
  Tensor2D k_in = q_in;
  Tensor2D v_in = tokens;
  if (memory.active && memory.tokens.rows() > 0) {
    require_shape(memory.tokens, memory.tokens.rows(), c, "memory tokens");
    k_in = vstack(k_in, memory.tokens);
    v_in = vstack(v_in, memory.tokens);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(c / p.heads));
  Tensor2D q = q_in * p.wq;
  Tensor2D k = k_in * p.wk;
  Tensor2D v = v_in * p.wv;
  std::vector<Tensor2D> probs;
  Tensor2D z = multi_head(q, k, v, p.heads, scale, cache ? &probs : nullptr);
  Tensor2D out = z * p.wo;
  require_finite(out, "self-attention output");
  if (cache != nullptr) {
    cache->q_in = std::move(q_in);
    cache->k_in = std::move(k_in);
    cache->v_in = std::move(v_in);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->z = std::move(z);
    cache->probs = std::move(probs);
    cache->n_tokens = tokens.rows();
  }
  return out;
}

Tensor2D self_attend_backward(const Tensor2D& dout, const SelfAttnCache& cache, const AttnParams& p,
                              AttnParams& grads) {
  const int c = p.channels();
  const double scale = 1.0 / std::sqrt(static_cast<double>(c / p.heads));
  grads.wo += cache.z.transpose() * dout;
  const Tensor2D dz = dout * p.wo.transpose();
  Tensor2D dq, dk, dv;
  multi_head_backward(dz, cache.q, cache.k, cache.v, cache.probs, p.heads, scale, dq, dk, dv);
  grads.wq += cache.q_in.transpose() * dq;
  grads.wk += cache.k_in.transpose() * dk;
  grads.wv += cache.v_in.transpose() * dv;
  const Index n = cache.n_tokens;
  Tensor2D dtokens = dq * p.wq.transpose();
  dtokens += (dk * p.wk.transpose()).topRows(n);
  dtokens += (dv * p.wv.transpose()).topRows(n);
  return dtokens;
}

Tensor2D gated_cross_attend(const Tensor2D& tokens, const Tensor2D& ref_pe, const EmbeddedFeatures& f,
                            const AttnParams& params, const GateParams& gates, CrossAttnCache* cache) {
  return cross_core(tokens, ref_pe, f.image, f.image_pe, &f.point, &f.point_pe, params, &gates, cache);
}

Tensor2D image_only_attend(const Tensor2D& tokens, const Tensor2D& ref_pe, const Tensor2D& image,
                           const Tensor2D& image_pe, const AttnParams& params) {
  return cross_core(tokens, ref_pe, image, image_pe, nullptr, nullptr, params, nullptr, nullptr);
}

Tensor2D gated_cross_attend_backward(const Tensor2D& dout, const CrossAttnCache& cache, const AttnParams& p,
                                     AttnParams& grads, Tensor2D& dgate) {
  const int c = p.channels();
  const int d = c / p.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  grads.wo += cache.z.transpose() * dout;
  const Tensor2D dz = dout * p.wo.transpose();

  Tensor2D dq, dk, dv;
  multi_head_backward(dz, cache.q, cache.k_image, cache.v_image, cache.probs_image, p.heads, scale, dq, dk, dv);
  grads.wk += cache.image_k_in.transpose() * dk;
  grads.wv += cache.image_v_in.transpose() * dv;

  if (cache.z_point.rows() > 0) {
    Tensor2D dz_point(dz.rows(), dz.cols());
    for (int h = 0; h < p.heads; ++h) {
      const double t = cache.tau[static_cast<std::size_t>(h)];
      const double dtau = (dz.middleCols(h * d, d).array() * cache.z_point.middleCols(h * d, d).array()).sum();
      dgate(0, h) += (1.0 - t * t) * dtau;
      dz_point.middleCols(h * d, d) = t * dz.middleCols(h * d, d);
    }
    Tensor2D dq_p, dk_p, dv_p;
    multi_head_backward(dz_point, cache.q, cache.k_point, cache.v_point, cache.probs_point, p.heads, scale, dq_p,
                        dk_p, dv_p);
    dq += dq_p;
    grads.wk += cache.point_k_in.transpose() * dk_p;
    grads.wv += cache.point_v_in.transpose() * dv_p;
  }
  grads.wq += cache.q_in.transpose() * dq;
  return dq * p.wq.transpose();
}

}  // namespace lvl::fusion
