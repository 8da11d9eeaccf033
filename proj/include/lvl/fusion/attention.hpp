#pragma once

#include <vector>

#include "lvl/fusion/positional.hpp"
#include "lvl/fusion/tensor.hpp"
#include "lvl/geometry.hpp"

namespace lvl::fusion {

// Row-vector convention: projections are X * W with W of shape C x C.
// k/v projections are shared between image and point keys.
struct AttnParams {
  Tensor2D wq, wk, wv, wo;
  int heads = 1;

  int channels() const { return static_cast<int>(wq.rows()); }
  void validate() const;  // ConfigError
  static AttnParams random(Rng& rng, int channels, int heads);
  static AttnParams zeros(int channels, int heads);
};

// One scalar per head, stored 1 x H.
struct GateParams {
  Tensor2D g;

  int heads() const { return static_cast<int>(g.cols()); }
  double tanh_at(int h) const;
  static GateParams zeros(int heads);
};

// Tokens carried over from the previous frame. Inactive memory contributes
// no keys; its tokens are zero-filled.
struct MemoryBank {
  Tensor2D tokens;
  bool active = false;
  Pose pose;  // ego pose the tokens were produced in; no motion compensation yet

  static MemoryBank empty(Index n_tokens, int channels);
};

// Raw modality inputs: image tokens carry a camera ray and a depth
// distribution, point tokens carry their 3D location.
struct ModalityFeatures {
  Tensor2D image;          // N_I x C
  Tensor2D image_origins;  // N_I x 3
  Tensor2D image_dirs;     // N_I x 3
  Tensor2D depth_probs;    // N_I x D
  Tensor2D point;          // N_P x C
  Tensor2D point_xyz;      // N_P x 3

  void validate(int channels, const PeConfig& pe) const;
};

// Features with their positional embeddings resolved.
struct EmbeddedFeatures {
  Tensor2D image, image_pe;
  Tensor2D point, point_pe;
};
EmbeddedFeatures embed(const ModalityFeatures& f, const PeConfig& pe, int channels);

// ---- multi-head core ---------------------------------------------------------

// concat_h softmax(scale * Q_h K_h^T) V_h. Head probabilities are appended to
// `probs` when given.
Tensor2D multi_head(const Tensor2D& q, const Tensor2D& k, const Tensor2D& v, int heads, double scale,
                    std::vector<Tensor2D>* probs = nullptr);
void multi_head_backward(const Tensor2D& dz, const Tensor2D& q, const Tensor2D& k, const Tensor2D& v,
                         const std::vector<Tensor2D>& probs, int heads, double scale, Tensor2D& dq,
                         Tensor2D& dk, Tensor2D& dv);

// ---- self-attention: L <- MHA(L, [L; M], [L; M]) -------------------------------

struct SelfAttnCache {
  Tensor2D q_in, k_in, v_in;  // projection inputs
  Tensor2D q, k, v, z;
  std::vector<Tensor2D> probs;
  Index n_tokens = 0;
};

// Queries and token keys get the reference-point embedding; memory keys and
// all values are used as is. Scores are scaled by 1/sqrt(C/H).
Tensor2D self_attend(const Tensor2D& tokens, const Tensor2D& ref_pe, const MemoryBank& memory,
                     const AttnParams& params, SelfAttnCache* cache = nullptr);
// Accumulates into `grads` (same layout as the parameters); returns the gradient with respect to `tokens`.
Tensor2D self_attend_backward(const Tensor2D& dout, const SelfAttnCache& cache, const AttnParams& params,
                              AttnParams& grads);

// ---- gated cross-attention -------------------------------------------------------

struct CrossAttnCache {
  Tensor2D q_in, q;
  Tensor2D image_k_in, image_v_in, k_image, v_image;
  Tensor2D point_k_in, point_v_in, k_point, v_point;
  Tensor2D z_image, z_point, z;  // z_point is ungated
  std::vector<Tensor2D> probs_image, probs_point;
  std::vector<double> tau;
};

// Per head: S_I V_I + tanh(g_h) S_P V_P with the two score blocks softmaxed
// separately and scaled by 1/sqrt(C); heads concatenated, then W_o. With no
// point tokens, or where tanh(g_h) is exactly 0, the head output is the
// image-only result unchanged.
Tensor2D gated_cross_attend(const Tensor2D& tokens, const Tensor2D& ref_pe, const EmbeddedFeatures& feats,
                            const AttnParams& params, const GateParams& gates,
                            CrossAttnCache* cache = nullptr);
// O_I = W_o concat_h(S_I V_I).
Tensor2D image_only_attend(const Tensor2D& tokens, const Tensor2D& ref_pe, const Tensor2D& image,
                           const Tensor2D& image_pe, const AttnParams& params);
// Accumulates into `grads` and `dgate` (1 x H); returns d tokens.
Tensor2D gated_cross_attend_backward(const Tensor2D& dout, const CrossAttnCache& cache,
                                     const AttnParams& params, AttnParams& grads, Tensor2D& dgate);

}  // namespace lvl::fusion
