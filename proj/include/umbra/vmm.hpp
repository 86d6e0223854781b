#pragma once

// Vision-language match module: aligns the shadow / dark-region text prior
// embeddings with image patch embeddings via cross attention, producing the
// visual-informed contexts consumed by the DSB.

#include "umbra/nn.hpp"

namespace umbra {

// Text/image embedding inputs as tensors. The upstream encoders are frozen;
// bundles are treated as constants (no gradient flows into them).
struct BundleTensors {
  Tensor p_s;  // [L_s, C_l]
  Tensor p_d;  // [L_d, C_l]
  Tensor p_x;  // [T*M, C_m]
};

struct ContextPair {
  Tensor e_s;  // [L_s, C_e]
  Tensor e_d;  // [L_d, C_e]
};

class Vmm {
 public:
  static Vmm create(ParamStore& ps, const std::string& prefix, int c_l, int c_m, int c_e,
                    int n_heads, Rng& rng, bool trainable = true);

  struct Projected {
    Tensor p_s, p_d, p_x;  // all at width C_e
  };

  // Three independent linear projections to the shared width.
  Projected project(const BundleTensors& b) const;

  // Pre-MLP dark feature: attn(p_d, p_x).
  Tensor dark_features(const Tensor& p_d_proj, const Tensor& p_x_proj) const;

  // e_d = mlp(attn(p_d, p_x))
  Tensor match_dark(const Tensor& p_d_proj, const Tensor& p_x_proj) const;

  // e_s = mlp_2c(cat(attn(p_s, p_x), attn(p_s', p_d'))), where p_s' is the
  // first attention's output and p_d_prime the pre-MLP dark feature.
  Tensor match_shadow(const Tensor& p_s_proj, const Tensor& p_x_proj,
                      const Tensor& p_d_prime) const;

  ContextPair forward(const BundleTensors& b) const;

  int c_e() const { return c_e_; }

 private:
  Linear proj_s_, proj_d_, proj_x_;
  CrossAttention attn_dark_;         // p_d query, p_x kv
  CrossAttention attn_shadow_img_;   // p_s query, p_x kv
  CrossAttention attn_shadow_dark_;  // p_s' query, p_d' kv
  Mlp mlp_dark_;                     // C_e -> C_e/2 -> C_e
  Mlp mlp_shadow_;                   // 2C_e -> C_e -> C_e
  int c_e_ = 0;
};

}  // namespace umbra
