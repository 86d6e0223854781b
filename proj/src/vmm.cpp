#include "umbra/vmm.hpp"

namespace umbra {

Vmm Vmm::create(ParamStore& ps, const std::string& prefix, int c_l, int c_m, int c_e,
                int n_heads, Rng& rng, bool trainable) {
  Vmm v;
  v.c_e_ = c_e;
  v.proj_s_ = Linear::create(ps, prefix + ".proj_s", c_l, c_e, rng, trainable);
  v.proj_d_ = Linear::create(ps, prefix + ".proj_d", c_l, c_e, rng, trainable);
  v.proj_x_ = Linear::create(ps, prefix + ".proj_x", c_m, c_e, rng, trainable);
  v.attn_dark_ = CrossAttention::create(ps, prefix + ".attn_dark", c_e, n_heads, rng, trainable);
  v.attn_shadow_img_ =
      CrossAttention::create(ps, prefix + ".attn_shadow_img", c_e, n_heads, rng, trainable);
  v.attn_shadow_dark_ =
      CrossAttention::create(ps, prefix + ".attn_shadow_dark", c_e, n_heads, rng, trainable);
  v.mlp_dark_ = Mlp::create(ps, prefix + ".mlp_dark", c_e, c_e / 2, c_e, rng, trainable);
  v.mlp_shadow_ = Mlp::create(ps, prefix + ".mlp_shadow", 2 * c_e, c_e, c_e, rng, trainable);
  return v;
}

Vmm::Projected Vmm::project(const BundleTensors& b) const {
  return {proj_s_.forward(b.p_s), proj_d_.forward(b.p_d), proj_x_.forward(b.p_x)};
}

Tensor Vmm::dark_features(const Tensor& p_d_proj, const Tensor& p_x_proj) const {
  return attn_dark_.forward(p_d_proj, p_x_proj);
}

Tensor Vmm::match_dark(const Tensor& p_d_proj, const Tensor& p_x_proj) const {
  return mlp_dark_.forward(dark_features(p_d_proj, p_x_proj));
}

Tensor Vmm::match_shadow(const Tensor& p_s_proj, const Tensor& p_x_proj,
                         const Tensor& p_d_prime) const {
  Tensor p_s_prime = attn_shadow_img_.forward(p_s_proj, p_x_proj);
  Tensor fused = attn_shadow_dark_.forward(p_s_prime, p_d_prime);
  return mlp_shadow_.forward(concat_cols(p_s_prime, fused));
}

ContextPair Vmm::forward(const BundleTensors& b) const {
  const Projected p = project(b);
  Tensor p_d_prime = dark_features(p.p_d, p.p_x);
  Tensor e_d = mlp_dark_.forward(p_d_prime);
  Tensor e_s = match_shadow(p.p_s, p.p_x, p_d_prime);
  return {e_s, e_d};
}

}  // namespace umbra
