#include "umbra/dsb.hpp"

#include <stdexcept>

namespace umbra {

Dsb Dsb::create(ParamStore& ps, const std::string& prefix, int c_b, int c_e, int n_heads,
                Rng& rng, bool trainable) {
  Dsb d;
  d.c_b_ = c_b;
  d.c_e_ = c_e;
  d.compress_ = Linear::create(ps, prefix + ".compress", c_b, c_e, rng, trainable);
  d.attn_shadow_ =
      CrossAttention::create(ps, prefix + ".attn_shadow", c_e, n_heads, rng, trainable);
  d.attn_dark_ = CrossAttention::create(ps, prefix + ".attn_dark", c_e, n_heads, rng, trainable);
  d.alpha_ = ps.zeros_param(prefix + ".alpha", {1}, trainable);
  d.beta_ = ps.zeros_param(prefix + ".beta", {1}, trainable);
  d.aux_head_ = Linear::create(ps, prefix + ".aux_head", c_e, 1, rng, trainable);
  d.expand_ = Linear::create(ps, prefix + ".expand", c_e, c_b, rng, trainable,
                             /*with_bias=*/false);
  return d;
}

Dsb::Out Dsb::forward(const Tensor& x, const Tensor& e_s, const Tensor& e_d) const {
  if (x.shape().size() != 4 || x.dim(3) != c_b_)
    throw std::invalid_argument("dsb: want [T,h,w," + std::to_string(c_b_) + "], got " +
                                shape_str(x.shape()));
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int n = t * h * w;

  Tensor flat = reshape(x, {n, c_b_});
  Tensor x_c = compress_.forward(flat);
  Tensor x_s = attn_shadow_.forward(x_c, e_s);
  Tensor x_d = attn_dark_.forward(x_c, e_d);
  Tensor fused = add(scale_by(x_s, alpha_), scale_by(x_d, beta_));

  Out out;
  out.aux_prob = sigmoid(reshape(aux_head_.forward(fused), {t, h, w}));
  out.features = add(x, reshape(expand_.forward(fused), {t, h, w, c_b_}));
  return out;
}

Tensor dsb_aux_target(const std::vector<BinaryMask>& gt_frames, int erosion_kernel,
                      int downsample_factor) {
  if (gt_frames.empty()) throw std::invalid_argument("dsb_aux_target: no frames");
  const int oh = gt_frames[0].h / downsample_factor;
  const int ow = gt_frames[0].w / downsample_factor;
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(gt_frames.size()) * oh * ow);
  for (const auto& gt : gt_frames) {
    const SoftMask target =
        downsample_supervision(penumbra_reweight(gt, erosion_kernel), downsample_factor);
    data.insert(data.end(), target.v.begin(), target.v.end());
  }
  return Tensor::from_data({static_cast<int>(gt_frames.size()), oh, ow}, std::move(data));
}

Tensor dsb_aux_supervision(const std::vector<Tensor>& aux_probs,
                           const std::vector<BinaryMask>& gt_frames, int erosion_kernel,
                           int downsample_factor) {
  const Tensor target = dsb_aux_target(gt_frames, erosion_kernel, downsample_factor);
  Tensor acc;
  for (const auto& aux : aux_probs) {
    Tensor l = mse_mean(aux, target);
    acc = acc.defined() ? add(acc, l) : l;
  }
  if (!acc.defined()) throw std::invalid_argument("dsb_aux_supervision: no stages");
  return acc;
}

}  // namespace umbra
