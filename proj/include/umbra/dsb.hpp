#pragma once

// Dark-aware semantic block: injects the shadow/dark contexts into encoder
// stage features through per-pixel cross attention, fuses the two paths with
// learnable scalar weights, and emits an auxiliary soft shadow mask.

#include <vector>

#include "umbra/maskops.hpp"
#include "umbra/nn.hpp"

namespace umbra {

class Dsb {
 public:
  static Dsb create(ParamStore& ps, const std::string& prefix, int c_b, int c_e, int n_heads,
                    Rng& rng, bool trainable = true);

  struct Out {
    Tensor features;  // [T,h,w,C_b], residual-enhanced
    Tensor aux_prob;  // [T,h,w], sigmoid soft mask
  };

  // x: [T,h,w,C_b]; e_s: [L_s,C_e]; e_d: [L_d,C_e]
  Out forward(const Tensor& x, const Tensor& e_s, const Tensor& e_d) const;

  Tensor alpha() const { return alpha_; }
  Tensor beta() const { return beta_; }

 private:
  Linear compress_;            // C_b -> C_e
  CrossAttention attn_shadow_;  // pixels query e_s
  CrossAttention attn_dark_;    // pixels query e_d
  Tensor alpha_, beta_;         // learnable fusion scalars, start at 0
  Linear aux_head_;             // C_e -> 1
  Linear expand_;               // C_e -> C_b, bias-less so zero fusion stays zero
  int c_b_ = 0, c_e_ = 0;
};

// Penumbra-aware auxiliary supervision: reweights each ground-truth frame,
// area-averages it down to the stage grid, and sums the per-stage MSE against
// the auxiliary soft masks (each [T,h,w]).
Tensor dsb_aux_supervision(const std::vector<Tensor>& aux_probs,
                           const std::vector<BinaryMask>& gt_frames, int erosion_kernel,
                           int downsample_factor);

// The per-frame target grid shared by every stage: [T, H/f, W/f].
Tensor dsb_aux_target(const std::vector<BinaryMask>& gt_frames, int erosion_kernel,
                      int downsample_factor);

}  // namespace umbra
