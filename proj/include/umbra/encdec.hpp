#pragma once

// Frozen toy encoder, per-stage temporal/context adapters, and the upsampling
// decoder with parallel shadow and edge heads.

#include <memory>
#include <string>
#include <vector>

#include "umbra/dsb.hpp"
#include "umbra/nn.hpp"
#include "umbra/ttb.hpp"
#include "umbra/vmm.hpp"

namespace umbra {

struct ModelConfig {
  int image_size = 64;  // H = W; must divide by 16 and by patch_size
  int patch_size = 4;   // 16/patch_size must be a power of two (pooling steps)
  int n_stages = 4;
  int c_b = 64;    // backbone width
  int c_e = 32;    // shared embedding width (contexts, tokens)
  int c_dec = 64;  // decoder width
  int l_k = 8;     // temporal tokens per stage
  int n_heads = 4;
  bool freeze_backbone = true;
  double head_gain = 8.0;             // fixed scale on both 1x1 heads
  std::string decoder_fusion = "sum";  // "sum" | "concat"
  // Residual add around the token injection. Without it the injection
  // bottlenecks every pixel through L_k token values and the decoder loses
  // the spatial detail the tokens are meant to enrich.
  bool temporal_residual = true;
  std::int64_t pixel_guard = 16384;  // cost guard for the pixel baseline

  // embedding bundle dims (text prior lengths and encoder widths)
  int l_s = 6, l_d = 5, c_l = 24, c_m = 28, m_patches = 16;

  int stage_grid() const { return image_size / 16; }
  void validate() const;
};

// Patch embedding followed by fixed 2x2 mean pooling down to H/16, then
// n_stages of channel-mixing blocks. Stands in for a frozen pretrained
// backbone; every stage emits [T, H/16, W/16, C_b].
class ToyEncoder {
 public:
  static ToyEncoder create(ParamStore& ps, const std::string& prefix, const ModelConfig& cfg,
                           Rng& rng, bool trainable);

  Tensor stem(const Tensor& clip) const;             // [T,H,W,3] -> [T,g,g,C_b]
  Tensor stage(int j, const Tensor& x) const;        // mixing block j, shape preserving
  std::vector<Tensor> forward(const Tensor& clip) const;  // all stage outputs, no adapters
  int n_stages() const { return static_cast<int>(stages_.size()); }

 private:
  struct Stage {
    LayerNorm ln;
    Mlp mlp;
  };
  Linear patch_embed_;
  std::vector<Linear> reducers_;  // space-to-depth 2x2 mixers down to H/16
  std::vector<Stage> stages_;
  int patch_ = 4, c_b_ = 64;
};

// conv3x3 (zero pad) as im2col + linear
struct Conv3x3 {
  Linear lin;  // 9*cin -> cout
  int c_in = 0, c_out = 0;

  static Conv3x3 create(ParamStore& ps, const std::string& name, int c_in, int c_out, Rng& rng,
                        bool trainable);
  Tensor forward(const Tensor& x) const;  // [T,h,w,c_in] -> [T,h,w,c_out]
};

class Decoder {
 public:
  static Decoder create(ParamStore& ps, const std::string& prefix, const ModelConfig& cfg,
                        Rng& rng, bool trainable = true);

  struct Out {
    Tensor shadow_logits;  // [T,H,W]
    Tensor edge_logits;    // [T,H,W]
  };
  Out forward(const std::vector<Tensor>& stage_feats) const;

 private:
  std::vector<Mlp> stage_mlps_;  // per-stage channel MLP, C_b -> C_dec
  Linear concat_proj_;           // only for "concat" fusion
  Conv3x3 fuse1_, fuse2_;
  LayerNorm fuse_ln_;
  Conv3x3 up1_, up2_, final_conv_;
  Linear head_shadow_, head_edge_;  // 1x1 heads, zero-init
  double head_gain_ = 1.0;
  std::string fusion_ = "sum";
  int c_dec_ = 0;
};

// The assembled network. Per stage j the forward pass runs:
//   x <- temporal_j(x); x <- encoder.stage(j, x); (x, aux_j) <- dsb_j(x, E_s, E_d)
// and all stage outputs feed the decoder.
class ShadowNet {
 public:
  ShadowNet(const ModelConfig& cfg, TemporalMode mode, std::uint64_t seed);

  struct Forward {
    Tensor shadow_logits;           // [T,H,W]
    Tensor edge_logits;             // [T,H,W]
    std::vector<Tensor> aux_probs;  // per stage, [T,g,g]
  };

  Forward forward(const Tensor& clip, const BundleTensors& bundle) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  TemporalMode temporal_mode() const { return mode_; }
  const Vmm& vmm() const { return vmm_; }
  const ToyEncoder& encoder() const { return encoder_; }

 private:
  ModelConfig cfg_;
  TemporalMode mode_;
  ParamStore params_;
  ToyEncoder encoder_;
  Vmm vmm_;
  std::vector<Ttb> ttbs_;
  std::vector<PixelTemporal> pixel_blocks_;
  std::vector<Dsb> dsbs_;
  Decoder decoder_;
};

// Clip pixels as a constant rank-4 tensor [T,H,W,3].
Tensor clip_to_tensor(const std::vector<double>& frames, int t, int h, int w);

}  // namespace umbra
