#pragma once

// Tokenized temporal block: learnable tokens summarize cross-frame dynamics
// from spatially pooled features and redistribute them to every pixel.
// Also hosts the pixel-level spatiotemporal self-attention baseline and the
// attention score-matrix cost accounting used by the temporal ablation.

#include <cstdint>
#include <string>

#include "umbra/nn.hpp"

namespace umbra {

enum class TemporalMode { none, pixel, tokenized };

const char* temporal_mode_name(TemporalMode m);
TemporalMode temporal_mode_from(const std::string& s);

class Ttb {
 public:
  static Ttb create(ParamStore& ps, const std::string& prefix, int c_b, int c_e, int l_k,
                    int n_heads, Rng& rng, bool trainable = true, bool residual = false);

  // z[t] = spatial mean of the channel-aligned feature; [T,h,w,C_b] -> [T,C_e]
  Tensor summarize(const Tensor& x) const;

  // tokens' = attn(tokens, z); [L_k,C_e]
  Tensor update_tokens(const Tensor& tokens, const Tensor& z) const;
  Tensor update_tokens(const Tensor& z) const { return update_tokens(tokens_, z); }

  // pixels query the updated tokens; restores stage width. Shape preserving.
  Tensor inject(const Tensor& tokens_prime, const Tensor& x) const;

  // inject(update(tokens, summarize(x)), x)
  Tensor forward(const Tensor& x) const;

  Tensor tokens() const { return tokens_; }

 private:
  Linear align_;    // C_b -> C_e; shared by summarize and inject
  Tensor tokens_;   // [L_k, C_e]
  CrossAttention attn_update_;  // tokens query pooled frames
  CrossAttention attn_inject_;  // pixels query tokens
  Linear restore_;  // C_e -> C_b
  int c_b_ = 0, c_e_ = 0;
  bool residual_ = false;
};

// Appendix baseline: one joint self-attention layer over all T*h*w positions
// at the native stage width.
class PixelTemporal {
 public:
  static PixelTemporal create(ParamStore& ps, const std::string& prefix, int c_b, int n_heads,
                              Rng& rng, bool trainable = true,
                              std::int64_t position_limit = 16384);

  Tensor forward(const Tensor& x) const;  // [T,h,w,C_b] -> same shape

 private:
  CrossAttention attn_;
  std::int64_t position_limit_ = 16384;
  int c_b_ = 0;
};

// Attention score-matrix element counts.
//   tokenized: L_k*T (token update) + T*h*w*L_k (injection)
//   pixel:     (T*h*w)^2
//   none:      0
std::uint64_t attention_cost(TemporalMode mode, int t, int h, int w, int l_k);

}  // namespace umbra
