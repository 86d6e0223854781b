#include "umbra/ttb.hpp"

#include <stdexcept>

namespace umbra {

const char* temporal_mode_name(TemporalMode m) {
  switch (m) {
    case TemporalMode::none: return "none";
    case TemporalMode::pixel: return "pixel";
    case TemporalMode::tokenized: return "tokenized";
  }
  return "?";
}

TemporalMode temporal_mode_from(const std::string& s) {
  if (s == "none") return TemporalMode::none;
  if (s == "pixel") return TemporalMode::pixel;
  if (s == "tokenized") return TemporalMode::tokenized;
  throw std::invalid_argument("unknown temporal mode: " + s);
}

Ttb Ttb::create(ParamStore& ps, const std::string& prefix, int c_b, int c_e, int l_k,
                int n_heads, Rng& rng, bool trainable, bool residual) {
  if (l_k < 1) throw std::invalid_argument("ttb: need at least one token");
  Ttb t;
  t.c_b_ = c_b;
  t.c_e_ = c_e;
  t.residual_ = residual;
  t.align_ = Linear::create(ps, prefix + ".align", c_b, c_e, rng, trainable);
  t.tokens_ = ps.create(prefix + ".tokens", {l_k, c_e}, trainable,
                        [&rng] { return rng.normal(0.0, 0.02); });
  t.attn_update_ = CrossAttention::create(ps, prefix + ".attn_update", c_e, n_heads, rng,
                                          trainable);
  t.attn_inject_ = CrossAttention::create(ps, prefix + ".attn_inject", c_e, n_heads, rng,
                                          trainable);
  t.restore_ = Linear::create(ps, prefix + ".restore", c_e, c_b, rng, trainable);
  return t;
}

Tensor Ttb::summarize(const Tensor& x) const {
  if (x.shape().size() != 4 || x.dim(3) != c_b_)
    throw std::invalid_argument("ttb.summarize: want [T,h,w," + std::to_string(c_b_) +
                                "], got " + shape_str(x.shape()));
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor aligned = align_.forward(reshape(x, {t * h * w, c_b_}));
  return spatial_mean(reshape(aligned, {t, h, w, c_e_}));
}

Tensor Ttb::update_tokens(const Tensor& tokens, const Tensor& z) const {
  return attn_update_.forward(tokens, z);
}

Tensor Ttb::inject(const Tensor& tokens_prime, const Tensor& x) const {
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor aligned = align_.forward(reshape(x, {t * h * w, c_b_}));
  Tensor mixed = attn_inject_.forward(aligned, tokens_prime);
  Tensor out = reshape(restore_.forward(mixed), {t, h, w, c_b_});
  return residual_ ? add(x, out) : out;
}

Tensor Ttb::forward(const Tensor& x) const {
  return inject(update_tokens(tokens_, summarize(x)), x);
}

PixelTemporal PixelTemporal::create(ParamStore& ps, const std::string& prefix, int c_b,
                                    int n_heads, Rng& rng, bool trainable,
                                    std::int64_t position_limit) {
  PixelTemporal p;
  p.c_b_ = c_b;
  p.position_limit_ = position_limit;
  p.attn_ = CrossAttention::create(ps, prefix + ".attn", c_b, n_heads, rng, trainable);
  return p;
}

Tensor PixelTemporal::forward(const Tensor& x) const {
  if (x.shape().size() != 4 || x.dim(3) != c_b_)
    throw std::invalid_argument("pixel_temporal: want [T,h,w," + std::to_string(c_b_) +
                                "], got " + shape_str(x.shape()));
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::int64_t positions = static_cast<std::int64_t>(t) * h * w;
  // The score matrix is positions^2; refuse sizes that would silently blow up.
  if (positions > position_limit_)
    throw std::invalid_argument("pixel_temporal: " + std::to_string(positions) +
                                " positions exceed the cost guard (" +
                                std::to_string(position_limit_) + ")");
  Tensor flat = reshape(x, {static_cast<int>(positions), c_b_});
  return reshape(attn_.forward(flat, flat), {t, h, w, c_b_});
}

std::uint64_t attention_cost(TemporalMode mode, int t, int h, int w, int l_k) {
  const std::uint64_t positions =
      static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w);
  switch (mode) {
    case TemporalMode::none:
      return 0;
    case TemporalMode::pixel:
      return positions * positions;
    case TemporalMode::tokenized:
      return static_cast<std::uint64_t>(l_k) * static_cast<std::uint64_t>(t) +
             positions * static_cast<std::uint64_t>(l_k);
  }
  return 0;
}

}  // namespace umbra
