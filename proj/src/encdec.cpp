#include "umbra/encdec.hpp"

#include <stdexcept>

namespace umbra {

void ModelConfig::validate() const {
  if (image_size < 16 || image_size % 16 != 0)
    throw std::invalid_argument("model: image_size must be a positive multiple of 16");
  if (patch_size < 1 || image_size % patch_size != 0)
    throw std::invalid_argument("model: image_size must divide by patch_size");
  const int down = 16 / patch_size;
  if (patch_size > 16 || (down & (down - 1)) != 0)
    throw std::invalid_argument("model: 16/patch_size must be a power of two");
  if (n_stages < 1) throw std::invalid_argument("model: need at least one stage");
  if (c_e % n_heads != 0 || c_b % n_heads != 0)
    throw std::invalid_argument("model: c_e and c_b must divide by n_heads");
  if (c_e % 2 != 0) throw std::invalid_argument("model: c_e must be even");
  if (decoder_fusion != "sum" && decoder_fusion != "concat")
    throw std::invalid_argument("model: decoder_fusion must be sum|concat");
  if (l_k < 1 || l_s < 1 || l_d < 1 || m_patches < 1)
    throw std::invalid_argument("model: sequence lengths must be >= 1");
}

// ---------------- ToyEncoder ----------------

ToyEncoder ToyEncoder::create(ParamStore& ps, const std::string& prefix, const ModelConfig& cfg,
                              Rng& rng, bool trainable) {
  ToyEncoder e;
  e.patch_ = cfg.patch_size;
  e.c_b_ = cfg.c_b;
  e.patch_embed_ = Linear::create(ps, prefix + ".patch_embed",
                                  cfg.patch_size * cfg.patch_size * 3, cfg.c_b, rng, trainable);
  int reducer_count = 0;
  for (int d = 16 / cfg.patch_size; d > 1; d /= 2) ++reducer_count;
  for (int i = 0; i < reducer_count; ++i)
    // space-to-depth keeps sub-cell layout; the mixer folds it into channels
    e.reducers_.push_back(Linear::create(ps, prefix + ".reduce" + std::to_string(i),
                                         4 * cfg.c_b, cfg.c_b, rng, trainable));
  for (int j = 0; j < cfg.n_stages; ++j) {
    Stage s;
    s.ln = LayerNorm::create(ps, prefix + ".stage" + std::to_string(j) + ".ln", cfg.c_b,
                             trainable);
    s.mlp = Mlp::create(ps, prefix + ".stage" + std::to_string(j) + ".mlp", cfg.c_b,
                        cfg.c_b / 2, cfg.c_b, rng, trainable);
    e.stages_.push_back(std::move(s));
  }
  return e;
}

Tensor ToyEncoder::stem(const Tensor& clip) const {
  if (clip.shape().size() != 4 || clip.dim(3) != 3)
    throw std::invalid_argument("encoder: want [T,H,W,3], got " + shape_str(clip.shape()));
  if (clip.dim(1) % patch_ != 0 || clip.dim(2) % patch_ != 0)
    throw std::invalid_argument("encoder: frame dims must divide by patch size " +
                                std::to_string(patch_));
  const int t = clip.dim(0);
  int gh = clip.dim(1) / patch_, gw = clip.dim(2) / patch_;
  Tensor x = patch_embed_.forward(space_to_patches(clip, patch_));
  x = reshape(x, {t, gh, gw, c_b_});
  for (const auto& reduce : reducers_) {
    x = reduce.forward(space_to_patches(x, 2));
    gh /= 2;
    gw /= 2;
    x = reshape(x, {t, gh, gw, c_b_});
  }
  return x;
}

Tensor ToyEncoder::stage(int j, const Tensor& x) const {
  const auto& s = stages_[static_cast<std::size_t>(j)];
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor flat = reshape(x, {t * h * w, c_b_});
  Tensor mixed = s.mlp.forward(s.ln.forward(flat));
  return reshape(add(flat, mixed), {t, h, w, c_b_});
}

std::vector<Tensor> ToyEncoder::forward(const Tensor& clip) const {
  std::vector<Tensor> outs;
  Tensor x = stem(clip);
  for (int j = 0; j < n_stages(); ++j) {
    x = stage(j, x);
    outs.push_back(x);
  }
  return outs;
}

// ---------------- Conv3x3 ----------------

Conv3x3 Conv3x3::create(ParamStore& ps, const std::string& name, int c_in, int c_out, Rng& rng,
                        bool trainable) {
  Conv3x3 c;
  c.c_in = c_in;
  c.c_out = c_out;
  c.lin = Linear::create(ps, name, 9 * c_in, c_out, rng, trainable);
  return c;
}

Tensor Conv3x3::forward(const Tensor& x) const {
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2);
  return reshape(lin.forward(im2col3x3(x)), {t, h, w, c_out});
}

// ---------------- Decoder ----------------

Decoder Decoder::create(ParamStore& ps, const std::string& prefix, const ModelConfig& cfg,
                        Rng& rng, bool trainable) {
  Decoder d;
  d.head_gain_ = cfg.head_gain;
  d.fusion_ = cfg.decoder_fusion;
  d.c_dec_ = cfg.c_dec;
  for (int j = 0; j < cfg.n_stages; ++j)
    d.stage_mlps_.push_back(Mlp::create(ps, prefix + ".stage_mlp" + std::to_string(j), cfg.c_b,
                                        cfg.c_dec, cfg.c_dec, rng, trainable));
  if (cfg.decoder_fusion == "concat")
    d.concat_proj_ = Linear::create(ps, prefix + ".concat_proj", cfg.n_stages * cfg.c_dec,
                                    cfg.c_dec, rng, trainable);
  d.fuse1_ = Conv3x3::create(ps, prefix + ".fuse1", cfg.c_dec, cfg.c_dec, rng, trainable);
  d.fuse_ln_ = LayerNorm::create(ps, prefix + ".fuse_ln", cfg.c_dec, trainable);
  d.fuse2_ = Conv3x3::create(ps, prefix + ".fuse2", cfg.c_dec, cfg.c_dec, rng, trainable);
  d.up1_ = Conv3x3::create(ps, prefix + ".up1", cfg.c_dec, cfg.c_dec, rng, trainable);
  d.up2_ = Conv3x3::create(ps, prefix + ".up2", cfg.c_dec, cfg.c_dec, rng, trainable);
  d.final_conv_ = Conv3x3::create(ps, prefix + ".final", cfg.c_dec, cfg.c_dec, rng, trainable);
  d.head_shadow_ = Linear::create(ps, prefix + ".head_shadow", cfg.c_dec, 1, rng, trainable,
                                  /*with_bias=*/true, -1.0, /*zero_init=*/true);
  d.head_edge_ = Linear::create(ps, prefix + ".head_edge", cfg.c_dec, 1, rng, trainable,
                                /*with_bias=*/true, -1.0, /*zero_init=*/true);
  return d;
}

Decoder::Out Decoder::forward(const std::vector<Tensor>& stage_feats) const {
  if (stage_feats.size() != stage_mlps_.size())
    throw std::invalid_argument("decoder: expected " + std::to_string(stage_mlps_.size()) +
                                " stage features");
  const int t = stage_feats[0].dim(0), g = stage_feats[0].dim(1);
  const int rows = t * g * g;

  Tensor fused;
  for (std::size_t j = 0; j < stage_feats.size(); ++j) {
    const Tensor& f = stage_feats[j];
    Tensor m = stage_mlps_[j].forward(reshape(f, {rows, f.dim(3)}));
    if (fusion_ == "sum") {
      fused = fused.defined() ? add(fused, m) : m;
    } else {
      fused = fused.defined() ? concat_cols(fused, m) : m;
    }
  }
  if (fusion_ == "concat") fused = concat_proj_.forward(fused);

  Tensor x = reshape(fused, {t, g, g, c_dec_});
  // conv -> norm -> nonlinearity -> conv
  x = fuse1_.forward(x);
  x = reshape(gelu(fuse_ln_.forward(reshape(x, {rows, c_dec_}))), {t, g, g, c_dec_});
  x = fuse2_.forward(x);

  // convolutions before each fixed 2x interpolation
  x = upsample_bilinear(gelu(up1_.forward(x)), 2);  // g -> 2g
  x = upsample_bilinear(gelu(up2_.forward(x)), 2);  // 2g -> 4g = H/4
  x = gelu(final_conv_.forward(x));                 // mask features at H/4

  const int hq = x.dim(1), wq = x.dim(2);
  Tensor feat = reshape(x, {t * hq * wq, c_dec_});
  auto head = [&](const Linear& l) {
    Tensor logits = scale(l.forward(feat), head_gain_);
    logits = upsample_bilinear(reshape(logits, {t, hq, wq, 1}), 4);
    return reshape(logits, {t, hq * 4, wq * 4});
  };
  return {head(head_shadow_), head(head_edge_)};
}

// ---------------- ShadowNet ----------------

ShadowNet::ShadowNet(const ModelConfig& cfg, TemporalMode mode, std::uint64_t seed)
    : cfg_(cfg), mode_(mode) {
  cfg_.validate();
  Rng root(seed);
  const bool train_backbone = !cfg.freeze_backbone;
  {
    Rng rng = root.derive("backbone");
    encoder_ = ToyEncoder::create(params_, "backbone", cfg, rng, train_backbone);
  }
  {
    Rng rng = root.derive("vmm");
    vmm_ = Vmm::create(params_, "vmm", cfg.c_l, cfg.c_m, cfg.c_e, cfg.n_heads, rng);
  }
  for (int j = 0; j < cfg.n_stages; ++j) {
    Rng rng = root.derive("temporal" + std::to_string(j));
    if (mode == TemporalMode::tokenized)
      ttbs_.push_back(Ttb::create(params_, "ttb" + std::to_string(j), cfg.c_b, cfg.c_e, cfg.l_k,
                                  cfg.n_heads, rng, true, cfg.temporal_residual));
    else if (mode == TemporalMode::pixel)
      pixel_blocks_.push_back(PixelTemporal::create(params_, "pixel" + std::to_string(j),
                                                    cfg.c_b, cfg.n_heads, rng, true,
                                                    cfg.pixel_guard));
  }
  for (int j = 0; j < cfg.n_stages; ++j) {
    Rng rng = root.derive("dsb" + std::to_string(j));
    dsbs_.push_back(
        Dsb::create(params_, "dsb" + std::to_string(j), cfg.c_b, cfg.c_e, cfg.n_heads, rng));
  }
  {
    Rng rng = root.derive("decoder");
    decoder_ = Decoder::create(params_, "decoder", cfg, rng);
  }
}

ShadowNet::Forward ShadowNet::forward(const Tensor& clip, const BundleTensors& bundle) const {
  const ContextPair ctx = vmm_.forward(bundle);
  Forward out;
  std::vector<Tensor> stage_outputs;
  Tensor x = encoder_.stem(clip);
  for (int j = 0; j < cfg_.n_stages; ++j) {
    if (mode_ == TemporalMode::tokenized)
      x = ttbs_[static_cast<std::size_t>(j)].forward(x);
    else if (mode_ == TemporalMode::pixel)
      x = pixel_blocks_[static_cast<std::size_t>(j)].forward(x);
    x = encoder_.stage(j, x);
    auto d = dsbs_[static_cast<std::size_t>(j)].forward(x, ctx.e_s, ctx.e_d);
    x = d.features;
    out.aux_probs.push_back(d.aux_prob);
    stage_outputs.push_back(x);
  }
  auto dec = decoder_.forward(stage_outputs);
  out.shadow_logits = dec.shadow_logits;
  out.edge_logits = dec.edge_logits;
  return out;
}

Tensor clip_to_tensor(const std::vector<double>& frames, int t, int h, int w) {
  return Tensor::from_data({t, h, w, 3}, frames);
}

}  // namespace umbra
