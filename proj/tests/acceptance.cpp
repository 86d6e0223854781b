// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run through ctest or directly; takes a few minutes end to end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <vector>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "umbra/dsb.hpp"
#include "umbra/harness.hpp"
#include "umbra/image_io.hpp"
#include "umbra/ttb.hpp"
#include "umbra/vmm.hpp"

using namespace umbra;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(const std::string& name, const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), secs,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

BinaryMask mask_from_bits(int bits, int h, int w) {
  BinaryMask m(h, w);
  for (int i = 0; i < h * w; ++i) m.v[static_cast<std::size_t>(i)] = (bits >> i) & 1;
  return m;
}

SoftMask to_soft(const BinaryMask& m) {
  SoftMask s(m.h, m.w);
  for (std::size_t i = 0; i < m.v.size(); ++i) s.v[i] = m.v[i];
  return s;
}

BinaryMask random_mask(Rng& rng, int h, int w, double p) {
  BinaryMask m(h, w);
  for (auto& v : m.v) v = rng.bernoulli(p) ? 1 : 0;
  return m;
}

Tensor random_leaf(Rng& rng, const Shape& s) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(s)));
  for (auto& v : d) v = rng.normal();
  return Tensor::leaf(s, std::move(d));
}

struct Fixture {
  fs::path root;
  fs::path data;
  Fixture() {
    root = fs::temp_directory_path() / "umbra_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    data = root / "data";
    synth_shadow_videos(data, 4, 8, 64, 64, 1234);
  }
};

RunConfig paper_defaults(const Fixture& fx, const std::string& out) {
  RunConfig cfg;  // AdamW lr 5e-5, wd 0.01, batch 2 clips x 5 frames, lambdas (1, 0.5, 1)
  cfg.paths.data_root = fx.data.string();
  cfg.paths.out_dir = (fx.root / out).string();
  cfg.schedule.log_every = 0;
  return cfg;
}

// ---- criteria ----

bool metric_oracle_equivalence(std::string& detail) {
  double worst = 0.0;
  for (int pb = 0; pb < 512; ++pb) {
    const BinaryMask pred = mask_from_bits(pb, 3, 3);
    const SoftMask pred_soft = to_soft(pred);
    for (int gb = 0; gb < 512; ++gb) {
      const BinaryMask gt = mask_from_bits(gb, 3, 3);
      const auto check = [&](double got, double want) {
        worst = std::max(worst, std::abs(got - want));
      };
      check(mae(pred_soft, gt), test::mae_oracle(pred_soft.v, gt.v));
      check(f_beta(pred, gt, 0.3), test::f_beta_oracle(pred.v, gt.v, 0.3));
      check(iou(pred, gt), test::iou_oracle(pred.v, gt.v));
      const BerTriple got = ber_family(confusion(pred, gt));
      const test::BerOracle want = test::ber_oracle(pred.v, gt.v);
      if (got.s_ber.has_value() != want.s_defined ||
          got.n_ber.has_value() != want.n_defined) {
        detail = "presence mismatch";
        return false;
      }
      if (got.s_ber) check(*got.s_ber, want.s_ber);
      if (got.n_ber) check(*got.n_ber, want.n_ber);
      if (got.ber) check(*got.ber, want.ber);
    }
  }
  detail = "max |diff| over 512x512 pairs: " + std::to_string(worst);
  return worst < 1e-12;
}

bool mask_preprocessing_invariants(std::string& detail) {
  Rng rng(2024);
  // soft-mask partition + edge/erosion partition on 200 random masks <= 32x32
  for (int trial = 0; trial < 200; ++trial) {
    const int h = rng.uniform_int(1, 32), w = rng.uniform_int(1, 32);
    const BinaryMask m = random_mask(rng, h, w, rng.uniform(0.15, 0.9));
    const BinaryMask core = erode(m, 3);
    const SoftMask soft = penumbra_reweight(m, 3);
    const EdgeMask band = edge_mask(m, 3);
    for (std::size_t i = 0; i < m.v.size(); ++i) {
      if (core.v[i]) {
        if (soft.v[i] != 1.0) { detail = "interior not 1"; return false; }
      } else if (m.v[i]) {
        if (!(soft.v[i] > 0.0 && soft.v[i] < 1.0)) { detail = "band outside (0,1)"; return false; }
      } else {
        if (soft.v[i] != 0.0) { detail = "background not 0"; return false; }
      }
      if ((band.v[i] | core.v[i]) != m.v[i] || (band.v[i] & core.v[i]) != 0) {
        detail = "edge/erosion does not partition the mask";
        return false;
      }
    }
  }
  // exact distance transform vs brute force on every mask up to 8x8
  for (int bits = 0; bits < 512; ++bits) {
    const BinaryMask m = mask_from_bits(bits, 3, 3);
    if (distance_transform(m) != test::brute_force_edt(m.v, 3, 3)) {
      detail = "EDT mismatch on 3x3 bits=" + std::to_string(bits);
      return false;
    }
  }
  for (int trial = 0; trial < 300; ++trial) {
    const int h = rng.uniform_int(1, 8), w = rng.uniform_int(1, 8);
    const BinaryMask m = random_mask(rng, h, w, rng.uniform(0.1, 0.95));
    if (distance_transform(m) != test::brute_force_edt(m.v, h, w)) {
      detail = "EDT mismatch on random mask";
      return false;
    }
  }
  return true;
}

bool gradient_suite(std::string& detail) {
  using test::grad_check;
  Rng rng(31);
  double worst_mod = 0.0;

  {  // losses
    Tensor z = random_leaf(rng, {4, 4});
    Tensor t = random_leaf(rng, {4, 4});
    for (auto& v : t.values()) v = 0.5 + 0.45 * std::tanh(v);
    worst_mod = std::max(worst_mod,
                         grad_check([&] { return bce_with_logits_mean(z, t); }, {z, t}).max_rel_err);
    worst_mod = std::max(
        worst_mod, grad_check([&] { return dice_loss(sigmoid(z), t); }, {z, t}).max_rel_err);
    worst_mod =
        std::max(worst_mod, grad_check([&] { return mse_mean(z, t); }, {z, t}).max_rel_err);
  }
  {  // cross attention + mlp
    ParamStore ps;
    auto attn = CrossAttention::create(ps, "a", 8, 2, rng, true);
    auto mlp = Mlp::create(ps, "m", 8, 4, 8, rng, true);
    Tensor q = random_leaf(rng, {3, 8});
    Tensor kv = random_leaf(rng, {4, 8});
    Tensor w = random_leaf(rng, {3, 8});
    std::vector<Tensor> leaves = {q, kv};
    for (const auto& e : ps.entries()) leaves.push_back(e.tensor);
    worst_mod = std::max(
        worst_mod,
        grad_check([&] { return mean_all(mul(attn.forward(q, kv), w)); }, leaves, 1e-5, 16, 1)
            .max_rel_err);
    worst_mod = std::max(
        worst_mod,
        grad_check([&] { return mean_all(mul(mlp.forward(q), w)); }, leaves, 1e-5, 16, 2)
            .max_rel_err);
  }
  {  // vmm forward
    ParamStore ps;
    auto vmm = Vmm::create(ps, "vmm", 4, 6, 8, 2, rng);
    BundleTensors b = {random_leaf(rng, {2, 4}), random_leaf(rng, {2, 4}),
                       random_leaf(rng, {3, 6})};
    Tensor ws = random_leaf(rng, {2, 8});
    Tensor wd = random_leaf(rng, {2, 8});
    std::vector<Tensor> leaves = {b.p_s, b.p_d, b.p_x};
    for (const auto& e : ps.entries()) leaves.push_back(e.tensor);
    worst_mod = std::max(worst_mod, grad_check(
                                        [&] {
                                          auto ctx = vmm.forward(b);
                                          return add(mean_all(mul(ctx.e_s, ws)),
                                                     mean_all(mul(ctx.e_d, wd)));
                                        },
                                        leaves, 1e-5, 8, 3)
                                        .max_rel_err);
  }
  {  // dsb forward
    ParamStore ps;
    auto dsb = Dsb::create(ps, "dsb", 8, 8, 2, rng);
    ps.get("dsb.alpha").values()[0] = 0.4;
    ps.get("dsb.beta").values()[0] = -0.3;
    Tensor x = random_leaf(rng, {2, 2, 2, 8});
    Tensor e_s = random_leaf(rng, {2, 8});
    Tensor e_d = random_leaf(rng, {2, 8});
    Tensor wf = random_leaf(rng, {2, 2, 2, 8});
    Tensor wa = random_leaf(rng, {2, 2, 2});
    std::vector<Tensor> leaves = {x, e_s, e_d};
    for (const auto& e : ps.entries()) leaves.push_back(e.tensor);
    worst_mod = std::max(worst_mod, grad_check(
                                        [&] {
                                          auto out = dsb.forward(x, e_s, e_d);
                                          return add(mean_all(mul(out.features, wf)),
                                                     mean_all(mul(out.aux_prob, wa)));
                                        },
                                        leaves, 1e-5, 8, 4)
                                        .max_rel_err);
  }
  {  // ttb forward (tokens included)
    ParamStore ps;
    auto ttb = Ttb::create(ps, "ttb", 8, 8, 2, 2, rng);
    Tensor x = random_leaf(rng, {2, 2, 2, 8});
    Tensor w = random_leaf(rng, {2, 2, 2, 8});
    std::vector<Tensor> leaves = {x};
    for (const auto& e : ps.entries()) leaves.push_back(e.tensor);
    worst_mod = std::max(
        worst_mod,
        grad_check([&] { return mean_all(mul(ttb.forward(x), w)); }, leaves, 1e-5, 8, 5)
            .max_rel_err);
  }
  if (worst_mod >= 1e-4) {
    detail = "module-level max rel err " + std::to_string(worst_mod);
    return false;
  }

  // full model on a micro config, 20-parameter sample
  ModelConfig cfg;
  cfg.image_size = 32;
  cfg.patch_size = 4;
  cfg.n_stages = 2;
  cfg.c_b = 8;
  cfg.c_e = 8;
  cfg.c_dec = 8;
  cfg.l_k = 2;
  cfg.n_heads = 2;
  cfg.l_s = 2;
  cfg.l_d = 2;
  cfg.c_l = 4;
  cfg.c_m = 4;
  cfg.m_patches = 4;
  ShadowNet net(cfg, TemporalMode::tokenized, 77);
  // zero-init heads would zero the trunk gradients; give them values so the
  // sampled parameters all sit on live paths
  for (auto& v : net.params().get("decoder.head_shadow.weight").values())
    v = 0.3 * rng.normal();
  for (auto& v : net.params().get("decoder.head_edge.weight").values())
    v = 0.3 * rng.normal();
  std::vector<double> cd(2 * 32 * 32 * 3);
  for (auto& v : cd) v = rng.uniform();
  Tensor clip = Tensor::from_data({2, 32, 32, 3}, cd);
  BundleTensors bundle = {random_leaf(rng, {2, 4}), random_leaf(rng, {2, 4}),
                          random_leaf(rng, {8, 4})};
  std::vector<double> wd(2 * 32 * 32);
  for (auto& v : wd) v = rng.normal();
  Tensor w = Tensor::from_data({2, 32, 32}, wd);

  std::vector<Tensor> trainable;
  for (const auto& e : net.params().entries())
    if (e.trainable) trainable.push_back(e.tensor);
  // deterministic 20-tensor sample, one element each
  Rng pick(99);
  std::vector<Tensor> sampled;
  for (int i = 0; i < 20; ++i)
    sampled.push_back(trainable[pick.u64() % trainable.size()]);
  auto r = test::grad_check(
      [&] {
        auto out = net.forward(clip, bundle);
        return add(mean_all(mul(out.shadow_logits, w)),
                   add(mean_all(out.aux_probs[0]), mean_all(out.edge_logits)));
      },
      sampled, 1e-5, 1, 6);
  detail = "module max rel err " + std::to_string(worst_mod) + ", full-model max rel err " +
           std::to_string(r.max_rel_err) + " over " + std::to_string(r.checked) + " params";
  return r.max_rel_err < 1e-3;
}

bool structural_identities(const Fixture& fx, std::string& detail) {
  // DSB at alpha = beta = 0 is the identity on features
  Rng rng(41);
  ParamStore ps;
  auto dsb = Dsb::create(ps, "dsb", 8, 8, 2, rng);
  Tensor x = random_leaf(rng, {2, 3, 3, 8});
  auto out = dsb.forward(x, random_leaf(rng, {2, 8}), random_leaf(rng, {3, 8}));
  if (out.features.values() != x.values()) {
    detail = "DSB(alpha=beta=0) changed the features";
    return false;
  }

  // total loss with the stated weights is the exact weighted sum
  const LossWeights w{1.0, 0.5, 1.0};
  Rng lr_rng(42);
  for (int i = 0; i < 100; ++i) {
    const double s = lr_rng.uniform(0, 3), e = lr_rng.uniform(0, 3), m = lr_rng.uniform(0, 3);
    if (total_loss(s, e, m, w).total != 1.0 * s + 0.5 * e + 1.0 * m) {
      detail = "weighted sum mismatch";
      return false;
    }
  }

  // frozen backbone checksums unchanged after 50 optimizer steps
  RunConfig cfg = paper_defaults(fx, "structural");
  cfg.schedule.steps = 50;
  Trainer t(cfg);
  const std::uint64_t frozen_before = t.net().params().checksum(false, true);
  const std::uint64_t trainable_before = t.net().params().checksum(true, false);
  for (int i = 0; i < 50; ++i) t.step();
  if (t.net().params().checksum(false, true) != frozen_before) {
    detail = "frozen parameters drifted";
    return false;
  }
  if (t.net().params().checksum(true, false) == trainable_before) {
    detail = "trainable parameters never moved";
    return false;
  }
  return true;
}

std::unique_ptr<Trainer> g_overfit;  // shared by criteria 5 and 6

bool overfit_smoke(const Fixture& fx, std::string& detail) {
  RunConfig cfg = paper_defaults(fx, "overfit");
  cfg.schedule.steps = 500;
  g_overfit = std::make_unique<Trainer>(cfg);
  g_overfit->run();

  const DatasetIndex index = scan_dataset(fx.data);
  EvalOptions opts;
  opts.frames_per_clip = cfg.schedule.frames_per_clip;
  const MetricReport r =
      evaluate_model(g_overfit->net(), bundle_to_tensors(g_overfit->bundle()), index, opts);
  detail = "IoU " + std::to_string(r.iou) + " (need >= 0.90), BER " + std::to_string(r.ber) +
           " (need <= 10)";
  return r.iou >= 0.90 && r.ber <= 10.0;
}

bool dark_distractor(const Fixture& fx, std::string& detail) {
  if (!g_overfit) {
    detail = "overfit model unavailable";
    return false;
  }
  const DatasetIndex index = scan_dataset(fx.data);
  EvalOptions opts;
  opts.frames_per_clip = 5;
  const auto preds =
      predict_frames(g_overfit->net(), bundle_to_tensors(g_overfit->bundle()), index, opts);
  const auto& videos = index.videos("train");
  long long fp = 0, total = 0;
  for (const auto& p : preds) {
    int vi = 0;
    for (std::size_t i = 0; i < videos.size(); ++i)
      if (videos[i].video_id == p.video_id) vi = static_cast<int>(i);
    const ClipRef ref{"train", p.video_id, vi, p.frame_index, 1};
    const BinaryMask distractor = read_mask(distractor_mask_path(index, "train", ref, 0));
    const BinaryMask pred = binarize(p.prob, 0.5);
    for (std::size_t i = 0; i < distractor.v.size(); ++i)
      if (distractor.v[i]) {
        ++total;
        fp += pred.v[i] ? 1 : 0;
      }
  }
  const double rate = total > 0 ? static_cast<double>(fp) / static_cast<double>(total) : 1.0;
  detail = "false-positive rate inside the distractor: " + std::to_string(rate) +
           " (need < 0.20)";
  return rate < 0.20;
}

bool temporal_ablation(const Fixture& fx, std::string& detail) {
  RunConfig cfg = paper_defaults(fx, "ablate_temporal");
  cfg.schedule.steps = 40;
  const nlohmann::json report = ablate_temporal(cfg);

  if (report.at("modes").size() != 3) {
    detail = "expected three modes";
    return false;
  }
  std::int64_t tokenized_params = 0, pixel_params = 0;
  for (const auto& m : report.at("modes")) {
    if (!fs::exists(m.at("checkpoint").get<std::string>())) {
      detail = "missing checkpoint for " + m.at("mode").get<std::string>();
      return false;
    }
    if (m.at("metrics").at("frame_count").get<int>() != 32) {
      detail = "mode did not evaluate all frames";
      return false;
    }
    if (m.at("mode") == "tokenized") tokenized_params = m.at("trainable_params").get<std::int64_t>();
    if (m.at("mode") == "pixel") pixel_params = m.at("trainable_params").get<std::int64_t>();
  }
  const double ratio = report.at("reference_cost").at("pixel_over_tokenized").get<double>();
  detail = "cost ratio " + std::to_string(ratio) + " (need >= 100), tokenized params " +
           std::to_string(tokenized_params) + " <= pixel params " + std::to_string(pixel_params);
  return ratio >= 100.0 && tokenized_params <= pixel_params;
}

bool loss_ablation(const Fixture& fx, std::string& detail) {
  RunConfig cfg = paper_defaults(fx, "ablate_losses");
  cfg.schedule.steps = 30;
  const nlohmann::json report = ablate_losses(cfg);
  if (report.at("rows").size() != 3) {
    detail = "expected three rows";
    return false;
  }
  for (const auto& row : report.at("rows")) {
    const auto& audit = row.at("grad_audit");
    const bool sem_on = row.at("sem_enabled").get<bool>();
    const bool edge_on = row.at("edge_enabled").get<bool>();
    if (!audit.at("disabled_equals_zero_weight").get<bool>()) {
      detail = "disabled != zero-weight for row " + row.at("losses").get<std::string>();
      return false;
    }
    if (!audit.at("disabled_heads_decay_only").get<bool>()) {
      detail = "a disabled loss's head left the zero-gradient trajectory";
      return false;
    }
    if (!edge_on && !audit.at("edge_head_grad_zero").get<bool>()) {
      detail = "edge loss disabled but the edge head received gradient";
      return false;
    }
    if (!sem_on && !audit.at("aux_head_grad_zero").get<bool>()) {
      detail = "sem loss disabled but an aux head received gradient";
      return false;
    }
    if (edge_on && audit.at("edge_head_grad_norm").get<double>() == 0.0) {
      detail = "edge loss enabled but the edge head gradient is zero";
      return false;
    }
  }
  return true;
}

bool determinism(const Fixture& fx, std::string& detail) {
  RunConfig cfg = paper_defaults(fx, "determinism");
  cfg.schedule.steps = 15;

  Trainer a(cfg);
  const fs::path first = a.run();
  const fs::path kept = fx.root / "determinism_first.bin";
  fs::copy_file(first, kept, fs::copy_options::overwrite_existing);

  Trainer b(cfg);
  const fs::path second = b.run();

  std::ifstream fa(kept, std::ios::binary), fb(second, std::ios::binary);
  std::vector<char> ba{std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>()};
  std::vector<char> bb{std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>()};
  detail = std::to_string(ba.size()) + " bytes";
  return !ba.empty() && ba == bb;
}

}  // namespace

int main() {
  std::printf("umbra acceptance suite\n");
  const Fixture fx;

  criterion("metric oracle equivalence (exhaustive 3x3 pairs, 1e-12)",
            [&](std::string& d) { return metric_oracle_equivalence(d); });
  criterion("mask preprocessing invariants (partitions + exact EDT)",
            [&](std::string& d) { return mask_preprocessing_invariants(d); });
  criterion("gradient suite (losses, attention, mlp, vmm, dsb, ttb, full model)",
            [&](std::string& d) { return gradient_suite(d); });
  criterion("structural identities (dsb zero-fusion, weighted sum, frozen backbone)",
            [&](std::string& d) { return structural_identities(fx, d); });
  criterion("overfit smoke test (4 videos, T=8, 64x64, <=500 steps)",
            [&](std::string& d) { return overfit_smoke(fx, d); });
  criterion("dark-distractor discrimination (<20% false positives)",
            [&](std::string& d) { return dark_distractor(fx, d); });
  criterion("temporal ablation structure (none/pixel/tokenized, cost ratio)",
            [&](std::string& d) { return temporal_ablation(fx, d); });
  criterion("loss ablation structure (mask; mask+edge; all)",
            [&](std::string& d) { return loss_ablation(fx, d); });
  criterion("determinism (bitwise-identical checkpoints)",
            [&](std::string& d) { return determinism(fx, d); });

  g_overfit.reset();
  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
