#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "umbra/harness.hpp"

using namespace umbra;
namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// tiny config over a tiny synthetic dataset
RunConfig micro_run(const fs::path& root, int steps) {
  RunConfig cfg;
  cfg.model.image_size = 32;
  cfg.model.patch_size = 4;
  cfg.model.n_stages = 2;
  cfg.model.c_b = 16;
  cfg.model.c_e = 8;
  cfg.model.c_dec = 16;
  cfg.model.l_k = 2;
  cfg.model.n_heads = 2;
  cfg.model.l_s = 3;
  cfg.model.l_d = 2;
  cfg.model.c_l = 6;
  cfg.model.c_m = 6;
  cfg.model.m_patches = 4;
  cfg.schedule.steps = steps;
  cfg.schedule.batch_clips = 2;
  cfg.schedule.frames_per_clip = 3;
  cfg.schedule.log_every = 0;
  cfg.seed = 21;
  cfg.paths.data_root = (root / "data").string();
  cfg.paths.out_dir = (root / "run").string();
  return cfg;
}

std::vector<unsigned char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
}  // namespace

TEST_CASE("steps=0 leaves the checkpoint at initialization") {
  TempDir dir("umbra_h_init");
  synth_shadow_videos(dir.path / "data", 2, 4, 32, 32, 1);
  RunConfig cfg = micro_run(dir.path, 0);
  Trainer t(cfg);
  const ShadowNet fresh(cfg.model, temporal_mode_from(cfg.temporal_mode),
                        Rng(cfg.seed).derive("model").seed());
  const fs::path ckpt = t.run();
  auto loaded = load_checkpoint(ckpt);
  REQUIRE(loaded.net->params().entries().size() == fresh.params().entries().size());
  // float32 round trip of untouched doubles
  for (std::size_t i = 0; i < fresh.params().entries().size(); ++i) {
    const auto& a = fresh.params().entries()[i].tensor.values();
    const auto& b = loaded.net->params().entries()[i].tensor.values();
    for (std::size_t k = 0; k < a.size(); ++k)
      CHECK(static_cast<float>(a[k]) == doctest::Approx(b[k]).epsilon(1e-12));
  }
}

TEST_CASE("lr=0 keeps every parameter bit-identical and the loss constant") {
  TempDir dir("umbra_h_lr0");
  synth_shadow_videos(dir.path / "data", 2, 4, 32, 32, 2);
  RunConfig cfg = micro_run(dir.path, 3);
  cfg.optimizer.lr = 0.0;
  Trainer t(cfg);
  std::vector<std::vector<double>> before;
  for (const auto& e : t.net().params().entries()) before.push_back(e.tensor.values());
  for (int i = 0; i < 3; ++i) t.step();
  for (std::size_t i = 0; i < before.size(); ++i)
    CHECK(t.net().params().entries()[i].tensor.values() == before[i]);

  // with frozen parameters the loss of any fixed batch is reproducible
  RunConfig probe_cfg = cfg;
  probe_cfg.paths.out_dir = (dir.path / "probe").string();
  Trainer p1(probe_cfg), p2(probe_cfg);
  const LossBreakdown l1 = p1.accumulate_gradients();
  const LossBreakdown l2 = p2.accumulate_gradients();
  CHECK(l1.total == l2.total);
}

TEST_CASE("training is deterministic: identical config+seed gives identical checkpoints") {
  TempDir dir("umbra_h_det");
  synth_shadow_videos(dir.path / "data", 2, 5, 32, 32, 3);
  RunConfig cfg = micro_run(dir.path, 4);

  // twice in a row with the identical config
  Trainer a(cfg);
  const fs::path ckpt_a = a.run();
  const fs::path kept = dir.path / "first_checkpoint.bin";
  fs::copy_file(ckpt_a, kept);

  Trainer b(cfg);
  const fs::path ckpt_b = b.run();

  CHECK(slurp(kept) == slurp(ckpt_b));
}

TEST_CASE("frozen backbone checksums survive optimizer steps; adapters change") {
  TempDir dir("umbra_h_frozen");
  synth_shadow_videos(dir.path / "data", 2, 4, 32, 32, 4);
  RunConfig cfg = micro_run(dir.path, 5);
  Trainer t(cfg);
  const std::uint64_t frozen_before = t.net().params().checksum(false, true);
  const std::uint64_t trainable_before = t.net().params().checksum(true, false);
  for (int i = 0; i < 5; ++i) t.step();
  CHECK(t.net().params().checksum(false, true) == frozen_before);
  CHECK(t.net().params().checksum(true, false) != trainable_before);
}

TEST_CASE("a NaN-poisoned bundle aborts with step index and breakdown") {
  TempDir dir("umbra_h_nan");
  synth_shadow_videos(dir.path / "data", 2, 4, 32, 32, 5);
  RunConfig cfg = micro_run(dir.path, 2);
  // write a bundle with a NaN inside
  EmbeddingBundle b = synth_bundle(cfg.model.l_s, cfg.model.l_d, cfg.schedule.frames_per_clip,
                                   cfg.model.m_patches, cfg.model.c_l, cfg.model.c_m, 6);
  b.p_s[0] = std::nan("");
  const fs::path bpath = dir.path / "bad_bundle.bin";
  write_bundle(b, bpath);
  // NaN does not survive the f32 file round trip as a quiet value? It does.
  cfg.paths.bundle = bpath.string();
  Trainer t(cfg);
  CHECK_THROWS_AS(t.step(), NanLossError);
}

TEST_CASE("checkpoint save/load round trip preserves values and metadata") {
  TempDir dir("umbra_h_ckpt");
  synth_shadow_videos(dir.path / "data", 2, 4, 32, 32, 7);
  RunConfig cfg = micro_run(dir.path, 2);
  Trainer t(cfg);
  const fs::path ckpt = t.run();
  auto loaded = load_checkpoint(ckpt);
  CHECK(loaded.net->config().image_size == cfg.model.image_size);
  CHECK(loaded.manifest.at("temporal_mode") == "tokenized");
  CHECK(loaded.manifest.at("extra").at("frames_per_clip") == cfg.schedule.frames_per_clip);
  // reload == retrained values at f32 precision
  for (std::size_t i = 0; i < t.net().params().entries().size(); ++i) {
    const auto& a = t.net().params().entries()[i].tensor.values();
    const auto& b = loaded.net->params().entries()[i].tensor.values();
    for (std::size_t k = 0; k < a.size(); ++k)
      CHECK(static_cast<double>(static_cast<float>(a[k])) == b[k]);
  }
}

TEST_CASE("losses trend downward over a short micro run") {
  TempDir dir("umbra_h_trend");
  synth_shadow_videos(dir.path / "data", 2, 6, 32, 32, 8);
  RunConfig cfg = micro_run(dir.path, 0);
  cfg.schedule.steps = 60;
  Trainer t(cfg);
  std::vector<double> totals;
  for (int i = 0; i < 60; ++i) totals.push_back(t.step().loss.total);
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double first = median_of({totals.begin(), totals.begin() + 20});
  const double last = median_of({totals.end() - 20, totals.end()});
  CHECK(last < first);
}

TEST_CASE("config json round trip and --set overrides") {
  RunConfig cfg;
  cfg.optimizer.lr = 3e-4;
  cfg.temporal_mode = "pixel";
  nlohmann::json j = run_config_to_json(cfg);
  RunConfig back = run_config_from_json(j);
  CHECK(back.optimizer.lr == cfg.optimizer.lr);
  CHECK(back.temporal_mode == "pixel");

  apply_override(j, "optimizer.lr=1e-2");
  apply_override(j, "model.n_stages=3");
  apply_override(j, "temporal_mode=tokenized");
  apply_override(j, "losses.edge_target=soft");
  RunConfig o = run_config_from_json(j);
  CHECK(o.optimizer.lr == 1e-2);
  CHECK(o.model.n_stages == 3);
  CHECK(o.temporal_mode == "tokenized");
  CHECK(o.losses.edge_target == "soft");
  CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), std::invalid_argument);
}

TEST_CASE("evaluation produces a full report with sane ranges") {
  TempDir dir("umbra_h_eval");
  DatasetIndex idx = synth_shadow_videos(dir.path / "data", 2, 5, 32, 32, 9);
  RunConfig cfg = micro_run(dir.path, 2);
  Trainer t(cfg);
  t.run();
  EvalOptions opts;
  opts.frames_per_clip = cfg.schedule.frames_per_clip;
  MetricReport r = evaluate_model(t.net(), bundle_to_tensors(t.bundle()), idx, opts);
  CHECK(r.frame_count == 10);  // every frame of both videos exactly once
  CHECK(r.mae >= 0.0);
  CHECK(r.mae <= 1.0);
  CHECK(r.iou >= 0.0);
  CHECK(r.iou <= 1.0);
  CHECK(r.ber >= 0.0);
  CHECK(r.ber <= 100.0);

  nlohmann::json rep = report_to_json(r, "synthetic");
  CHECK(rep.at("frame_count") == 10);
  CHECK(rep.at("per_frame").size() == 10);

  EvalOptions pv = opts;
  pv.aggregation = "per_video";
  MetricReport r2 = evaluate_model(t.net(), bundle_to_tensors(t.bundle()), idx, pv);
  CHECK(r2.frame_count == 10);
}

TEST_CASE("clip targets: hard vs soft edge supervision") {
  VideoClip clip;
  clip.t = 1;
  clip.h = clip.w = 16;
  BinaryMask gt(16, 16);
  for (int y = 4; y <= 11; ++y)
    for (int x = 4; x <= 11; ++x) gt.at(y, x) = 1;
  clip.masks.push_back(gt);
  clip.frames.assign(16 * 16 * 3, 0.5);

  LossConfig hard;
  LossConfig soft;
  soft.edge_target = "soft";
  const ClipTargets th = build_targets(clip, hard, 1);  // stage grid 16 -> factor 1
  const ClipTargets ts = build_targets(clip, soft, 1);

  const EdgeMask band = edge_mask(gt, 3);
  const SoftMask reweighted = penumbra_reweight(gt, 3);
  for (std::size_t i = 0; i < band.v.size(); ++i) {
    CHECK(th.edge.values()[i] == static_cast<double>(band.v[i]));
    CHECK(ts.edge.values()[i] == (band.v[i] ? reweighted.v[i] : 0.0));
    CHECK(th.mask.values()[i] == static_cast<double>(gt.v[i]));
  }
  // soft band values sit strictly inside (0,1)
  bool any_band = false;
  for (std::size_t i = 0; i < band.v.size(); ++i)
    if (band.v[i]) {
      any_band = true;
      CHECK(ts.edge.values()[i] > 0.0);
      CHECK(ts.edge.values()[i] < 1.0);
    }
  CHECK(any_band);
}

TEST_CASE("preprocess-masks writes soft and edge artifacts") {
  TempDir dir("umbra_h_prep");
  synth_shadow_videos(dir.path / "data", 1, 3, 32, 32, 10);
  preprocess_masks(dir.path / "data", dir.path / "prep", 3);
  const fs::path vdir = dir.path / "prep" / "train" / "video_000";
  REQUIRE(fs::exists(vdir / "frame_000.f32"));
  REQUIRE(fs::exists(vdir / "frame_000.f32.json"));
  REQUIRE(fs::exists(vdir / "frame_000_edge.png"));
  SoftMask soft = read_soft_mask(vdir / "frame_000.f32");
  CHECK(soft.h == 32);
  CHECK(soft.w == 32);
  for (double v : soft.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
