#pragma once

// Training loop, evaluation, ablation drivers, and mask preprocessing.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "umbra/checkpoint.hpp"
#include "umbra/config.hpp"
#include "umbra/data.hpp"
#include "umbra/metrics.hpp"

namespace umbra {

// Decoupled-weight-decay adaptive optimizer over the trainable parameters.
class AdamW {
 public:
  AdamW(ParamStore& params, const OptimizerConfig& opts);

  // Applies the accumulated gradients; returns the L2 norm of the parameter
  // update. Gradients are not cleared.
  double step();
  std::int64_t step_count() const { return step_; }

 private:
  struct Slot {
    std::size_t entry;
    std::vector<double> m, v;
  };
  ParamStore* params_;
  OptimizerConfig opts_;
  std::vector<Slot> slots_;
  std::int64_t step_ = 0;
};

struct NanLossError : std::runtime_error {
  int step;
  LossBreakdown breakdown;
  NanLossError(int step_, const LossBreakdown& b);
};

struct StepStats {
  int step = 0;
  LossBreakdown loss;
  double update_norm = 0.0;
  double wall_ms = 0.0;
};

class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg);

  StepStats step();  // one batch + optimizer update; throws NanLossError on NaN
  int steps_done() const { return steps_done_; }

  // Forward+backward on the next batch without an optimizer update; leaves
  // the gradients in place (used by the loss-ablation zero-gradient check).
  LossBreakdown accumulate_gradients();

  ShadowNet& net() { return *net_; }
  const RunConfig& config() const { return cfg_; }
  const EmbeddingBundle& bundle() const { return bundle_; }
  nlohmann::json checkpoint_extra() const;

  // Runs the configured schedule, writes train_log.jsonl and checkpoint.bin
  // under out_dir; returns the checkpoint path.
  std::filesystem::path run();

 private:
  struct Batch {
    std::vector<VideoClip> clips;
  };
  Batch next_batch();
  LossBreakdown batch_losses(const Batch& batch, Tensor* total_out);

  RunConfig cfg_;
  DatasetIndex index_;
  std::unique_ptr<ClipSampler> sampler_;
  std::unique_ptr<ShadowNet> net_;
  EmbeddingBundle bundle_;
  BundleTensors bundle_tensors_;
  std::unique_ptr<AdamW> opt_;
  Rng aug_rng_;
  int steps_done_ = 0;
};

// Builds the [T,H,W] ground-truth tensors for one clip.
struct ClipTargets {
  Tensor mask;    // binary shadow mask
  Tensor edge;    // hard band mask or soft penumbra values
  Tensor aux;     // penumbra-reweighted, downsampled to the stage grid [T,g,g]
};
ClipTargets build_targets(const VideoClip& clip, const LossConfig& losses, int stage_grid);

BundleTensors bundle_to_tensors(const EmbeddingBundle& b);

struct EvalOptions {
  std::string split = "train";
  int frames_per_clip = 5;
  double threshold = 0.5;
  std::string aggregation = "per_frame";  // or "per_video"
};

MetricReport evaluate_model(const ShadowNet& net, const BundleTensors& bundle,
                            const DatasetIndex& index, const EvalOptions& opts);

// Per-frame probability maps in frame order per video (diagnostics).
struct EvalPrediction {
  std::string video_id;
  int frame_index = 0;
  SoftMask prob;
};
std::vector<EvalPrediction> predict_frames(const ShadowNet& net, const BundleTensors& bundle,
                                           const DatasetIndex& index, const EvalOptions& opts);

nlohmann::json report_to_json(const MetricReport& r, const std::string& dataset);
void report_to_csv(const MetricReport& r, const std::filesystem::path& path);

// Trains/evaluates the three temporal modes on identical data and seed and
// emits a cost/metric report.
nlohmann::json ablate_temporal(const RunConfig& base);

// Runs the three loss rows (mask; mask+edge; all) on identical seeds, with a
// first-step zero-gradient verification for the disabled terms.
nlohmann::json ablate_losses(const RunConfig& base);

// Writes the reweighted soft mask (f32 blob + sidecar) and the edge mask
// (png) for every ground-truth mask in the dataset.
void preprocess_masks(const std::filesystem::path& data_root,
                      const std::filesystem::path& out_dir, int erosion_kernel = 3);

}  // namespace umbra
