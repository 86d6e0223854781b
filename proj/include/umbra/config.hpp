#pragma once

// Run configuration: JSON file + dotted-path --set overrides.

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "umbra/encdec.hpp"
#include "umbra/losses.hpp"

namespace umbra {

struct OptimizerConfig {
  double lr = 5e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ScheduleConfig {
  int steps = 500;
  int batch_clips = 2;      // clips per optimizer step
  int frames_per_clip = 5;  // T
  int clip_stride = 1;
  int log_every = 10;
};

struct LossConfig {
  LossWeights weights;  // lambda_sem=1, lambda_edge=0.5, lambda_mask=1
  bool sem_enabled = true;
  bool edge_enabled = true;
  bool mask_enabled = true;
  std::string edge_target = "hard";  // "hard" band mask | "soft" penumbra values
  double binarize_threshold = 0.5;
  double dice_eps = 1.0;
  int erosion_kernel = 3;
};

struct PathsConfig {
  std::string data_root;
  std::string bundle = "synth";  // "synth" or a bundle file path
  std::string out_dir = "runs/run";
};

struct RunConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  ScheduleConfig schedule;
  LossConfig losses;
  std::string temporal_mode = "tokenized";  // none | pixel | tokenized
  std::uint64_t seed = 7;
  PathsConfig paths;
  std::string eval_aggregation = "per_frame";  // or "per_video"
  std::string train_split = "train";
  double hflip_prob = 0.5;

  void validate() const;
};

nlohmann::json model_config_to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::string& path);

// Applies "a.b.c=value" onto the JSON form; value parsed as JSON when
// possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& key_eq_value);

}  // namespace umbra
