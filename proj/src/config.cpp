#include "umbra/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace umbra {

using json = nlohmann::json;

namespace {
template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (optimizer.lr < 0.0 || !std::isfinite(optimizer.lr))
    throw std::invalid_argument("config: lr must be finite and >= 0");
  if (schedule.frames_per_clip < 1)
    throw std::invalid_argument("config: frames_per_clip must be >= 1");
  if (schedule.batch_clips < 1) throw std::invalid_argument("config: batch_clips must be >= 1");
  if (schedule.steps < 0) throw std::invalid_argument("config: steps must be >= 0");
  temporal_mode_from(temporal_mode);  // throws on unknown value
  if (losses.edge_target != "hard" && losses.edge_target != "soft")
    throw std::invalid_argument("config: edge_target must be hard|soft");
  if (eval_aggregation != "per_frame" && eval_aggregation != "per_video")
    throw std::invalid_argument("config: eval_aggregation must be per_frame|per_video");
  if (losses.weights.lambda_sem < 0 || losses.weights.lambda_edge < 0 ||
      losses.weights.lambda_mask < 0)
    throw std::invalid_argument("config: loss weights must be >= 0");
}

json model_config_to_json(const ModelConfig& m) {
  return json{{"image_size", m.image_size},
              {"patch_size", m.patch_size},
              {"n_stages", m.n_stages},
              {"c_b", m.c_b},
              {"c_e", m.c_e},
              {"c_dec", m.c_dec},
              {"l_k", m.l_k},
              {"n_heads", m.n_heads},
              {"freeze_backbone", m.freeze_backbone},
              {"head_gain", m.head_gain},
              {"decoder_fusion", m.decoder_fusion},
              {"temporal_residual", m.temporal_residual},
              {"pixel_guard", m.pixel_guard},
              {"l_s", m.l_s},
              {"l_d", m.l_d},
              {"c_l", m.c_l},
              {"c_m", m.c_m},
              {"m_patches", m.m_patches}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig m;
  get_if(j, "image_size", m.image_size);
  get_if(j, "patch_size", m.patch_size);
  get_if(j, "n_stages", m.n_stages);
  get_if(j, "c_b", m.c_b);
  get_if(j, "c_e", m.c_e);
  get_if(j, "c_dec", m.c_dec);
  get_if(j, "l_k", m.l_k);
  get_if(j, "n_heads", m.n_heads);
  get_if(j, "freeze_backbone", m.freeze_backbone);
  get_if(j, "head_gain", m.head_gain);
  get_if(j, "decoder_fusion", m.decoder_fusion);
  get_if(j, "temporal_residual", m.temporal_residual);
  get_if(j, "pixel_guard", m.pixel_guard);
  get_if(j, "l_s", m.l_s);
  get_if(j, "l_d", m.l_d);
  get_if(j, "c_l", m.c_l);
  get_if(j, "c_m", m.c_m);
  get_if(j, "m_patches", m.m_patches);
  return m;
}

json run_config_to_json(const RunConfig& c) {
  return json{
      {"model", model_config_to_json(c.model)},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"weight_decay", c.optimizer.weight_decay},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps}}},
      {"schedule",
       {{"steps", c.schedule.steps},
        {"batch_clips", c.schedule.batch_clips},
        {"frames_per_clip", c.schedule.frames_per_clip},
        {"clip_stride", c.schedule.clip_stride},
        {"log_every", c.schedule.log_every}}},
      {"losses",
       {{"lambda_sem", c.losses.weights.lambda_sem},
        {"lambda_edge", c.losses.weights.lambda_edge},
        {"lambda_mask", c.losses.weights.lambda_mask},
        {"sem_enabled", c.losses.sem_enabled},
        {"edge_enabled", c.losses.edge_enabled},
        {"mask_enabled", c.losses.mask_enabled},
        {"edge_target", c.losses.edge_target},
        {"binarize_threshold", c.losses.binarize_threshold},
        {"dice_eps", c.losses.dice_eps},
        {"erosion_kernel", c.losses.erosion_kernel}}},
      {"temporal_mode", c.temporal_mode},
      {"seed", c.seed},
      {"paths",
       {{"data_root", c.paths.data_root},
        {"bundle", c.paths.bundle},
        {"out_dir", c.paths.out_dir}}},
      {"eval_aggregation", c.eval_aggregation},
      {"train_split", c.train_split},
      {"hflip_prob", c.hflip_prob}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    get_if(o, "lr", c.optimizer.lr);
    get_if(o, "weight_decay", c.optimizer.weight_decay);
    get_if(o, "beta1", c.optimizer.beta1);
    get_if(o, "beta2", c.optimizer.beta2);
    get_if(o, "eps", c.optimizer.eps);
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    get_if(s, "steps", c.schedule.steps);
    get_if(s, "batch_clips", c.schedule.batch_clips);
    get_if(s, "frames_per_clip", c.schedule.frames_per_clip);
    get_if(s, "clip_stride", c.schedule.clip_stride);
    get_if(s, "log_every", c.schedule.log_every);
  }
  if (j.contains("losses")) {
    const auto& l = j.at("losses");
    get_if(l, "lambda_sem", c.losses.weights.lambda_sem);
    get_if(l, "lambda_edge", c.losses.weights.lambda_edge);
    get_if(l, "lambda_mask", c.losses.weights.lambda_mask);
    get_if(l, "sem_enabled", c.losses.sem_enabled);
    get_if(l, "edge_enabled", c.losses.edge_enabled);
    get_if(l, "mask_enabled", c.losses.mask_enabled);
    get_if(l, "edge_target", c.losses.edge_target);
    get_if(l, "binarize_threshold", c.losses.binarize_threshold);
    get_if(l, "dice_eps", c.losses.dice_eps);
    get_if(l, "erosion_kernel", c.losses.erosion_kernel);
  }
  get_if(j, "temporal_mode", c.temporal_mode);
  get_if(j, "seed", c.seed);
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    get_if(p, "data_root", c.paths.data_root);
    get_if(p, "bundle", c.paths.bundle);
    get_if(p, "out_dir", c.paths.out_dir);
  }
  get_if(j, "eval_aggregation", c.eval_aggregation);
  get_if(j, "train_split", c.train_split);
  get_if(j, "hflip_prob", c.hflip_prob);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j = json::parse(in);
  return run_config_from_json(j);
}

void apply_override(json& j, const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("--set expects key=value, got: " + key_eq_value);
  const std::string key = key_eq_value.substr(0, eq);
  const std::string value = key_eq_value.substr(eq + 1);

  json* node = &j;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (part.empty()) throw std::invalid_argument("--set: empty path segment in " + key);
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
      (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
      break;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
}

}  // namespace umbra
