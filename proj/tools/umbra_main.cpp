// umbra: video shadow detection toolkit.
//
// Subcommands: synth-data, train, eval, ablate-temporal, ablate-losses,
// preprocess-masks. Errors exit nonzero with a machine-readable JSON object
// on stderr.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "umbra/harness.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

umbra::RunConfig config_with_overrides(const std::string& config_path,
                                       const std::vector<std::string>& sets) {
  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config: " + config_path);
    j = json::parse(in);
  }
  for (const auto& kv : sets) umbra::apply_override(j, kv);
  umbra::RunConfig cfg = umbra::run_config_from_json(j);
  cfg.validate();
  return cfg;
}

umbra::EmbeddingBundle bundle_from_manifest(const json& manifest) {
  const json& b = manifest.at("extra").at("bundle");
  umbra::EmbeddingBundle bundle;
  bundle.l_s = b.at("l_s");
  bundle.l_d = b.at("l_d");
  bundle.t = b.at("t");
  bundle.m = b.at("m");
  bundle.c_l = b.at("c_l");
  bundle.c_m = b.at("c_m");
  bundle.p_s = b.at("p_s").get<std::vector<double>>();
  bundle.p_d = b.at("p_d").get<std::vector<double>>();
  bundle.p_x = b.at("p_x").get<std::vector<double>>();
  return bundle;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"umbra - video shadow detection toolkit"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, data_root, out_path, csv_path, split = "train";
  std::string bundle_path, aggregation;
  std::vector<std::string> sets;
  double threshold = -1.0;
  int kernel = 3;
  std::uint64_t seed = 7;
  int n_videos = 4, frames = 8, size = 64;
  std::string synth_split = "train";

  auto* train = app.add_subcommand("train", "train a model from a run config");
  train->add_option("--config", config_path, "run config JSON");
  train->add_option("--set", sets, "override config fields, e.g. --set optimizer.lr=1e-4");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  eval->add_option("--data", data_root, "dataset root")->required();
  eval->add_option("--split", split, "dataset split (default train)");
  eval->add_option("--out", out_path, "report JSON path");
  eval->add_option("--csv", csv_path, "optional per-frame CSV");
  eval->add_option("--threshold", threshold, "binarization threshold (default: from ckpt)");
  eval->add_option("--aggregation", aggregation, "per_frame | per_video");
  eval->add_option("--bundle", bundle_path, "embedding bundle file (default: from ckpt)");

  auto* abl_t = app.add_subcommand("ablate-temporal", "train/evaluate none|pixel|tokenized");
  abl_t->add_option("--config", config_path, "run config JSON");
  abl_t->add_option("--set", sets, "config overrides");

  auto* abl_l = app.add_subcommand("ablate-losses", "run the three loss configurations");
  abl_l->add_option("--config", config_path, "run config JSON");
  abl_l->add_option("--set", sets, "config overrides");

  auto* prep = app.add_subcommand("preprocess-masks", "write reweighted + edge masks");
  prep->add_option("--data", data_root, "dataset root")->required();
  prep->add_option("--out", out_path, "output directory")->required();
  prep->add_option("--kernel", kernel, "erosion kernel (odd, default 3)");

  auto* synth = app.add_subcommand("synth-data", "generate a synthetic shadow-video dataset");
  synth->add_option("--out", data_root, "output dataset root")->required();
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--videos", n_videos, "number of videos (default 4)");
  synth->add_option("--frames", frames, "frames per video (default 8)");
  synth->add_option("--size", size, "square frame size (default 64)");
  synth->add_option("--split", synth_split, "split directory name (default train)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      umbra::RunConfig cfg = config_with_overrides(config_path, sets);
      umbra::Trainer trainer(cfg);
      const fs::path ckpt = trainer.run();
      std::cout << "checkpoint: " << ckpt.string() << "\n";
    } else if (eval->parsed()) {
      auto loaded = umbra::load_checkpoint(ckpt_path);
      umbra::EmbeddingBundle bundle = bundle_path.empty()
                                          ? bundle_from_manifest(loaded.manifest)
                                          : umbra::read_bundle(bundle_path);
      umbra::EvalOptions opts;
      opts.split = split;
      opts.frames_per_clip = loaded.manifest.at("extra").value("frames_per_clip", 5);
      opts.threshold = threshold >= 0.0
                           ? threshold
                           : loaded.manifest.at("extra").value("binarize_threshold", 0.5);
      if (!aggregation.empty()) opts.aggregation = aggregation;
      const umbra::DatasetIndex index = umbra::scan_dataset(data_root);
      const umbra::MetricReport report = umbra::evaluate_model(
          *loaded.net, umbra::bundle_to_tensors(bundle), index, opts);
      const json out = umbra::report_to_json(report, data_root);
      if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << out.dump(2) << "\n";
      }
      if (!csv_path.empty()) umbra::report_to_csv(report, csv_path);
      json summary = out;
      summary.erase("per_frame");
      std::cout << summary.dump(2) << "\n";
    } else if (abl_t->parsed()) {
      umbra::RunConfig cfg = config_with_overrides(config_path, sets);
      const json report = umbra::ablate_temporal(cfg);
      std::cout << report.at("reference_cost").dump(2) << "\n";
      std::cout << "report: " << (fs::path(cfg.paths.out_dir) / "ablate_temporal.json").string()
                << "\n";
    } else if (abl_l->parsed()) {
      umbra::RunConfig cfg = config_with_overrides(config_path, sets);
      umbra::ablate_losses(cfg);
      std::cout << "report: " << (fs::path(cfg.paths.out_dir) / "ablate_losses.json").string()
                << "\n";
    } else if (prep->parsed()) {
      umbra::preprocess_masks(data_root, out_path, kernel);
      std::cout << "wrote mask artifacts under " << out_path << "\n";
    } else if (synth->parsed()) {
      umbra::synth_shadow_videos(data_root, n_videos, frames, size, size, seed, synth_split);
      std::cout << "wrote " << n_videos << " videos x " << frames << " frames under "
                << data_root << "\n";
    }
  } catch (const umbra::NanLossError& e) {
    std::cerr << json{{"error", "nan_loss"},
                      {"step", e.step},
                      {"sem", e.breakdown.sem},
                      {"edge", e.breakdown.edge},
                      {"mask", e.breakdown.mask}}
                     .dump()
              << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
