// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// Command-line front end: simulate, features, train, infer, eval, bench,
// render. Flags mirror the run-config keys one to one; --config loads a
// key=value file first and explicit flags override it.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "asl/config.hpp"
#include "asl/io_util.hpp"
#include "asl/pipeline.hpp"
#include "asl/sim.hpp"
#include "asl/trainer.hpp"

namespace {

struct ConfigFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run-config file (key=value)");
    for (const char* key :
         {"feature", "use_box_mask", "channels", "fov_h_deg", "fov_v_deg",
          "work_w", "work_h", "epochs", "batch", "lr", "seed", "nms_radius",
          "nms_threshold"}) {
      cmd->add_option_function<std::string>(
          std::string("--") + key,
          [this, key](const std::string& v) { overrides.emplace_back(key, v); },
          std::string("run-config key ") + key);
    }
  }

  asl::RunConfig resolve() const {
    asl::RunConfig cfg = config_path.empty()
                             ? asl::RunConfig{}
                             : asl::RunConfig::from_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.validate();
    return cfg;
  }
};

void print_progress(const char* what, int done, int total) {
  if (done == total || done % 50 == 0)
    std::fprintf(stderr, "\r%s %d/%d", what, done, total);
  if (done == total) std::fprintf(stderr, "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egocentric multi-channel audio-visual active speaker localization"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string sim_out;
  asl::sim::RandomSceneParams sim_params;
  double sim_snr = 10.0;
  bool sim_no_motion = false;
  sim_cmd->add_option("--out", sim_out, "output dataset directory")->required();
  sim_cmd->add_option("--frames", sim_params.frames, "frame count");
  sim_cmd->add_option("--seed", sim_params.seed, "random seed");
  sim_cmd->add_option("--participants", sim_params.participants,
                      "participants including the wearer");
  sim_cmd->add_option("--snr_db", sim_snr, "SNR in dB (inf for noiseless)");
  sim_cmd->add_option("--max_active", sim_params.max_active,
                      "max concurrent talkers");
  sim_cmd->add_option("--image_w", sim_params.image_w, "frame width");
  sim_cmd->add_option("--image_h", sim_params.image_h, "frame height");
  sim_cmd->add_option("--fov_h", sim_params.fov_h, "horizontal FOV degrees");
  sim_cmd->add_option("--fov_v", sim_params.fov_v, "vertical FOV degrees");
  sim_cmd->add_flag("--static_head", sim_no_motion, "disable head motion");

  // features
  auto* feat_cmd = app.add_subcommand("features", "dump audio feature maps");
  std::string feat_data, feat_out;
  int feat_limit = -1;
  ConfigFlags feat_cfg;
  feat_cmd->add_option("--data", feat_data, "dataset directory")->required();
  feat_cmd->add_option("--out", feat_out, "output directory")->required();
  feat_cmd->add_option("--frames", feat_limit, "limit frames");
  feat_cfg.attach(feat_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "two-stage training");
  std::string train_data, train_ckpt, train_log, train_init;
  int train_stage = 0;
  ConfigFlags train_cfg;
  train_cmd->add_option("--data", train_data, "dataset directory")->required();
  train_cmd->add_option("--ckpt", train_ckpt, "checkpoint output path")
      ->required();
  train_cmd->add_option("--loss_log", train_log, "loss log CSV path");
  train_cmd->add_option("--stage", train_stage, "0 = both, 1 or 2");
  train_cmd->add_option("--init", train_init, "initial checkpoint");
  train_cfg.attach(train_cmd);

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "run the full pipeline");
  std::string infer_data, infer_ckpt, infer_out;
  int infer_limit = -1;
  infer_cmd->add_option("--data", infer_data, "dataset directory")->required();
  infer_cmd->add_option("--ckpt", infer_ckpt, "checkpoint path")->required();
  infer_cmd->add_option("--out", infer_out, "output directory")->required();
  infer_cmd->add_option("--frames", infer_limit, "limit frames");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score inference output");
  std::string eval_data, eval_infer, eval_out;
  ConfigFlags eval_cfg;
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--infer", eval_infer, "inference output directory")
      ->required();
  eval_cmd->add_option("--out", eval_out, "report path (CSV)");
  eval_cfg.attach(eval_cmd);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "throughput benchmark");
  std::string bench_data, bench_ckpt;
  int bench_frames = 100;
  bench_cmd->add_option("--data", bench_data, "dataset directory")->required();
  bench_cmd->add_option("--ckpt", bench_ckpt, "checkpoint path")->required();
  bench_cmd->add_option("--frames", bench_frames, "frames to time");

  // render
  auto* render_cmd = app.add_subcommand("render", "overlay visualizations");
  std::string render_data, render_infer, render_out;
  int render_limit = -1;
  render_cmd->add_option("--data", render_data, "dataset directory")
      ->required();
  render_cmd->add_option("--infer", render_infer, "inference output directory")
      ->required();
  render_cmd->add_option("--out", render_out, "output directory")->required();
  render_cmd->add_option("--frames", render_limit, "limit frames");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      sim_params.snr_db = sim_snr;
      sim_params.head_motion = !sim_no_motion;
      asl::sim::generate_dataset(asl::sim::make_random_scene(sim_params),
                                 sim_out);
      std::cout << "wrote " << sim_params.frames << " frames to " << sim_out
                << "\n";
    } else if (feat_cmd->parsed()) {
      const asl::RunConfig cfg = feat_cfg.resolve();
      asl::dump_features(asl::Dataset::load(feat_data), cfg, feat_out,
                         feat_limit);
      std::cout << "feature maps written to " << feat_out << "\n";
    } else if (train_cmd->parsed()) {
      const asl::RunConfig cfg = train_cfg.resolve();
      asl::Model model = asl::Model::build(cfg);
      if (!train_init.empty()) asl::load_weights(train_init, &model);
      const asl::Dataset dataset = asl::Dataset::load(train_data);
      std::fprintf(stderr, "preparing %zu frames...\n",
                   dataset.labels.size());
      const asl::TrainData data = asl::TrainData::build(
          dataset, model,
          [](int d, int t) { print_progress("prepare", d, t); });
      const std::string log_path =
          train_log.empty() ? train_ckpt + ".loss.csv" : train_log;
      asl::train(model, data, train_stage, train_ckpt, log_path,
                 [](const asl::LossLogRow& row) {
                   std::fprintf(stderr, "stage %d epoch %d: loss %.6f\n",
                                row.stage, row.epoch, row.loss);
                 });
      std::cout << "checkpoint written to " << train_ckpt << "\n";
    } else if (infer_cmd->parsed()) {
      const asl::Model model = asl::load_model(infer_ckpt);
      asl::run_inference(asl::Dataset::load(infer_data), model, infer_out,
                         infer_limit,
                         [](int d, int t) { print_progress("infer", d, t); });
      std::cout << "inference written to " << infer_out << "\n";
    } else if (eval_cmd->parsed()) {
      const asl::RunConfig cfg = eval_cfg.resolve();
      const asl::EvalResult r =
          asl::run_eval(asl::Dataset::load(eval_data), eval_infer, cfg);
      std::cout << r.to_text();
      if (!eval_out.empty()) asl::atomic_write_file(eval_out, r.to_csv());
    } else if (bench_cmd->parsed()) {
      const asl::Model model = asl::load_model(bench_ckpt);
      const asl::BenchResult r =
          asl::run_bench(asl::Dataset::load(bench_data), model, bench_frames);
      std::cout << r.to_text();
    } else if (render_cmd->parsed()) {
      asl::render_overlays(asl::Dataset::load(render_data), render_infer,
                           render_out, render_limit);
      std::cout << "overlays written to " << render_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
