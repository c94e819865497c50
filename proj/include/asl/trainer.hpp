// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// Two-stage training. Stage 1 trains the audio and audio-visual branches
// end to end (wearer head out of the graph) on the sum of the two mean
// cross entropies. Stage 2 freezes everything except the wearer head's two
// fully-connected layers and trains the wearer-voice classifier.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "asl/dataset.hpp"
#include "asl/net.hpp"

namespace asl {

// One frame, fully prepared for training at the working resolution.
struct TrainSample {
  Tensor features;                  // {P, S, S}
  Image8 frame;                     // RGB at work_w x work_h, masked if asked
  std::vector<Direction> active_dirs;
  std::vector<HeadBox> boxes;       // scaled to the working resolution
  bool wearer_active = false;
};

struct TrainData {
  std::vector<TrainSample> samples;

  static TrainData build(const Dataset& dataset, const Model& model,
                         const std::function<void(int, int)>& progress = {});
};

// Parameter partitions for the two stages.
std::vector<nn::Var> stage1_params(const Model& model);   // all but wearer head
std::vector<nn::Var> wearer_params(const Model& model);   // the wearer head

// One optimizer step on a batch; returns the batch loss. Stage 1 loss is
// H(sphere, gt360) + H(fov, gt_fov); stage 2 loss is H(wearer, gt_w).
// A non-finite loss aborts with diagnostics.
double stage1_step(Model& model, nn::Adam& adam, const TrainData& data,
                   std::span<const int> batch);
double stage2_step(Model& model, nn::Adam& adam, const TrainData& data,
                   std::span<const int> batch);

struct LossLogRow {
  int epoch = 0;
  int stage = 0;
  double loss = 0;
};

struct TrainResult {
  std::vector<LossLogRow> log;
};

// Runs the requested stage(s) ("both" when stage == 0), writing a
// checkpoint after every epoch and a CSV loss log (epoch,stage,loss).
TrainResult train(Model& model, const TrainData& data, int stage,
                  const std::string& checkpoint_path,
                  const std::string& loss_log_path,
                  const std::function<void(const LossLogRow&)>& on_epoch = {});

// Checkpoint plumbing. Weights, both optimizers' state and the RunConfig
// echo are stored; loading restores weights by name and validates shapes.
void save_model_checkpoint(const std::string& path, const Model& model,
                           const nn::Adam* stage1_adam,
                           const nn::Adam* stage2_adam);
void load_weights(const std::string& path, Model* model);
// Builds the model the checkpoint was trained with (from the config echo).
Model load_model(const std::string& path);

}  // namespace asl
