// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "asl/dataset.hpp"
#include "asl/metrics.hpp"
#include "asl/net.hpp"

namespace asl {

void write_grid_csv(const std::string& path, const Tensor& grid);  // {H,W}
Tensor read_grid_csv(const std::string& path);

// Per frame: sphere/sphere_%06d.csv with the fused 180x90 grid,
// fov/fovscore_%06d.csv with the image-space score map at the working
// resolution, fov/fov_%06d.pgm as an 8-bit view, and wearer.csv holding
// one "frame,probability" row per frame.
void run_inference(const Dataset& dataset, const Model& model,
                   const std::string& out_dir, int limit = -1,
                   const std::function<void(int, int)>& progress = {});

struct EvalResult {
  double asl_ap = 0;           // in-FOV AP over ground-truth head boxes
  AngularErrorReport angular;  // spherical E1/E2
  double wearer_ap = 0;
  int frames = 0;
  int boxes_scored = 0;

  std::string to_text() const;
  std::string to_csv() const;
};

EvalResult run_eval(const Dataset& dataset, const std::string& infer_dir,
                    const RunConfig& cfg);

struct BenchResult {
  int frames = 0;
  double fps_end_to_end = 0;
  double fps_features_only = 0;
  double ms_features = 0, ms_audio = 0, ms_av = 0, ms_fuse = 0;  // means
  double ms_features_med = 0, ms_audio_med = 0, ms_av_med = 0,
         ms_fuse_med = 0;

  std::string to_text() const;
};

// Times each pipeline stage per frame; the warm-up pass is excluded.
BenchResult run_bench(const Dataset& dataset, const Model& model,
                      int n_frames);

// Feature-map dumps as PGM, one per frame.
void dump_features(const Dataset& dataset, const RunConfig& cfg,
                   const std::string& out_dir, int limit = -1);

// Frames with the predicted heat in the red channel plus box outlines, and
// the fused sphere map against the ground-truth directions.
void render_overlays(const Dataset& dataset, const std::string& infer_dir,
                     const std::string& out_dir, int limit = -1);

}  // namespace asl
