// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// On-disk dataset layout:
//   <dir>/audio.wav          one multichannel WAV at 48 kHz
//   <dir>/frames/frame_%06d.ppm   P6 frames at the video rate
//   <dir>/labels.jsonl       one record per frame, frame indices strictly
//                            increasing: {"frame", "boxes":[{x,y,w,h,
//                            person_id,active}], "sources":[{az,el,active}],
//                            "wearer_active"}
//   <dir>/meta.json          sample_rate, fps, channels, image size, FOV

#pragma once

#include <string>
#include <vector>

#include "asl/features.hpp"
#include "asl/sphere.hpp"
#include "asl/wav.hpp"

namespace asl {

struct FrameSourceLabel {
  double az = 0, el = 0;
  bool active = false;
};

struct FrameLabel {
  int frame = 0;
  std::vector<HeadBox> boxes;
  std::vector<FrameSourceLabel> sources;
  bool wearer_active = false;

  std::vector<Direction> active_directions() const {
    std::vector<Direction> out;
    for (const auto& s : sources)
      if (s.active) out.push_back({s.az, s.el});
    return out;
  }
};

struct DatasetMeta {
  int sample_rate = 48000;
  int fps = 20;
  int channels = 4;
  int image_w = 640;
  int image_h = 360;
  double fov_h = 80.0;
  double fov_v = 45.0;
  int frames = 0;

  CameraModel camera() const { return {fov_h, fov_v, image_w, image_h}; }
  int samples_per_frame() const { return sample_rate / fps; }
};

std::vector<FrameLabel> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<FrameLabel>& labels);

DatasetMeta read_meta(const std::string& path);
void write_meta(const std::string& path, const DatasetMeta& meta);

std::string frame_filename(int index);

// A loaded dataset with the audio kept in memory; frames load on demand.
struct Dataset {
  std::string dir;
  DatasetMeta meta;
  WavData audio;
  std::vector<FrameLabel> labels;

  static Dataset load(const std::string& dir);

  std::string frame_path(int index) const;
  Image8 frame(int index) const;

  // Audio window for one frame, zero-padded at the clip start. The window
  // spans [n - back, n + max_lag] where n is the frame's last sample.
  AudioSegment segment(int frame, const FeatureConfig& cfg) const;
};

}  // namespace asl
