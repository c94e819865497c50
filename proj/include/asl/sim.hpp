// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// Synthetic egocentric scene generator. Device frame: +x right, +y up,
// +z forward (camera axis); azimuth = atan2(x, z), elevation = asin(y/r).
// Sources are fixed-distance talkers around the wearer emitting
// amplitude-modulated band-limited noise; the wearer's own voice is a
// near-field source at the mouth. Microphones pick up each source with the
// geometric propagation delay (linear-interpolation fractional delay) and
// 1/distance gain. Head rotation (yaw/pitch random walk) moves the whole
// device frame under the fixed world.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "asl/common.hpp"
#include "asl/dataset.hpp"
#include "asl/image.hpp"
#include "asl/sphere.hpp"
#include "asl/wav.hpp"

namespace asl::sim {

using Vec3 = std::array<double, 3>;

struct MicArrayGeometry {
  std::vector<Vec3> positions;  // device frame, meters
  double speed_of_sound = 343.0;

  // Four microphones on a glasses frame: two at the temples near the
  // lenses, two further back and lower on the arms.
  static MicArrayGeometry glasses_default();
  void validate() const;
};

struct Interval {
  double begin = 0, end = 0;
};
using Schedule = std::vector<Interval>;  // sorted, disjoint

bool schedule_active(const Schedule& s, double t);

struct SourceSpec {
  double start_az = 0;          // world frame, degrees
  double start_el = 0;
  double az_drift = 0;          // degrees per second
  double distance = 1.5;        // meters from the head center
  double amplitude = 0.25;      // dry signal peak scale
  Schedule schedule;
};

struct WearerSpec {
  Vec3 mouth{0.0, -0.08, -0.05};  // device frame, meters
  double amplitude = 0.25;
  Schedule schedule;
};

struct HeadMotion {
  bool enabled = true;
  double yaw_step = 0.8;    // per-frame random-walk std, degrees
  double pitch_step = 0.25;
  double max_yaw = 50.0;    // reflecting bounds
  double max_pitch = 12.0;
};

struct SceneSpec {
  std::vector<SourceSpec> sources;
  WearerSpec wearer;
  MicArrayGeometry geometry = MicArrayGeometry::glasses_default();
  CameraModel camera;
  HeadMotion head_motion;
  double snr_db = 10.0;  // infinity disables noise
  int frames = 100;
  int fps = 20;
  int sample_rate = 48000;
  uint64_t seed = 1;

  int samples_per_frame() const { return sample_rate / fps; }
  int64_t total_samples() const {
    return int64_t(frames) * samples_per_frame();
  }
  double duration() const { return double(frames) / fps; }
  void validate() const;
};

// Parameters for the randomized conversation scenes used in training and
// evaluation.
struct RandomSceneParams {
  int participants = 5;  // includes the wearer
  int frames = 200;
  uint64_t seed = 1;
  double snr_db = 10.0;
  int max_active = 3;  // concurrent non-wearer talkers
  bool head_motion = true;
  int image_w = 640;
  int image_h = 360;
  double fov_h = 80.0;
  double fov_v = 45.0;
  double min_el = -18.0, max_el = 18.0;
  double min_dist = 1.0, max_dist = 2.2;
};

SceneSpec make_random_scene(const RandomSceneParams& p);

// A scene with the head trajectory resolved; everything downstream is a
// pure function of it.
class Scene {
 public:
  explicit Scene(SceneSpec spec);

  const SceneSpec& spec() const { return spec_; }

  // Head orientation at a frame boundary (index 0..frames).
  double yaw_at(int boundary) const { return yaw_[size_t(boundary)]; }
  double pitch_at(int boundary) const { return pitch_[size_t(boundary)]; }

  // Device-frame direction of a source at a frame midpoint.
  Direction source_direction(int source, int frame) const;
  bool source_active(int source, int frame) const;
  bool wearer_active(int frame) const;

  WavData synthesize_audio() const;
  Image8 render_frame(int frame, FrameLabel* label) const;

 private:
  Vec3 source_world(int source, double t) const;
  Vec3 world_to_device(const Vec3& w, double t_frames) const;

  SceneSpec spec_;
  std::vector<double> yaw_, pitch_;  // per frame boundary
};

// Writes audio.wav, frames/, labels.jsonl and meta.json under out_dir.
void generate_dataset(const SceneSpec& spec, const std::string& out_dir);

Direction vec_to_direction(const Vec3& v);
Vec3 direction_to_vec(const Direction& d, double distance = 1.0);

}  // namespace asl::sim
