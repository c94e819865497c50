// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// The two-branch model. The audio branch maps a feature image to a
// 360-degree two-plane logit grid plus a wearer-voice logit pair from
// shared extractor features. The audio-visual branch stacks the cropped
// sphere probability under the RGB frame and refines activity inside the
// camera FOV with a small fully-convolutional residual net.

#pragma once

#include <string>
#include <vector>

#include "asl/config.hpp"
#include "asl/features.hpp"
#include "asl/image.hpp"
#include "asl/nn.hpp"
#include "asl/sphere.hpp"

namespace asl {

// Owns named trainable parameters in construction order.
class ParamStore {
 public:
  nn::Var create(const std::string& name, std::vector<int> dims, int fan_in,
                 uint64_t seed);
  nn::Var create_zeros(const std::string& name, std::vector<int> dims);
  nn::Var find(const std::string& name) const;
  const std::vector<nn::Var>& items() const { return items_; }
  std::vector<nn::Var> vars() const { return items_; }

 private:
  std::vector<nn::Var> items_;
};

struct Conv {
  nn::Var w, b;
  int stride = 1, pad = 0;
  nn::Var operator()(const nn::Var& x) const {
    return nn::conv2d(x, w, b, stride, pad);
  }
};

struct Linear {
  nn::Var w, b;
  nn::Var operator()(const nn::Var& x) const { return nn::fc(x, w, b); }
};

Conv make_conv(ParamStore* store, const std::string& name, int in_planes,
               int out_planes, int kernel, int stride, int pad, uint64_t seed);
Linear make_linear(ParamStore* store, const std::string& name, int in,
                   int out, uint64_t seed);

// Residual blocks of the audio-visual net. B keeps resolution; C halves it
// and projects the skip with a strided 1x1 conv.
struct ResBlockB {
  Conv conv1, conv2;
  nn::Var operator()(const nn::Var& x) const;
};
struct ResBlockC {
  Conv conv1, conv2, proj;
  nn::Var operator()(const nn::Var& x) const;
};

struct AudioNetConfig {
  int in_planes = 1;
  std::array<int, 4> stage_planes{16, 32, 64, 128};
  int feat_size = 128;   // square input side
  int fc_hidden = 512;
  int wearer_hidden = 64;
};

// Extractor (four stride-2 conv stages) shared by the sphere head and the
// wearer head.
class AudioNet {
 public:
  AudioNet(const AudioNetConfig& cfg, uint64_t seed, ParamStore* store);

  nn::Var extract(const nn::Var& features) const;       // -> {N, flat}
  nn::Var sphere_logits(const nn::Var& extracted) const;  // -> {N,2,90,180}
  nn::Var wearer_logits(const nn::Var& extracted) const;  // -> {N,2}

  int flat_size() const { return flat_size_; }
  int64_t extractor_evals() const { return extractor_evals_; }

 private:
  AudioNetConfig cfg_;
  Conv conv_[4];
  Linear fc_sphere1_, fc_sphere2_;
  Linear fc_wearer1_, fc_wearer2_;
  int flat_size_ = 0;
  mutable int64_t extractor_evals_ = 0;
};

struct AvNetConfig {
  int planes1 = 16;
  int planes2 = 32;
};

class AvNet {
 public:
  AvNet(const AvNetConfig& cfg, uint64_t seed, ParamStore* store);

  // x: {N,4,H,W} -> logits {N,2,H,W}
  nn::Var forward(const nn::Var& x, int out_h, int out_w) const;

 private:
  ResBlockC c1_, c2_;
  ResBlockB b1_, b2_;
  Conv tail1_, tail2_, head_;
};

// Full model plus the geometry it was built for.
struct Model {
  RunConfig run;
  CameraModel camera;
  NetFeature feature = NetFeature::kCorEng;
  int feature_planes = 1;
  ParamStore params;
  std::unique_ptr<AudioNet> audio;
  std::unique_ptr<AvNet> av;

  static Model build(const RunConfig& run);
  FeatureConfig feature_config() const;
};

// Number of feature planes entering the extractor for a feature choice.
int feature_plane_count(NetFeature f, int channels);

// Differentiable assembly of the AV input: crop the active-probability
// plane of the sphere logits to the FOV and stack it under the frame.
nn::Var av_input(const nn::Var& sphere_logits, const nn::Var& frames,
                 const CameraModel& cam, int work_w, int work_h);

struct ForwardResult {
  Tensor sphere_logits;  // {2,90,180}
  Tensor fov_logits;     // {2,work_h,work_w}
  double wearer_probability = 0;
  Tensor fused;          // {90,180}, probability scale
};

// Single-frame inference. `frame` is the full-resolution RGB frame; it is
// rescaled to the working resolution (after optional box masking).
ForwardResult full_forward(const Model& model, const AudioFeatureMap& feat,
                           const Image8& frame,
                           const std::vector<HeadBox>* boxes = nullptr);

// Image-space score map (working resolution): cropped sphere probability
// plus refined FOV probability; what box scoring consumes after upsampling.
Tensor fov_score_map(const Model& model, const ForwardResult& out);

// Pixels outside every box are set to black.
Image8 mask_background(const Image8& frame, const std::vector<HeadBox>& boxes);

}  // namespace asl
