// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include "asl/net.hpp"

#include <cmath>

namespace asl {

nn::Var ParamStore::create(const std::string& name, std::vector<int> dims,
                           int fan_in, uint64_t seed) {
  auto var = nn::parameter(
      name, nn::kaiming_uniform<float>(dims, fan_in, seed, name));
  items_.push_back(var);
  return var;
}

nn::Var ParamStore::create_zeros(const std::string& name,
                                 std::vector<int> dims) {
  auto var = nn::parameter(name, Tensor(std::move(dims)));
  items_.push_back(var);
  return var;
}

nn::Var ParamStore::find(const std::string& name) const {
  for (const auto& v : items_)
    if (v->name == name) return v;
  throw UsageError("parameter '" + name + "' not found");
}

Conv make_conv(ParamStore* store, const std::string& name, int in_planes,
               int out_planes, int kernel, int stride, int pad,
               uint64_t seed) {
  Conv c;
  c.w = store->create(name + ".w", {out_planes, in_planes, kernel, kernel},
                      in_planes * kernel * kernel, seed);
  c.b = store->create_zeros(name + ".b", {out_planes});
  c.stride = stride;
  c.pad = pad;
  return c;
}

Linear make_linear(ParamStore* store, const std::string& name, int in, int out,
                   uint64_t seed) {
  Linear l;
  l.w = store->create(name + ".w", {out, in}, in, seed);
  l.b = store->create_zeros(name + ".b", {out});
  return l;
}

nn::Var ResBlockB::operator()(const nn::Var& x) const {
  return nn::relu(nn::add(conv2(nn::relu(conv1(x))), x));
}

nn::Var ResBlockC::operator()(const nn::Var& x) const {
  return nn::relu(nn::add(conv2(nn::relu(conv1(x))), proj(x)));
}

AudioNet::AudioNet(const AudioNetConfig& cfg, uint64_t seed,
                   ParamStore* store)
    : cfg_(cfg) {
  int in = cfg.in_planes;
  for (int i = 0; i < 4; ++i) {
    conv_[i] = make_conv(store, "audio.conv" + std::to_string(i + 1), in,
                         cfg.stage_planes[size_t(i)], 3, 2, 1, seed);
    in = cfg.stage_planes[size_t(i)];
  }
  int side = cfg.feat_size;
  for (int i = 0; i < 4; ++i) side = kern::conv_out_extent(side, 3, 2, 1);
  flat_size_ = side * side * cfg.stage_planes[3];
  fc_sphere1_ =
      make_linear(store, "audio.fc_sphere1", flat_size_, cfg.fc_hidden, seed);
  fc_sphere2_ = make_linear(store, "audio.fc_sphere2", cfg.fc_hidden,
                            2 * (kSphereEl / 2) * (kSphereAz / 2), seed);
  fc_wearer1_ = make_linear(store, "audio.fc_wearer1", flat_size_,
                            cfg.wearer_hidden, seed);
  fc_wearer2_ = make_linear(store, "audio.fc_wearer2", cfg.wearer_hidden, 2,
                            seed);
}

nn::Var AudioNet::extract(const nn::Var& features) const {
  if (features->dims().size() != 4 || features->dims()[1] != cfg_.in_planes)
    throw ShapeError("audio extractor: want {N," +
                     std::to_string(cfg_.in_planes) + ",S,S}, got " +
                     features->value.shape_str());
  ++extractor_evals_;
  nn::Var h = features;
  for (int i = 0; i < 4; ++i) h = nn::relu(conv_[i](h));
  return nn::reshape(h, {h->dims()[0], flat_size_});
}

nn::Var AudioNet::sphere_logits(const nn::Var& extracted) const {
  const int n = extracted->dims()[0];
  nn::Var h = nn::relu(fc_sphere1_(extracted));
  h = fc_sphere2_(h);
  h = nn::reshape(h, {n, 2, kSphereEl / 2, kSphereAz / 2});
  return nn::resize_bilinear(h, kSphereEl, kSphereAz);
}

nn::Var AudioNet::wearer_logits(const nn::Var& extracted) const {
  return fc_wearer2_(nn::relu(fc_wearer1_(extracted)));
}

AvNet::AvNet(const AvNetConfig& cfg, uint64_t seed, ParamStore* store) {
  const int p1 = cfg.planes1, p2 = cfg.planes2;
  c1_.conv1 = make_conv(store, "av.c1.conv1", 4, p1, 3, 2, 1, seed);
  c1_.conv2 = make_conv(store, "av.c1.conv2", p1, p1, 3, 1, 1, seed);
  c1_.proj = make_conv(store, "av.c1.proj", 4, p1, 1, 2, 0, seed);
  b1_.conv1 = make_conv(store, "av.b1.conv1", p1, p1, 3, 1, 1, seed);
  b1_.conv2 = make_conv(store, "av.b1.conv2", p1, p1, 3, 1, 1, seed);
  c2_.conv1 = make_conv(store, "av.c2.conv1", p1, p2, 3, 2, 1, seed);
  c2_.conv2 = make_conv(store, "av.c2.conv2", p2, p2, 3, 1, 1, seed);
  c2_.proj = make_conv(store, "av.c2.proj", p1, p2, 1, 2, 0, seed);
  b2_.conv1 = make_conv(store, "av.b2.conv1", p2, p2, 3, 1, 1, seed);
  b2_.conv2 = make_conv(store, "av.b2.conv2", p2, p2, 3, 1, 1, seed);
  tail1_ = make_conv(store, "av.tail1", p2, p2, 3, 1, 1, seed);
  tail2_ = make_conv(store, "av.tail2", p2, p2, 3, 1, 1, seed);
  head_ = make_conv(store, "av.head", p2, 2, 1, 1, 0, seed);
}

nn::Var AvNet::forward(const nn::Var& x, int out_h, int out_w) const {
  if (x->dims().size() != 4 || x->dims()[1] != 4)
    throw ShapeError("av net: want {N,4,H,W}, got " + x->value.shape_str());
  nn::Var h = c1_(x);
  h = b1_(h);
  h = c2_(h);
  h = b2_(h);
  h = nn::relu(tail1_(h));
  h = nn::relu(tail2_(h));
  h = nn::resize_bilinear(h, out_h, out_w);
  return head_(h);
}

int feature_plane_count(NetFeature f, int channels) {
  return f == NetFeature::kSpec ? 2 * channels : 1;
}

Model Model::build(const RunConfig& run) {
  run.validate();
  Model m;
  m.run = run;
  m.camera = {run.fov_h_deg, run.fov_v_deg, run.work_w, run.work_h};
  m.feature = parse_net_feature(run.feature);
  m.feature_planes = feature_plane_count(m.feature, run.channels);
  AudioNetConfig acfg;
  acfg.in_planes = m.feature_planes;
  m.audio = std::make_unique<AudioNet>(acfg, run.seed, &m.params);
  m.av = std::make_unique<AvNet>(AvNetConfig{}, run.seed, &m.params);
  return m;
}

FeatureConfig Model::feature_config() const {
  return FeatureConfig{};  // paper defaults
}

nn::Var av_input(const nn::Var& sphere_logits, const nn::Var& frames,
                 const CameraModel& cam, int work_w, int work_h) {
  const auto& fd = frames->dims();
  if (fd.size() != 4 || fd[1] != 3 || fd[2] != work_h || fd[3] != work_w)
    throw ShapeError("av_input: frames must be {N,3," +
                     std::to_string(work_h) + "," + std::to_string(work_w) +
                     "}, got " + frames->value.shape_str());
  nn::Var p = nn::take_plane(nn::softmax_planes(sphere_logits), kPlaneActive);
  nn::Var crop =
      nn::sample_rect(p, fov_rect_map(cam, work_w, work_h), work_h, work_w);
  return nn::concat_planes(frames, crop);
}

ForwardResult full_forward(const Model& model, const AudioFeatureMap& feat,
                           const Image8& frame,
                           const std::vector<HeadBox>* boxes) {
  nn::NoGradGuard no_grad;
  const int ww = model.run.work_w, wh = model.run.work_h;

  Tensor fx = feat.planes.reshaped(
      {1, feat.plane_count(), feat.height(), feat.width()});
  nn::Var features = nn::constant(std::move(fx));
  nn::Var extracted = model.audio->extract(features);
  nn::Var sphere = model.audio->sphere_logits(extracted);
  nn::Var wearer = model.audio->wearer_logits(extracted);

  Image8 prepared = frame;
  if (model.run.use_box_mask && boxes) prepared = mask_background(frame, *boxes);
  if (prepared.w != ww || prepared.h != wh)
    prepared = resize_image(prepared, ww, wh);
  nn::Var frames = nn::constant(
      image_to_tensor(prepared).reshaped({1, 3, wh, ww}));

  nn::Var x4 = av_input(sphere, frames, model.camera, ww, wh);
  nn::Var fov = model.av->forward(x4, wh, ww);

  ForwardResult out;
  out.sphere_logits = sphere->value.reshaped({2, kSphereEl, kSphereAz});
  out.fov_logits = fov->value.reshaped({2, wh, ww});
  const Tensor wl = wearer->value;  // {1,2}
  const double a = wl[0], i = wl[1];
  const double mx = std::max(a, i);
  out.wearer_probability =
      std::exp(a - mx) / (std::exp(a - mx) + std::exp(i - mx));

  SphericalVoiceMap smap(out.sphere_logits);
  FovHeatMap fmap{out.fov_logits, model.camera};
  out.fused = fuse(smap, fmap);
  return out;
}

Tensor fov_score_map(const Model& model, const ForwardResult& out) {
  SphericalVoiceMap smap(out.sphere_logits);
  Tensor crop = crop_to_fov(smap, model.camera, model.run.work_w,
                            model.run.work_h);
  Tensor pf = probability(out.fov_logits);
  Tensor score({model.run.work_h, model.run.work_w});
  for (int y = 0; y < model.run.work_h; ++y)
    for (int x = 0; x < model.run.work_w; ++x)
      score.at2(y, x) = crop.at2(y, x) + pf.at3(kPlaneActive, y, x);
  return score;
}

Image8 mask_background(const Image8& frame, const std::vector<HeadBox>& boxes) {
  Image8 out(frame.w, frame.h, frame.channels);
  for (const auto& b : boxes) {
    const int x0 = std::max(0, b.x);
    const int y0 = std::max(0, b.y);
    const int x1 = std::min(frame.w, b.x + b.w);
    const int y1 = std::min(frame.h, b.y + b.h);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x)
        for (int c = 0; c < frame.channels; ++c)
          out.at(x, y, c) = frame.at(x, y, c);
  }
  return out;
}

}  // namespace asl
